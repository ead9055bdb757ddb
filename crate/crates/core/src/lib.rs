//! Federated decision-tree aggregation.
//!
//! Every client trains a local decision tree (multiway ID3 or binary CART) on
//! rows it never shares. The server cross-evaluates the trees on every
//! client's data, filters out the weak ones, decomposes the survivors into
//! rule sets, merges those rule sets by a compatibility-checked Cartesian
//! product and grows a single global tree of the same kind from the merged
//! rules. A count-aggregation Federated-ID3 baseline is included for
//! comparison.
//!
//! The crate is organized by stage:
//!
//! - [`data`]: CSV loading, preprocessing, client partitioning, folds
//! - [`dtree`]: local tree training, prediction, explanation, JSON format
//! - [`rules`]: rule extraction, compatibility and merging
//! - [`aggregation`]: tree filtering and global tree construction
//! - [`federation`]: the simulated client/server protocol and experiments
//! - [`fedid3`]: the Federated-ID3 baseline
//! - [`metrics`]: accuracy, macro-F1 and fold/client averaging
//! - [`cli`]: the `run`, `sweep` and `explain` commands

pub mod aggregation;
pub mod cli;
pub mod data;
pub mod dtree;
mod error;
pub mod federation;
pub mod fedid3;
pub mod metrics;
pub mod rules;

pub use error::{Error, Result};

pub use aggregation::{apply_filter, build_global_tree, score_trees, CrossEvalMatrix, FilterPolicy};
pub use data::{Dataset, DataView, FeatureKind, Schema, Value};
pub use dtree::{DecisionTree, TrainParams, TreeKind};
pub use metrics::Metrics;
pub use rules::{Condition, Rule, RuleSet};
