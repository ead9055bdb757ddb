//! Tabular data: loading, preprocessing per tree type, client partitioning
//! and stratified folds. Everything past loading works on index views, so a
//! [`Dataset`] is never copied per client.

mod folds;
mod io;
mod manifest;
mod partition;
mod preprocess;
mod schema;

pub use folds::{kfold, Fold, FoldSplit};
pub use io::{load_csv, load_csv_with, read_csv, write_csv, CsvOptions};
pub use manifest::{FeatureSpec, Manifest, DATA_DIR_ENV};
pub use partition::{partition, PartitionMode, PartitionPlan, NON_IID_ALPHA};
pub use preprocess::{discretize_numeric, encode_ordinal, feature_encodings, FeatureEncoding, QuantileBins};
pub use schema::{DataView, Dataset, Feature, FeatureKind, Row, Schema, Value};

/// Default number of quantile bins used when numeric features are made
/// categorical for ID3.
pub const DEFAULT_BINS: usize = 5;
