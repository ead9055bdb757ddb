//! The simulated federation: n clients and one server exchanging serialized
//! trees, rules and metrics through in-memory mailboxes, in one round.
//!
//! An [`Experiment`] fixes the dataset, the client shares and every client's
//! folds; [`Experiment::run_round`] runs the protocol on one fold and
//! [`run_experiment`] averages all folds per client, then over clients.

mod config;
mod protocol;
mod round;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    discretize_numeric, encode_ordinal, feature_encodings, kfold, partition, Dataset, FeatureEncoding, FoldSplit, Manifest,
    PartitionPlan,
};
use crate::dtree::{TrainParams, TreeKind};
use crate::metrics::{two_level_mean, Metrics};
use crate::{Error, Result};

pub use config::{ConfigTreeKind, ExperimentConfig};
pub use protocol::{Envelope, Message, Network, Participant, Payload, Transcript};
pub use round::{PhaseTimings, RoundOptions, RoundReport, ServerSummary};

/// A client whose share was too small for the requested fold count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldReduction {
    pub client: usize,
    pub rows: usize,
    pub folds: usize,
}

/// Dataset, shares and folds for one configuration, ready to run rounds.
#[derive(Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub dataset_name: String,
    kind: Option<TreeKind>,
    /// Data as the local trees see it (categorical for ID3, ordinal for CART).
    local: Option<Dataset>,
    /// Discretized data for Federated-ID3.
    categorical: Option<Dataset>,
    raw_shape: (usize, usize, usize),
    encodings: Vec<FeatureEncoding>,
    shares: Vec<Vec<usize>>,
    client_folds: Vec<FoldSplit>,
    pub fold_reductions: Vec<FoldReduction>,
    pub params: TrainParams,
    pub fed_params: TrainParams,
}

fn fold_seed(seed: u64, client: usize) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(client as u64 + 1)
}

impl Experiment {
    /// Loads the dataset named by the config and prepares the experiment.
    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let manifest = Manifest::from_file(config.manifest_path()?)?;
        let data = manifest.load()?;
        Self::new(config, &data, &manifest.name)
    }

    /// Prepares an experiment over an already loaded dataset.
    pub fn new(config: &ExperimentConfig, raw: &Dataset, name: &str) -> Result<Self> {
        config.validate()?;
        let kind = config.tree_kind.local_kind();
        let needs_fed = config.tree_kind == ConfigTreeKind::Fedid3 || config.compare_fedid3;
        let categorical = if needs_fed || kind == Some(TreeKind::Id3) {
            Some(discretize_numeric(raw, config.bins)?)
        } else {
            None
        };
        let local = match kind {
            Some(TreeKind::Id3) => categorical.clone(),
            Some(TreeKind::Cart) => Some(encode_ordinal(raw)?),
            None => None,
        };
        let categorical = if needs_fed { categorical } else { None };

        let plan = PartitionPlan {
            mode: config.distribution,
            clients: config.clients,
            seed: config.seed,
            min_instances: config.min_instances,
        };
        let shares = partition(raw, &plan)?;
        let mut client_folds = Vec::with_capacity(shares.len());
        let mut fold_reductions = Vec::new();
        for (c, share) in shares.iter().enumerate() {
            if share.len() < 2 {
                return Err(Error::Config(format!("client {c} holds {} rows; need at least 2", share.len())));
            }
            let k = config.folds.min(share.len());
            if k < config.folds {
                fold_reductions.push(FoldReduction { client: c, rows: share.len(), folds: k });
            }
            let classes: Vec<usize> = share.iter().map(|&i| raw.row(i).class).collect();
            client_folds.push(kfold(share, &classes, k, fold_seed(config.seed, c))?);
        }

        let f = raw.schema().feature_count();
        let params = TrainParams::for_kind(kind.unwrap_or(TreeKind::Id3), f);
        Ok(Experiment {
            config: config.clone(),
            dataset_name: name.to_string(),
            kind,
            local,
            categorical,
            raw_shape: (raw.len(), f, raw.schema().class_count()),
            encodings: feature_encodings(raw, kind != Some(TreeKind::Cart), config.bins),
            shares,
            client_folds,
            fold_reductions,
            params,
            fed_params: TrainParams::id3(f),
        })
    }

    pub fn client_count(&self) -> usize {
        self.shares.len()
    }

    pub fn shares(&self) -> &[Vec<usize>] {
        &self.shares
    }

    fn fold_of(&self, client: usize, fold: usize) -> &crate::data::Fold {
        let fs = &self.client_folds[client];
        &fs.folds[fold % fs.fold_count()]
    }

    pub fn train_rows(&self, client: usize, fold: usize) -> &[usize] {
        &self.fold_of(client, fold).train
    }

    pub fn test_rows(&self, client: usize, fold: usize) -> &[usize] {
        &self.fold_of(client, fold).test
    }

    /// Dataset the local trees are trained on.
    pub fn local_dataset(&self) -> Option<&Dataset> {
        self.local.as_ref()
    }

    pub fn categorical_dataset(&self) -> Option<&Dataset> {
        self.categorical.as_ref()
    }

    /// How raw input columns map to the values the local trees see.
    pub fn encodings(&self) -> &[FeatureEncoding] {
        &self.encodings
    }

    /// Every fold, then the fold-then-client averages per variant.
    pub fn run(&self) -> Result<ExperimentReport> {
        self.run_with_rounds().map(|(report, _)| report)
    }

    /// Like [`Experiment::run`], also returning each fold's round.
    pub fn run_with_rounds(&self) -> Result<(ExperimentReport, Vec<Result<RoundReport>>)> {
        let rounds: Vec<Result<RoundReport>> = (0..self.config.folds)
            .into_par_iter()
            .map(|f| self.run_round(f, &RoundOptions::default()))
            .collect();
        let report = self.summarize(&rounds)?;
        Ok((report, rounds))
    }

    fn variant_labels(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if let Some(kind) = self.kind {
            let k = match kind {
                TreeKind::Id3 => "ID3",
                TreeKind::Cart => "CART",
            };
            out.push(("local", format!("Baseline ({k})")));
            out.push(("global", format!("Global ({k})")));
        }
        if self.categorical.is_some() {
            out.push(("fedid3", "Federated-ID3".to_string()));
        }
        out
    }

    fn summarize(&self, rounds: &[Result<RoundReport>]) -> Result<ExperimentReport> {
        let n = self.client_count();
        let mut folds = Vec::new();
        let mut timings = Vec::new();
        let mut ok: Vec<&RoundReport> = Vec::new();
        for (fold, r) in rounds.iter().enumerate() {
            match r {
                Ok(rep) => {
                    folds.push(FoldSummary {
                        fold,
                        error: None,
                        server: rep.server.clone(),
                        messages: rep.messages,
                        fedid3_exchanges: rep.fedid3_stats.map(|s| s.exchanges),
                    });
                    timings.push(rep.timings);
                    ok.push(rep);
                }
                Err(e) => {
                    folds.push(FoldSummary { fold, error: Some(e.to_string()), server: None, messages: 0, fedid3_exchanges: None });
                    timings.push(PhaseTimings::default());
                }
            }
        }
        if ok.is_empty() {
            let first = folds.iter().find_map(|f| f.error.clone()).unwrap_or_default();
            return Err(Error::Contract(format!("every fold failed; first error: {first}")));
        }

        let variants = self
            .variant_labels()
            .into_iter()
            .map(|(key, label)| {
                let pick = |r: &&RoundReport| match key {
                    "local" => r.local.clone(),
                    "global" => r.global.clone(),
                    _ => r.fedid3.clone(),
                };
                let per_round: Vec<Vec<Metrics>> = ok.iter().filter_map(pick).collect();
                let per_client: Vec<Vec<Metrics>> =
                    (0..n).map(|c| per_round.iter().map(|r| r[c]).collect()).collect();
                match two_level_mean(&per_client) {
                    Ok(m) => VariantResult {
                        variant: label,
                        metrics: Some(m),
                        per_client: per_client.iter().map(|f| crate::metrics::mean(f).ok()).collect(),
                        error: None,
                    },
                    Err(e) => VariantResult { variant: label, metrics: None, per_client: Vec::new(), error: Some(e.to_string()) },
                }
            })
            .collect();

        let mut notes = vec![format!(
            "local trees: max_depth {} (ID3 uses ceil(|F|/2) = ceil({}/2))",
            self.params.max_depth, self.raw_shape.1
        )];
        notes.push("cross-evaluation scores each tree on every client's fold-train split".into());
        for r in &self.fold_reductions {
            notes.push(format!("client {} has {} rows and uses {} folds", r.client, r.rows, r.folds));
        }
        Ok(ExperimentReport {
            config: self.config.clone(),
            dataset: DatasetInfo {
                name: self.dataset_name.clone(),
                rows: self.raw_shape.0,
                features: self.raw_shape.1,
                classes: self.raw_shape.2,
            },
            params: self.kind.map(|_| self.params),
            client_rows: self.shares.iter().map(Vec::len).collect(),
            fold_reductions: self.fold_reductions.clone(),
            variants,
            folds,
            notes,
            timings,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub rows: usize,
    pub features: usize,
    pub classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantResult {
    pub variant: String,
    /// Fold mean per client, then unweighted mean over clients.
    pub metrics: Option<Metrics>,
    pub per_client: Vec<Option<Metrics>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub error: Option<String>,
    pub server: Option<ServerSummary>,
    pub messages: usize,
    pub fedid3_exchanges: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub dataset: DatasetInfo,
    pub params: Option<TrainParams>,
    pub client_rows: Vec<usize>,
    pub fold_reductions: Vec<FoldReduction>,
    pub variants: Vec<VariantResult>,
    pub folds: Vec<FoldSummary>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub timings: Vec<PhaseTimings>,
}

impl ExperimentReport {
    pub fn variant(&self, prefix: &str) -> Option<&VariantResult> {
        self.variants.iter().find(|v| v.variant.starts_with(prefix))
    }

    /// Metrics of the first variant whose label starts with `prefix`.
    pub fn metrics(&self, prefix: &str) -> Option<Metrics> {
        self.variant(prefix).and_then(|v| v.metrics)
    }

    /// True when every variant produced metrics.
    pub fn complete(&self) -> bool {
        self.variants.iter().all(|v| v.metrics.is_some())
    }
}

/// Loads the config's dataset and runs one round on `fold`.
pub fn run_round(config: &ExperimentConfig, fold: usize) -> Result<RoundReport> {
    Experiment::from_config(config)?.run_round(fold, &RoundOptions::default())
}

/// Loads the config's dataset and runs every fold.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    Experiment::from_config(config)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Feature, PartitionMode, Row, Schema, Value};
    use crate::dtree::DecisionTree;

    fn toy(n: usize) -> Dataset {
        let schema = Schema {
            features: vec![
                Feature::categorical("a", &["0", "1", "2"]),
                Feature::categorical("b", &["0", "1"]),
                Feature::numeric("c"),
            ],
            class_names: vec!["x".into(), "y".into(), "z".into()],
        };
        let rows = (0..n)
            .map(|i| {
                let a = (i * 7 % 3) as u32;
                let b = (i / 3 % 2) as u32;
                let c = (i * 13 % 17) as f64;
                let class = if a == 0 { 0 } else if c > 8.0 { 1 } else { 2 - b as usize };
                let class = if i % 11 == 0 { (class + 1) % 3 } else { class };
                Row { values: vec![Value::Cat(a), Value::Cat(b), Value::Num(c)], class }
            })
            .collect();
        Dataset::new(schema, rows).unwrap()
    }

    fn cfg(kind: ConfigTreeKind, clients: usize) -> ExperimentConfig {
        ExperimentConfig { folds: 3, ..ExperimentConfig::new("toy", kind, clients, PartitionMode::Iid) }
    }

    #[test]
    fn message_audit_is_four_n() {
        for kind in [ConfigTreeKind::Id3, ConfigTreeKind::Cart] {
            for n in [1, 2, 5] {
                let e = Experiment::new(&cfg(kind, n), &toy(120), "toy").unwrap();
                let r = e.run_round(0, &RoundOptions::default()).unwrap();
                assert_eq!(r.transcript.client_server_count(), 4 * n);
                assert_eq!(r.transcript.len(), 4 * n);
                for name in ["TreeUpload", "TreeBroadcast", "EvalReport", "GlobalModel"] {
                    assert_eq!(r.transcript.count(name), n);
                }
            }
        }
    }

    #[test]
    fn payloads_are_models_not_rows() {
        let e = Experiment::new(&cfg(ConfigTreeKind::Id3, 3), &toy(90), "toy").unwrap();
        let r = e.run_round(1, &RoundOptions::default()).unwrap();
        for env in &r.transcript.messages {
            for p in env.message.payloads() {
                let ok = DecisionTree::deserialize(p).is_ok()
                    || crate::rules::RuleSet::deserialize(p, TreeKind::Id3).is_ok();
                assert!(ok, "payload is neither a tree nor a rule set");
            }
        }
    }

    #[test]
    fn single_client_identity() {
        let mut c = cfg(ConfigTreeKind::Cart, 1);
        c.filter.statistic = crate::aggregation::Statistic::None;
        let e = Experiment::new(&c, &toy(100), "toy").unwrap();
        let r = e.run_round(0, &RoundOptions::default()).unwrap();
        assert_eq!(r.local, r.global);
    }

    #[test]
    fn corrupt_upload_excludes_client() {
        let e = Experiment::new(&cfg(ConfigTreeKind::Id3, 3), &toy(120), "toy").unwrap();
        let r = e.run_round(0, &RoundOptions { corrupt_uploads: vec![1] }).unwrap();
        let s = r.server.unwrap();
        assert_eq!(s.participants, vec![0, 2]);
        assert!(!s.survivors.contains(&1));
        assert_eq!(r.global.unwrap().len(), 3);
        assert_eq!(r.messages, 12);
    }

    #[test]
    fn deterministic_report() {
        let e = Experiment::new(&cfg(ConfigTreeKind::Id3, 2), &toy(150), "toy").unwrap();
        let a = serde_json::to_string(&e.run().unwrap()).unwrap();
        let b = serde_json::to_string(&e.run().unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn report_shape() {
        let e = Experiment::new(&cfg(ConfigTreeKind::Id3, 2), &toy(150), "toy").unwrap();
        let rep = e.run().unwrap();
        assert_eq!(rep.variants.len(), 3);
        assert_eq!(rep.variant("Baseline").unwrap().per_client.len(), 2);
        assert!(rep.metrics("Global").is_some());
        assert!(rep.complete());
        assert_eq!(rep.folds.len(), 3);
    }

    #[test]
    fn fedid3_only_runs_no_protocol() {
        let e = Experiment::new(&cfg(ConfigTreeKind::Fedid3, 2), &toy(90), "toy").unwrap();
        let r = e.run_round(0, &RoundOptions::default()).unwrap();
        assert!(r.server.is_none() && r.fedid3.is_some());
        assert!(r.transcript.is_empty());
    }
}
