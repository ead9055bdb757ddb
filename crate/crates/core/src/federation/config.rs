use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregation::FilterPolicy;
use crate::data::{PartitionMode, DATA_DIR_ENV, DEFAULT_BINS};
use crate::dtree::TreeKind;
use crate::rules::DEFAULT_RULE_CAP;
use crate::{Error, Result};

/// What to train: local trees of one kind, or only the Federated-ID3
/// baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfigTreeKind {
    Id3,
    Cart,
    Fedid3,
}

impl ConfigTreeKind {
    pub fn local_kind(self) -> Option<TreeKind> {
        match self {
            ConfigTreeKind::Id3 => Some(TreeKind::Id3),
            ConfigTreeKind::Cart => Some(TreeKind::Cart),
            ConfigTreeKind::Fedid3 => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConfigTreeKind::Id3 => "id3",
            ConfigTreeKind::Cart => "cart",
            ConfigTreeKind::Fedid3 => "fedid3",
        }
    }
}

fn default_folds() -> usize {
    10
}

fn default_rule_cap() -> usize {
    DEFAULT_RULE_CAP
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

fn default_min_instances() -> usize {
    5
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset manifest: a path, or a name looked up as `<name>.json` in the
    /// data directory.
    pub dataset: String,
    pub tree_kind: ConfigTreeKind,
    pub clients: usize,
    pub distribution: PartitionMode,
    #[serde(default)]
    pub filter: FilterPolicy,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rule_cap")]
    pub rule_cap: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_min_instances")]
    pub min_instances: usize,
    /// Also run Federated-ID3 alongside ID3/CART runs.
    #[serde(default = "default_true")]
    pub compare_fedid3: bool,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<String>, tree_kind: ConfigTreeKind, clients: usize, distribution: PartitionMode) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            tree_kind,
            clients,
            distribution,
            filter: FilterPolicy::default(),
            folds: default_folds(),
            seed: 0,
            rule_cap: default_rule_cap(),
            bins: default_bins(),
            min_instances: default_min_instances(),
            compare_fedid3: true,
            base_dir: PathBuf::new(),
        }
    }

    /// Parses a config document; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("{path}: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.clients < 1 {
            return Err(Error::Config("clients: must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config("folds: must be at least 2".into()));
        }
        if self.rule_cap < 1 {
            return Err(Error::Config("rule_cap: must be positive".into()));
        }
        if self.bins < 2 {
            return Err(Error::Config("bins: must be at least 2".into()));
        }
        self.filter.validate()
    }

    /// Manifest path for `dataset`: as given (absolute or relative to the
    /// config file), then `<name>` or `<name>.json` under
    /// `$FEDTREE_DATA_DIR`, then `<name>.json` next to the config.
    pub fn manifest_path(&self) -> Result<PathBuf> {
        let given = Path::new(&self.dataset);
        let mut candidates = vec![given.to_path_buf(), self.base_dir.join(given)];
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
            let dir = PathBuf::from(dir);
            candidates.push(dir.join(given));
            candidates.push(dir.join(format!("{}.json", self.dataset)));
        }
        candidates.push(self.base_dir.join(format!("{}.json", self.dataset)));
        candidates
            .into_iter()
            .find(|p| p.is_file())
            .ok_or_else(|| Error::Config(format!("dataset: no manifest found for '{}'", self.dataset)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json(
            r#"{"dataset":"car","tree_kind":"cart","clients":5,"distribution":"iid"}"#,
        )
        .unwrap();
        assert_eq!((c.folds, c.rule_cap, c.bins, c.seed), (10, 50_000, 5, 0));
        assert_eq!(c.filter, FilterPolicy::default());
    }

    #[test]
    fn bad_tree_kind_names_the_field() {
        let err = ExperimentConfig::from_json(
            r#"{"dataset":"car","tree_kind":"c45","clients":5,"distribution":"iid"}"#,
        )
        .unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("tree_kind"), "{err}");
    }

    #[test]
    fn unknown_field_rejected() {
        let err = ExperimentConfig::from_json(
            r#"{"dataset":"car","tree_kind":"id3","clients":5,"distribution":"iid","colour":1}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig::new("nursery", ConfigTreeKind::Id3, 2, PartitionMode::NonIid);
        c.filter.statistic = crate::aggregation::Statistic::Percentile(25.0);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
    }
}
