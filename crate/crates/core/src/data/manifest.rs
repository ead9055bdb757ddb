use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::io::{load_csv_with, CsvOptions};
use super::schema::{Dataset, Feature, FeatureKind, Schema};
use crate::{Error, Result};

/// Environment variable naming the directory that holds dataset files.
pub const DATA_DIR_ENV: &str = "FEDTREE_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    /// Optional fixed symbol order; unlisted symbols are appended on load.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub symbols: Vec<String>,
}

/// JSON description of a dataset file: where it is, its feature kinds and
/// which column holds the class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub path: PathBuf,
    #[serde(default = "default_header")]
    pub header: bool,
    pub features: Vec<FeatureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_column: Option<usize>,
    #[serde(skip)]
    base_dir: PathBuf,
}

fn default_header() -> bool {
    true
}

impl Manifest {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    pub fn schema_hint(&self) -> Schema {
        Schema {
            features: self
                .features
                .iter()
                .map(|f| Feature { name: f.name.clone(), kind: f.kind, symbols: f.symbols.clone() })
                .collect(),
            class_names: self.class_names.clone().unwrap_or_default(),
        }
    }

    /// Resolves the data file: absolute paths as given, otherwise under
    /// `$FEDTREE_DATA_DIR` when the file exists there, else next to the
    /// manifest.
    pub fn data_path(&self) -> PathBuf {
        if self.path.is_absolute() {
            return self.path.clone();
        }
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
            let candidate = Path::new(&dir).join(&self.path);
            if candidate.exists() {
                return candidate;
            }
        }
        self.base_dir.join(&self.path)
    }

    pub fn load(&self) -> Result<Dataset> {
        let opts = CsvOptions { has_header: self.header, class_column: self.class_column };
        load_csv_with(self.data_path(), &self.schema_hint(), &opts)
    }
}
