//! The `fedtree` command line: `run`, `sweep` and `explain`.
//!
//! Exit status is 0 when every requested variant produced metrics, 2 for
//! configuration or schema problems and 1 for anything else.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::data::{FeatureEncoding, Schema};
use crate::dtree::{render_conjunction, DecisionTree};
use crate::federation::{Experiment, ExperimentConfig, ExperimentReport};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "fedtree", version, about = "Federated decision-tree aggregation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and write its JSON report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also save the first successful fold's global tree for `explain`.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Run every combination of the list-valued config fields.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Classify one instance and print the decision path.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        instance: PathBuf,
    },
}

/// A trained tree plus what `explain` needs to encode raw input columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub dataset: String,
    /// Raw column name and encoding, in feature order.
    pub inputs: Vec<(String, FeatureEncoding)>,
    /// Schema of the encoded values the tree was trained on.
    pub schema: Schema,
    pub tree: DecisionTree,
}

impl ModelBundle {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let b: ModelBundle = serde_json::from_str(&text)?;
        b.tree.validate()?;
        if b.inputs.len() != b.schema.feature_count() {
            return Err(Error::Format("model inputs disagree with its schema".into()));
        }
        Ok(b)
    }

    /// Predicted class name and the decision path for one raw instance,
    /// given as column name to raw text. Columns not in the model are ignored.
    pub fn explain(&self, instance: &BTreeMap<String, String>) -> Result<(String, String)> {
        let row = self
            .inputs
            .iter()
            .map(|(name, enc)| {
                let raw = instance
                    .get(name)
                    .ok_or_else(|| Error::Schema(format!("instance has no column '{name}'")))?;
                enc.encode(raw)
                    .map_err(|e| Error::Schema(format!("column '{name}': {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let class = self.tree.predict(&row);
        let path = self.tree.explain(&row);
        Ok((self.schema.class_names[class].clone(), render_conjunction(&path, Some(&self.schema))))
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Schema(_) => 2,
        _ => 1,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Run { config, out: path, model_out } => cmd_run(&config, &path, model_out.as_deref(), out),
        Command::Sweep { config, out: dir, jobs } => cmd_sweep(&config, &dir, jobs, out),
        Command::Explain { model, instance } => cmd_explain(&model, &instance, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn pct(x: Option<f64>) -> String {
    x.map_or_else(|| "failed".to_string(), |v| format!("{:.2}", 100.0 * v))
}

/// The aligned `variant  Acc  F1` table.
pub fn render_table(report: &ExperimentReport) -> String {
    let rows: Vec<[String; 3]> = std::iter::once(["variant".to_string(), "Acc".into(), "F1".into()])
        .chain(report.variants.iter().map(|v| {
            [v.variant.clone(), pct(v.metrics.map(|m| m.accuracy)), pct(v.metrics.map(|m| m.macro_f1))]
        }))
        .collect();
    let w0 = rows.iter().map(|r| r[0].len()).max().unwrap_or(0);
    let w = rows.iter().map(|r| r[1].len().max(r[2].len())).max().unwrap_or(0);
    rows.iter()
        .map(|r| format!("{:<w0$}  {:>w$}  {:>w$}\n", r[0], r[1], r[2]))
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `report.json` → `report.timing.json`.
pub fn timing_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.timing.json"))
}

fn cmd_run(config: &Path, out_path: &Path, model_out: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let cfg = ExperimentConfig::from_file(config)?;
    let exp = Experiment::from_config(&cfg)?;
    let (report, rounds) = exp.run_with_rounds()?;
    write_json(out_path, &report)?;
    write_json(&timing_path(out_path), &report.timings)?;
    if let Some(path) = model_out {
        let tree = rounds
            .iter()
            .flatten()
            .find_map(|r| r.global_tree.clone())
            .ok_or_else(|| Error::Contract("no fold produced a global tree".into()))?;
        let schema = exp.local_dataset().expect("a global tree implies local data").schema().clone();
        let inputs = schema.features.iter().map(|f| f.name.clone()).zip(exp.encodings().iter().cloned()).collect();
        ModelBundle { dataset: exp.dataset_name.clone(), inputs, schema, tree }.save(path)?;
    }
    let _ = write!(out, "{}", render_table(&report));
    Ok(if report.complete() { 0 } else { 1 })
}

const SWEEP_KEYS: [&str; 4] = ["dataset", "clients", "distribution", "tree_kind"];

/// Expands list values of the sweepable keys into one config document per
/// combination, in key order with the last key varying fastest.
pub fn expand_sweep(doc: &Json) -> Result<Vec<Json>> {
    let Json::Object(map) = doc else {
        return Err(Error::Config("sweep config must be a JSON object".into()));
    };
    let mut combos = vec![map.clone()];
    for key in SWEEP_KEYS {
        let Some(Json::Array(values)) = map.get(key) else { continue };
        if values.is_empty() {
            return Err(Error::Config(format!("{key}: empty list")));
        }
        combos = combos
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.insert(key.to_string(), v.clone());
                    c
                })
            })
            .collect();
    }
    Ok(combos.into_iter().map(Json::Object).collect())
}

#[derive(Debug, Serialize)]
struct SummaryRow<'a> {
    dataset: &'a str,
    clients: usize,
    distribution: &'a str,
    tree_kind: &'a str,
    variant: &'a str,
    accuracy: String,
    macro_f1: String,
    status: String,
}

fn label(v: &Json) -> String {
    match v {
        Json::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn cmd_sweep(config: &Path, dir: &Path, jobs: usize, out: &mut dyn Write) -> Result<i32> {
    let text = std::fs::read_to_string(config).map_err(|e| Error::io(config, e))?;
    let doc: Json = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    let base_dir = config.parent().map(Path::to_path_buf).unwrap_or_default();
    let combos = expand_sweep(&doc)?;
    let configs: Vec<ExperimentConfig> = combos
        .iter()
        .map(|c| {
            let mut cfg = ExperimentConfig::from_json(&c.to_string())?;
            cfg.base_dir = base_dir.clone();
            Ok(cfg)
        })
        .collect::<Result<_>>()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("jobs: {e}")))?;
    let results: Vec<(String, Result<ExperimentReport>)> = pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| {
                let stem = Path::new(&cfg.dataset).file_stem().map(|s| s.to_string_lossy().into_owned());
                let name = format!(
                    "{}_{}_n{}_{}",
                    stem.unwrap_or_default(),
                    cfg.tree_kind.name(),
                    cfg.clients,
                    label(&serde_json::to_value(cfg.distribution).unwrap_or_default())
                );
                (name, Experiment::from_config(cfg).and_then(|e| e.run()))
            })
            .collect()
    });

    let summary_path = dir.join("summary.csv");
    let mut csv = csv::Writer::from_path(&summary_path).map_err(|e| Error::Format(e.to_string()))?;
    let mut all_ok = true;
    for (cfg, (name, result)) in configs.iter().zip(&results) {
        let dist = label(&serde_json::to_value(cfg.distribution).unwrap_or_default());
        let mut rows = Vec::new();
        match result {
            Ok(report) => {
                write_json(&dir.join(format!("{name}.json")), report)?;
                write_json(&dir.join(format!("{name}.timing.json")), &report.timings)?;
                all_ok &= report.complete();
                for v in &report.variants {
                    rows.push((v.variant.clone(), v.metrics, v.error.clone()));
                }
            }
            Err(e) => {
                all_ok = false;
                let _ = writeln!(out, "{name}: failed: {e}");
                rows.push(("all".to_string(), None, Some(e.to_string())));
            }
        }
        for (variant, m, error) in rows {
            csv.serialize(SummaryRow {
                dataset: &cfg.dataset,
                clients: cfg.clients,
                distribution: &dist,
                tree_kind: cfg.tree_kind.name(),
                variant: &variant,
                accuracy: m.map(|m| format!("{:.4}", m.accuracy)).unwrap_or_default(),
                macro_f1: m.map(|m| format!("{:.4}", m.macro_f1)).unwrap_or_default(),
                status: error.map_or_else(|| "ok".to_string(), |e| format!("failed: {e}")),
            })
            .map_err(|e| Error::Format(e.to_string()))?;
        }
        if let Ok(report) = result {
            let _ = write!(out, "== {name}\n{}", render_table(report));
        }
    }
    csv.flush().map_err(|e| Error::io(&summary_path, e))?;
    Ok(if all_ok { 0 } else { 1 })
}

/// Reads a CSV whose header names the columns and whose first record is the
/// instance.
pub fn read_instance(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Load { path: path.display().to_string(), line: 0, msg: e.to_string() })?;
    let header = rdr
        .headers()
        .map_err(|e| Error::Load { path: path.display().to_string(), line: 1, msg: e.to_string() })?
        .clone();
    let record = rdr
        .records()
        .next()
        .ok_or_else(|| Error::Schema(format!("{}: no instance row", path.display())))?
        .map_err(|e| Error::Load { path: path.display().to_string(), line: 2, msg: e.to_string() })?;
    Ok(header.iter().zip(record.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
}

fn cmd_explain(model: &Path, instance: &Path, out: &mut dyn Write) -> Result<i32> {
    let bundle = ModelBundle::load(model)?;
    let (class, path) = bundle.explain(&read_instance(instance)?)?;
    let _ = writeln!(out, "class {class} with {path}");
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_expands_lists_only() {
        let doc: Json = serde_json::from_str(
            r#"{"dataset":"car","tree_kind":["id3","cart"],"clients":[2,5,10],"distribution":"iid","seed":3}"#,
        )
        .unwrap();
        let combos = expand_sweep(&doc).unwrap();
        assert_eq!(combos.len(), 6);
        assert_eq!(combos[0]["clients"], 2);
        assert_eq!(combos[0]["tree_kind"], "id3");
        assert_eq!(combos[1]["tree_kind"], "cart");
        assert!(combos.iter().all(|c| c["seed"] == 3));
    }

    #[test]
    fn timing_sidecar_name() {
        assert_eq!(timing_path(Path::new("out/report.json")), PathBuf::from("out/report.timing.json"));
    }

    #[test]
    fn bad_flag_is_usage_error() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(main_with_args(["fedtree", "run", "--nope"], &mut o, &mut e), 2);
    }
}
