//! A small client-count sweep on Car comparing baseline, global and
//! Federated-ID3 accuracy, like `fedtree sweep` but in process.

use fedtree::cli::{expand_sweep, render_table};
use fedtree::data::Manifest;
use fedtree::federation::{Experiment, ExperimentConfig};

fn main() -> fedtree::Result<()> {
    let manifest = Manifest::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/car.json"))?;
    let raw = manifest.load()?;
    let doc = serde_json::json!({
        "dataset": "car",
        "tree_kind": ["id3", "cart"],
        "clients": [2, 5, 10],
        "distribution": "iid",
        "folds": 5
    });
    for combo in expand_sweep(&doc)? {
        let config = ExperimentConfig::from_json(&combo.to_string())?;
        let report = Experiment::new(&config, &raw, "car")?.run()?;
        println!("== {} clients, {}", config.clients, config.tree_kind.name());
        print!("{}", render_table(&report));
    }
    Ok(())
}
