//! Run a short Car experiment, keep a global tree and explain instances the
//! way `fedtree explain` does.

use std::collections::BTreeMap;

use fedtree::cli::ModelBundle;
use fedtree::data::{Manifest, PartitionMode};
use fedtree::federation::{ConfigTreeKind, Experiment, ExperimentConfig, RoundOptions};

fn main() -> fedtree::Result<()> {
    let manifest = Manifest::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/car.json"))?;
    let raw = manifest.load()?;
    let config = ExperimentConfig::new("car", ConfigTreeKind::Id3, 3, PartitionMode::Iid);
    let exp = Experiment::new(&config, &raw, "car")?;
    let round = exp.run_round(0, &RoundOptions::default())?;
    let schema = exp.local_dataset().expect("ID3 run").schema().clone();
    let bundle = ModelBundle {
        dataset: "car".into(),
        inputs: schema.features.iter().map(|f| f.name.clone()).zip(exp.encodings().iter().cloned()).collect(),
        schema,
        tree: round.global_tree.expect("protocol ran"),
    };

    let raw_schema = raw.schema();
    for i in [0, 500, 1200, 1727] {
        let row = raw.row(i);
        let instance: BTreeMap<String, String> = raw_schema
            .features
            .iter()
            .zip(&row.values)
            .map(|(f, v)| (f.name.clone(), f.symbol(v.as_symbol().unwrap()).unwrap().to_string()))
            .collect();
        let (class, path) = bundle.explain(&instance)?;
        println!("row {i} (true {}): class {class} with {path}", raw_schema.class_names[row.class]);
    }
    Ok(())
}
