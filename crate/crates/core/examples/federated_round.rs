//! One protocol round on Car with five clients: the message transcript, the
//! cross-evaluation scores and which trees survived the filter.

use fedtree::data::{Manifest, PartitionMode};
use fedtree::federation::{ConfigTreeKind, Experiment, ExperimentConfig, RoundOptions};

fn main() -> fedtree::Result<()> {
    let manifest = Manifest::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/car.json"))?;
    let raw = manifest.load()?;
    let config = ExperimentConfig::new("car", ConfigTreeKind::Cart, 5, PartitionMode::Iid);
    let exp = Experiment::new(&config, &raw, "car")?;
    let round = exp.run_round(0, &RoundOptions::default())?;

    for env in &round.transcript.messages {
        let bytes: usize = env.message.payloads().iter().map(|p| p.len()).sum();
        println!("#{:02} {:?} -> {:?}: {} ({bytes} bytes)", env.seq, env.from, env.to, env.message.name());
    }
    let server = round.server.as_ref().expect("protocol ran");
    println!("\nclient-server messages: {} (4n = {})", round.messages, 4 * exp.client_count());
    println!("scores: {:?}", server.scores.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>());
    println!("survivors (merge order): {:?}", server.survivors);
    println!("merged rules: {}, global depth {} with {} leaves", server.merged_rules, server.global_depth, server.global_leaves);
    let local = round.local.as_ref().expect("local metrics");
    let global = round.global.as_ref().expect("global metrics");
    for c in 0..exp.client_count() {
        println!("client {c}: local acc {:.3}  global acc {:.3}", local[c].accuracy, global[c].accuracy);
    }
    Ok(())
}
