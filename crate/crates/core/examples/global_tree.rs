//! Three clients train CART on their shares; the server merges their rules
//! and grows one global tree, which is then scored on all the data.

use fedtree::data::{encode_ordinal, partition, Manifest, PartitionPlan};
use fedtree::rules::{extract_rules_for, fold_merge, DEFAULT_RULE_CAP};
use fedtree::{build_global_tree, DecisionTree, TrainParams, TreeKind};

fn main() -> fedtree::Result<()> {
    let manifest = Manifest::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/car.json"))?;
    let data = encode_ordinal(&manifest.load()?)?;
    let params = TrainParams::cart();
    let shares = partition(&data, &PartitionPlan::iid(3, 1))?;

    let trees: Vec<DecisionTree> = shares
        .iter()
        .map(|s| DecisionTree::train(data.view(s), TreeKind::Cart, &params))
        .collect::<fedtree::Result<_>>()?;
    let sets: Vec<_> = trees.iter().enumerate().map(|(c, t)| extract_rules_for(t, c)).collect();
    for (c, s) in sets.iter().enumerate() {
        println!("client {c}: {} rules", s.len());
    }
    let merged = fold_merge(&sets, DEFAULT_RULE_CAP)?;
    println!("merged: {} rules, {} truncations", merged.rules.len(), merged.truncations.len());

    let global = build_global_tree(&merged.rules, &params)?;
    let all = data.all_indices();
    println!("global tree: depth {} leaves {}", global.depth(), global.leaf_count());
    for (c, t) in trees.iter().enumerate() {
        println!("  local {c} accuracy on all rows {:.4}", t.evaluate(data.view(&all))?.accuracy);
    }
    println!("  global accuracy on all rows {:.4}", global.evaluate(data.view(&all))?.accuracy);
    Ok(())
}
