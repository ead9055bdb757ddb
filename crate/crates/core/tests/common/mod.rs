#![allow(dead_code)]

use std::path::PathBuf;

use fedtree::data::{Feature, Manifest, Row, Schema, Value};
use fedtree::rules::IntervalOp;
use fedtree::{Condition, Dataset, Rule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data"))
}

pub fn car() -> Dataset {
    Manifest::from_file(data_dir().join("car.json")).unwrap().load().unwrap()
}

/// Random categorical data whose class depends on the first two features,
/// with some label noise.
pub fn categorical(rng: &mut ChaCha8Rng, rows: usize, arities: &[usize], classes: usize) -> Dataset {
    let features = arities
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let syms: Vec<String> = (0..a).map(|s| format!("s{s}")).collect();
            let refs: Vec<&str> = syms.iter().map(String::as_str).collect();
            Feature::categorical(format!("f{i}"), &refs)
        })
        .collect();
    let schema = Schema { features, class_names: (0..classes).map(|c| format!("c{c}")).collect() };
    let rows = (0..rows)
        .map(|_| {
            let values: Vec<u32> = arities.iter().map(|&a| rng.random_range(0..a as u32)).collect();
            let signal = (values[0] as usize + 2 * *values.get(1).unwrap_or(&0) as usize) % classes;
            let class = if rng.random_bool(0.2) { rng.random_range(0..classes) } else { signal };
            Row { values: values.into_iter().map(Value::Cat).collect(), class }
        })
        .collect();
    Dataset::new(schema, rows).unwrap()
}

/// Random numeric data on a coarse grid, class from a few thresholds.
pub fn numeric(rng: &mut ChaCha8Rng, rows: usize, features: usize, classes: usize) -> Dataset {
    let schema = Schema {
        features: (0..features).map(|i| Feature::numeric(format!("x{i}"))).collect(),
        class_names: (0..classes).map(|c| format!("c{c}")).collect(),
    };
    let rows = (0..rows)
        .map(|_| {
            let values: Vec<f64> = (0..features).map(|_| rng.random_range(0..20) as f64 / 2.0).collect();
            let signal = ((values[0] > 4.0) as usize + 2 * (values[features - 1] > 6.5) as usize) % classes;
            let class = if rng.random_bool(0.15) { rng.random_range(0..classes) } else { signal };
            Row { values: values.into_iter().map(Value::Num).collect(), class }
        })
        .collect();
    Dataset::new(schema, rows).unwrap()
}

fn y_hat(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut y: Vec<f64> = (0..k).map(|_| rng.random_range(0..6) as f64).collect();
    let c = rng.random_range(0..k);
    y[c] += 1.0;
    y
}

/// Random categorical rule over features `0..features` with symbols `0..3`.
pub fn id3_rule(rng: &mut ChaCha8Rng, features: usize, k: usize, owner: usize, leaf: usize) -> Rule {
    let mut conds = Vec::new();
    for f in 0..features {
        if rng.random_bool(0.5) {
            conds.push(Condition::Categorical { feature: f, symbol: rng.random_range(0..3) });
        }
    }
    Rule::new(conds, y_hat(rng, k), vec![(owner, leaf)])
}

/// Random interval rule; bounds on a half-integer grid, GT below LE.
pub fn cart_rule(rng: &mut ChaCha8Rng, features: usize, k: usize, owner: usize, leaf: usize) -> Rule {
    let mut conds = Vec::new();
    for f in 0..features {
        let lo = rng.random_range(0..8) as f64 + 0.5;
        let hi = lo + rng.random_range(1..6) as f64;
        match rng.random_range(0..4) {
            0 => {}
            1 => conds.push(Condition::Interval { feature: f, op: IntervalOp::Gt, bound: lo }),
            2 => conds.push(Condition::Interval { feature: f, op: IntervalOp::Le, bound: hi }),
            _ => {
                conds.push(Condition::Interval { feature: f, op: IntervalOp::Gt, bound: lo });
                conds.push(Condition::Interval { feature: f, op: IntervalOp::Le, bound: hi });
            }
        }
    }
    Rule::new(conds, y_hat(rng, k), vec![(owner, leaf)])
}
