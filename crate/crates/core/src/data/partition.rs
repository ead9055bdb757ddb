use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Gamma};
use serde::{Deserialize, Serialize};

use super::schema::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMode {
    Iid,
    NonIid,
}

/// Concentration of the symmetric Dirichlet used for non-IID share sizes.
pub const NON_IID_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionPlan {
    pub mode: PartitionMode,
    pub clients: usize,
    pub seed: u64,
    pub min_instances: usize,
}

impl PartitionPlan {
    pub fn iid(clients: usize, seed: u64) -> Self {
        PartitionPlan { mode: PartitionMode::Iid, clients, seed, min_instances: 5 }
    }

    pub fn non_iid(clients: usize, seed: u64) -> Self {
        PartitionPlan { mode: PartitionMode::NonIid, clients, seed, min_instances: 5 }
    }
}

/// Rows grouped by class, shuffled within each class.
fn class_sorted(d: &Dataset, rng: &mut ChaCha8Rng, shuffle_classes: bool) -> Vec<usize> {
    let k = d.schema().class_count();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, row) in d.rows().iter().enumerate() {
        groups[row.class].push(i);
    }
    for g in &mut groups {
        g.shuffle(rng);
    }
    if shuffle_classes {
        groups.shuffle(rng);
    }
    groups.concat()
}

/// Splits the rows of `d` among `plan.clients` disjoint shares.
///
/// IID deals the class-sorted rows round-robin, so every share is within one
/// row of `|D|/n` and within one row per class of the global proportions.
/// Non-IID draws share sizes from a symmetric Dirichlet, cuts the
/// class-sorted order into contiguous runs of those sizes and then tops up
/// shares below `min_instances` from the largest share.
pub fn partition(d: &Dataset, plan: &PartitionPlan) -> Result<Vec<Vec<usize>>> {
    let n = plan.clients;
    if n < 1 {
        return Err(Error::Config("clients must be at least 1".into()));
    }
    if n > d.len() {
        return Err(Error::Config(format!("{n} clients for {} rows", d.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    match plan.mode {
        PartitionMode::Iid => {
            let order = class_sorted(d, &mut rng, false);
            let mut shares = vec![Vec::with_capacity(d.len() / n + 1); n];
            for (pos, idx) in order.into_iter().enumerate() {
                shares[pos % n].push(idx);
            }
            Ok(shares)
        }
        PartitionMode::NonIid => {
            if plan.min_instances == 0 || n * plan.min_instances > d.len() {
                return Err(Error::Config(format!(
                    "cannot give {n} clients at least {} rows each from {} rows",
                    plan.min_instances,
                    d.len()
                )));
            }
            let sizes = dirichlet_sizes(d.len(), n, plan.min_instances, &mut rng);
            let order = class_sorted(d, &mut rng, true);
            let mut shares = Vec::with_capacity(n);
            let mut start = 0;
            for s in sizes {
                shares.push(order[start..start + s].to_vec());
                start += s;
            }
            Ok(shares)
        }
    }
}

fn dirichlet_sizes(total: usize, n: usize, floor: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let gamma = Gamma::new(NON_IID_ALPHA, 1.0).expect("valid gamma parameters");
    let draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng).max(f64::MIN_POSITIVE)).collect();
    let sum: f64 = draws.iter().sum();
    let exact: Vec<f64> = draws.iter().map(|g| g / sum * total as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();

    // Largest remainder so the sizes add up to `total`.
    let mut rest = total - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        sizes[i] += 1;
        rest -= 1;
    }

    // Repair shares below the floor by stealing from the largest.
    while let Some(small) = (0..n).filter(|&i| sizes[i] < floor).min_by_key(|&i| (sizes[i], i)) {
        let large = (0..n).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i))).unwrap();
        sizes[large] -= 1;
        sizes[small] += 1;
    }
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Feature, Row, Schema, Value};

    fn dataset(n: usize, k: usize) -> Dataset {
        let names: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
        let schema = Schema { features: vec![Feature::numeric("x")], class_names: names };
        let rows = (0..n)
            .map(|i| Row { values: vec![Value::Num(i as f64)], class: (i * 7 + i / 3) % k })
            .collect();
        Dataset::new(schema, rows).unwrap()
    }

    fn check_cover(shares: &[Vec<usize>], n: usize) {
        let mut all: Vec<usize> = shares.concat();
        all.sort_unstable();
        assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn iid_even_split() {
        let d = dataset(12960, 5);
        let shares = partition(&d, &PartitionPlan::iid(2, 1)).unwrap();
        assert_eq!(shares[0].len(), 6480);
        assert_eq!(shares[1].len(), 6480);
        check_cover(&shares, d.len());
    }

    #[test]
    fn iid_class_proportions_within_one() {
        let d = dataset(1003, 4);
        let n = 7;
        let shares = partition(&d, &PartitionPlan::iid(n, 3)).unwrap();
        let mut global = [0usize; 4];
        for r in d.rows() {
            global[r.class] += 1;
        }
        for s in &shares {
            assert!(s.len().abs_diff(d.len() / n) <= 1);
            let mut h = [0usize; 4];
            for &i in s {
                h[d.row(i).class] += 1;
            }
            for c in 0..4 {
                let share = global[c] as f64 / n as f64;
                assert!((h[c] as f64 - share).abs() <= 1.0, "class {c}: {} vs {share}", h[c]);
            }
        }
    }

    #[test]
    fn non_iid_respects_floor() {
        let d = dataset(1000, 5);
        let plan = PartitionPlan::non_iid(50, 11);
        let shares = partition(&d, &plan).unwrap();
        assert_eq!(shares.len(), 50);
        assert!(shares.iter().all(|s| s.len() >= 5));
        check_cover(&shares, d.len());
    }

    #[test]
    fn non_iid_infeasible_floor_is_config_error() {
        let d = dataset(40, 2);
        let err = partition(&d, &PartitionPlan::non_iid(10, 0)).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn seeded_determinism() {
        let d = dataset(100, 3);
        for plan in [PartitionPlan::iid(5, 9), PartitionPlan::non_iid(5, 9)] {
            let a = partition(&d, &plan).unwrap();
            let b = partition(&d, &plan).unwrap();
            assert_eq!(a, b);
            let other = PartitionPlan { seed: 10, ..plan.clone() };
            assert_ne!(a, partition(&d, &other).unwrap());
        }
    }
}
