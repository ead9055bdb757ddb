//! Server-side aggregation: score local trees from the cross-evaluation
//! matrix, keep the ones that pass the filter, and grow a global tree from
//! the merged rules.

mod global;

use serde::{Deserialize, Serialize};

use crate::dtree::EPS;
use crate::metrics::{Metric, Metrics};
use crate::{Error, Result};

pub use global::{build_global_tree, rule_entropy, split_gain_binary, split_gain_multiway, NodeRules};

/// `scores[k][i]`: tree `i` evaluated on client `k`'s data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossEvalMatrix {
    pub scores: Vec<Vec<Metrics>>,
}

impl CrossEvalMatrix {
    pub fn new(scores: Vec<Vec<Metrics>>) -> Result<Self> {
        let n = scores.len();
        if n == 0 || scores.iter().any(|row| row.len() != n) {
            return Err(Error::Contract(format!("cross-evaluation matrix must be square and non-empty, got {n} rows")));
        }
        Ok(CrossEvalMatrix { scores })
    }

    pub fn size(&self) -> usize {
        self.scores.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Mean,
    Median,
    /// Nearest-rank percentile, `p` in `[0, 100]`.
    Percentile(f64),
    /// Keep every tree.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub statistic: Statistic,
    #[serde(default)]
    pub metric: Metric,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy { statistic: Statistic::Mean, metric: Metric::MacroF1 }
    }
}

impl FilterPolicy {
    pub fn validate(&self) -> Result<()> {
        if let Statistic::Percentile(p) = self.statistic {
            if !(0.0..=100.0).contains(&p) {
                return Err(Error::Config(format!("percentile must lie in [0, 100], got {p}")));
            }
        }
        Ok(())
    }
}

/// Mean over evaluating clients of each tree's score on the policy metric.
pub fn score_trees(m: &CrossEvalMatrix, policy: &FilterPolicy) -> Vec<f64> {
    let n = m.size();
    (0..n)
        .map(|i| m.scores.iter().map(|row| row[i].get(policy.metric)).sum::<f64>() / n as f64)
        .collect()
}

/// Cut-off the policy derives from `scores`.
pub fn threshold(scores: &[f64], statistic: Statistic) -> f64 {
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    match statistic {
        Statistic::None => f64::NEG_INFINITY,
        Statistic::Mean => scores.iter().sum::<f64>() / n as f64,
        Statistic::Median => {
            if n % 2 == 1 {
                sorted[n / 2]
            } else {
                (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
            }
        }
        Statistic::Percentile(p) => {
            let rank = ((p / 100.0) * n as f64).ceil().max(1.0) as usize;
            sorted[rank.min(n) - 1]
        }
    }
}

/// Trees whose score reaches the threshold (inclusive). If nothing would
/// survive, the best-scoring tree (lowest id on ties) is kept.
pub fn apply_filter(scores: &[f64], policy: &FilterPolicy) -> Vec<usize> {
    if scores.is_empty() {
        return Vec::new();
    }
    let t = threshold(scores, policy.statistic);
    let survivors: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= t - EPS).collect();
    if !survivors.is_empty() {
        return survivors;
    }
    let best = (0..scores.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
    vec![best]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn met(x: f64) -> Metrics {
        Metrics { accuracy: x, macro_f1: x, support: 1 }
    }

    fn mean_policy() -> FilterPolicy {
        FilterPolicy { statistic: Statistic::Mean, metric: Metric::Accuracy }
    }

    #[test]
    fn single_tree_scores_itself() {
        let m = CrossEvalMatrix::new(vec![vec![met(0.42)]]).unwrap();
        assert_eq!(score_trees(&m, &mean_policy()), vec![0.42]);
    }

    #[test]
    fn constant_column() {
        let m = CrossEvalMatrix::new(vec![vec![met(0.8), met(0.1)], vec![met(0.8), met(0.3)]]).unwrap();
        let s = score_trees(&m, &mean_policy());
        assert!((s[0] - 0.8).abs() < 1e-15);
        assert!((s[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn random_matrix_column_means() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let raw: Vec<Vec<f64>> = (0..5).map(|_| (0..5).map(|_| rng.random()).collect()).collect();
        let m = CrossEvalMatrix::new(raw.iter().map(|r| r.iter().map(|&x| met(x)).collect()).collect()).unwrap();
        let s = score_trees(&m, &mean_policy());
        for i in 0..5 {
            let want = (raw[0][i] + raw[1][i] + raw[2][i] + raw[3][i] + raw[4][i]) / 5.0;
            assert!((s[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_filter_arithmetic() {
        assert_eq!(apply_filter(&[0.9, 0.8, 0.4], &mean_policy()), vec![0, 1]);
    }

    #[test]
    fn equal_scores_all_survive() {
        for statistic in [Statistic::Mean, Statistic::Median, Statistic::Percentile(90.0)] {
            let p = FilterPolicy { statistic, metric: Metric::Accuracy };
            assert_eq!(apply_filter(&[0.3; 4], &p), vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn percentile_75_of_ten() {
        let scores: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let p = FilterPolicy { statistic: Statistic::Percentile(75.0), metric: Metric::Accuracy };
        // Sorted-rank oracle: rank ceil(0.75 * 10) = 8, i.e. the value 0.8.
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        let cut = sorted[7];
        let want: Vec<usize> = (0..10).filter(|&i| scores[i] >= cut).collect();
        assert_eq!(apply_filter(&scores, &p), want);
        assert_eq!(want, vec![7, 8, 9]);
    }

    #[test]
    fn median_and_percentile_bounds() {
        assert_eq!(threshold(&[1.0, 3.0, 2.0, 4.0], Statistic::Median), 2.5);
        assert!(FilterPolicy { statistic: Statistic::Percentile(101.0), metric: Metric::Accuracy }
            .validate()
            .is_err());
    }

    #[test]
    fn policy_json() {
        let p: FilterPolicy = serde_json::from_str(r#"{"statistic":{"percentile":75},"metric":"accuracy"}"#).unwrap();
        assert_eq!(p.statistic, Statistic::Percentile(75.0));
        let p: FilterPolicy = serde_json::from_str(r#"{"statistic":"mean"}"#).unwrap();
        assert_eq!(p.metric, Metric::MacroF1);
    }

    proptest! {
        #[test]
        fn never_empty_and_monotone_in_p(
            scores in prop::collection::vec(0.0f64..1.0, 1..30),
            p1 in 0.0f64..100.0,
            p2 in 0.0f64..100.0,
        ) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            let pol = |p| FilterPolicy { statistic: Statistic::Percentile(p), metric: Metric::Accuracy };
            let a = apply_filter(&scores, &pol(lo));
            let b = apply_filter(&scores, &pol(hi));
            prop_assert!(!a.is_empty() && !b.is_empty());
            prop_assert!(b.iter().all(|i| a.contains(i)));
            for st in [Statistic::Mean, Statistic::Median] {
                let policy = FilterPolicy { statistic: st, metric: Metric::Accuracy };
                prop_assert!(!apply_filter(&scores, &policy).is_empty());
            }
        }
    }
}
