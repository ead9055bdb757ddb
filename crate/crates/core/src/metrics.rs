//! Accuracy, macro-F1, and the fold-then-client averaging used in reports.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub support: usize,
}

impl Metrics {
    /// Metrics for `y_pred` against `y_true` over `k` classes.
    ///
    /// Macro-F1 averages over all `k` classes; a class with no true and no
    /// predicted rows scores 0, as does any class with precision + recall = 0.
    pub fn compute(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(Error::Metrics(format!(
                "{} labels but {} predictions",
                y_true.len(),
                y_pred.len()
            )));
        }
        if y_true.is_empty() {
            return Err(Error::Metrics("no rows to score".into()));
        }
        if k == 0 {
            return Err(Error::Metrics("class count must be positive".into()));
        }
        let mut tp = vec![0usize; k];
        let mut n_true = vec![0usize; k];
        let mut n_pred = vec![0usize; k];
        for (&t, &p) in y_true.iter().zip(y_pred) {
            if t >= k || p >= k {
                return Err(Error::Metrics(format!("label out of range for {k} classes")));
            }
            n_true[t] += 1;
            n_pred[p] += 1;
            if t == p {
                tp[t] += 1;
            }
        }
        let correct: usize = tp.iter().sum();
        let f1_sum: f64 = (0..k)
            .map(|c| {
                // F1 = 2TP / (|true| + |pred|), which is 0 exactly when
                // precision + recall is 0 or undefined.
                let denom = n_true[c] + n_pred[c];
                if denom == 0 {
                    0.0
                } else {
                    2.0 * tp[c] as f64 / denom as f64
                }
            })
            .sum();
        Ok(Metrics {
            accuracy: correct as f64 / y_true.len() as f64,
            macro_f1: f1_sum / k as f64,
            support: y_true.len(),
        })
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Accuracy => self.accuracy,
            Metric::MacroF1 => self.macro_f1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    #[default]
    #[serde(alias = "f1")]
    MacroF1,
}

/// Unweighted mean of metrics; support is summed.
pub fn mean(ms: &[Metrics]) -> Result<Metrics> {
    if ms.is_empty() {
        return Err(Error::Metrics("cannot average zero metrics".into()));
    }
    let n = ms.len() as f64;
    Ok(Metrics {
        accuracy: ms.iter().map(|m| m.accuracy).sum::<f64>() / n,
        macro_f1: ms.iter().map(|m| m.macro_f1).sum::<f64>() / n,
        support: ms.iter().map(|m| m.support).sum(),
    })
}

/// Mean over folds within each client, then the unweighted mean over clients.
/// Clients may have different fold counts.
pub fn two_level_mean(per_client_per_fold: &[Vec<Metrics>]) -> Result<Metrics> {
    let per_client = per_client_per_fold
        .iter()
        .map(|folds| mean(folds))
        .collect::<Result<Vec<_>>>()?;
    mean(&per_client)
}
