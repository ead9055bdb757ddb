use super::{class_counts, to_dist, DecisionTree, Node, Split, TrainParams, TreeKind, EPS};
use crate::data::{DataView, FeatureKind};
use crate::{Error, Result};

fn gini(counts: &[u64], n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Binary CART with Gini impurity. Every feature must be numeric.
pub fn train_cart(view: DataView<'_>, p: &TrainParams) -> Result<DecisionTree> {
    if view.is_empty() {
        return Err(Error::EmptyView);
    }
    if !view.schema().all_numeric() {
        return Err(Error::Schema("CART needs numeric features; encode first".into()));
    }
    let node = grow(view, view.indices().to_vec(), p, 0);
    Ok(DecisionTree { kind: TreeKind::Cart, max_depth: p.max_depth, node })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct CartSplit {
    pub feature: usize,
    pub threshold: f64,
    pub impurity: f64,
}

/// Lowest weighted child Gini over every feature and every midpoint between
/// consecutive distinct values, with both sides holding `min_leaf` rows.
/// Ties go to the lower feature, then the lower threshold.
pub(crate) fn best_cart_split(view: DataView<'_>, rows: &[usize], min_leaf: usize) -> Option<CartSplit> {
    let data = view.dataset();
    let schema = view.schema();
    let k = schema.class_count();
    let n = rows.len();
    let total = class_counts(&data.view(rows), k);
    let mut best: Option<CartSplit> = None;
    for f in 0..schema.feature_count() {
        if schema.features[f].kind != FeatureKind::Numeric {
            continue;
        }
        let mut pairs: Vec<(f64, usize)> =
            rows.iter().map(|&i| (data.row(i).values[f].as_f64(), data.row(i).class)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = vec![0u64; k];
        for j in 0..n - 1 {
            left[pairs[j].1] += 1;
            let (x, next) = (pairs[j].0, pairs[j + 1].0);
            if next - x <= EPS {
                continue;
            }
            let nl = j + 1;
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let right: Vec<u64> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
            let imp = (nl as f64 * gini(&left, nl as u64) + nr as f64 * gini(&right, nr as u64)) / n as f64;
            if best.is_none_or(|b| imp < b.impurity - EPS) {
                best = Some(CartSplit { feature: f, threshold: x + (next - x) / 2.0, impurity: imp });
            }
        }
    }
    best
}

fn grow(view: DataView<'_>, rows: Vec<usize>, p: &TrainParams, depth: usize) -> Node {
    let data = view.dataset();
    let k = view.schema().class_count();
    let counts = class_counts(&data.view(&rows), k);
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || depth >= p.max_depth {
        return Node::leaf(to_dist(&counts));
    }
    let Some(s) = best_cart_split(view, &rows, p.min_leaf.max(1)) else {
        return Node::leaf(to_dist(&counts));
    };
    let (l, r): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&i| data.row(i).values[s.feature].as_f64() <= s.threshold);
    Node::Split(Split::Binary {
        feature: s.feature,
        threshold: s.threshold,
        left: Box::new(grow(view, l, p, depth + 1)),
        right: Box::new(grow(view, r, p, depth + 1)),
    })
}
