use std::collections::BTreeSet;

use crate::dtree::{Branch, DecisionTree, Node, Split, TrainParams, TreeKind, EPS};
use crate::rules::{Condition, Rule, RuleSet};
use crate::{Error, Result};

/// The rules reaching one node of the global tree.
#[derive(Debug, Clone)]
pub struct NodeRules<'a> {
    pub rules: Vec<&'a Rule>,
}

impl<'a> NodeRules<'a> {
    pub fn new(rules: Vec<&'a Rule>) -> Self {
        NodeRules { rules }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    fn class_count(&self) -> usize {
        self.rules.first().map_or(0, |r| r.y_hat.len())
    }
}

fn entropy_of(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

fn argmax_counts(rules: &[&Rule], k: usize) -> Vec<usize> {
    let mut counts = vec![0usize; k];
    for r in rules {
        counts[r.class()] += 1;
    }
    counts
}

/// Entropy (bits) of the rules' argmax classes, each rule counted once.
pub fn rule_entropy(node: &NodeRules<'_>) -> f64 {
    entropy_of(&argmax_counts(&node.rules, node.class_count()))
}

/// Parent entropy minus the rule-count-weighted entropy of the children.
fn gain_from_children(parent: &[usize], children: &[Vec<usize>]) -> f64 {
    let sizes: Vec<usize> = children.iter().map(|c| c.iter().sum()).collect();
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let weighted: f64 = children.iter().zip(&sizes).map(|(c, &s)| s as f64 * entropy_of(c)).sum();
    entropy_of(parent) - weighted / total as f64
}

/// Per observed symbol, the class histogram of the rules requiring it, plus
/// the histogram of rules that leave `feature` unconstrained.
fn multiway_histograms(rules: &[&Rule], feature: usize, k: usize) -> (Vec<(u32, Vec<usize>)>, Vec<usize>) {
    let mut by_symbol: Vec<(u32, Vec<usize>)> = Vec::new();
    let mut free = vec![0usize; k];
    for r in rules {
        match r.symbol_for(feature) {
            Some(s) => match by_symbol.binary_search_by_key(&s, |(sym, _)| *sym) {
                Ok(pos) => by_symbol[pos].1[r.class()] += 1,
                Err(pos) => {
                    let mut h = vec![0usize; k];
                    h[r.class()] += 1;
                    by_symbol.insert(pos, (s, h));
                }
            },
            None => free[r.class()] += 1,
        }
    }
    // Unconstrained rules are consistent with every branch.
    for (_, h) in &mut by_symbol {
        for (c, f) in h.iter_mut().zip(&free) {
            *c += f;
        }
    }
    (by_symbol, free)
}

/// Information gain of a multiway split on a categorical feature, with one
/// child per symbol the node's rules mention.
pub fn split_gain_multiway(node: &NodeRules<'_>, feature: usize) -> f64 {
    let k = node.class_count();
    let (children, _) = multiway_histograms(&node.rules, feature, k);
    let hists: Vec<Vec<usize>> = children.into_iter().map(|(_, h)| h).collect();
    gain_from_children(&argmax_counts(&node.rules, k), &hists)
}

/// A rule can reach `x <= t` when its interval starts below `t`, and
/// `x > t` when it ends above `t`.
fn sides(r: &Rule, feature: usize, t: f64) -> (bool, bool) {
    let (lo, hi) = r.interval(feature);
    (lo < t, hi > t)
}

/// Information gain of the binary split `feature <= threshold`.
pub fn split_gain_binary(node: &NodeRules<'_>, feature: usize, threshold: f64) -> f64 {
    let k = node.class_count();
    let mut left = vec![0usize; k];
    let mut right = vec![0usize; k];
    for r in &node.rules {
        let (l, rt) = sides(r, feature, threshold);
        if l {
            left[r.class()] += 1;
        }
        if rt {
            right[r.class()] += 1;
        }
    }
    gain_from_children(&argmax_counts(&node.rules, k), &[left, right])
}

fn leaf(rules: &[&Rule]) -> Node {
    let k = rules[0].y_hat.len();
    let mut dist = vec![0.0; k];
    for r in rules {
        for (d, y) in dist.iter_mut().zip(&r.y_hat) {
            *d += y;
        }
    }
    Node::leaf(dist)
}

fn consistent(rules: &[&Rule]) -> bool {
    let c = rules[0].class();
    rules.iter().all(|r| r.class() == c)
}

/// Grows a tree of the rules' kind from merged rules.
///
/// Each node takes the split with the highest gain among those that leave
/// some child with fewer rules than the node. Growth stops when the node's
/// rules agree on the argmax class, at `params.max_depth`, or when no such
/// split exists. Leaves hold the summed `y_hat` of their rules.
///
/// ID3 nodes branch on the symbols their rules mention; rules without a
/// condition on the feature go to every branch and also form a `default`
/// child for unseen symbols. CART thresholds are the bounds found in the
/// node's rules that fall inside the node's region.
pub fn build_global_tree(merged: &RuleSet, params: &TrainParams) -> Result<DecisionTree> {
    if merged.is_empty() {
        return Err(Error::Contract("global tree needs at least one rule".into()));
    }
    let k = merged.rules[0].y_hat.len();
    if merged.rules.iter().any(|r| r.y_hat.len() != k) {
        return Err(Error::Contract("rules disagree on class count".into()));
    }
    let rules: Vec<&Rule> = merged.rules.iter().collect();
    let features: BTreeSet<usize> =
        merged.rules.iter().flat_map(|r| r.antecedent.iter().map(Condition::feature)).collect();
    let node = match merged.kind {
        TreeKind::Id3 => grow_id3(rules, &mut features.clone(), 0, params),
        TreeKind::Cart => {
            let width = features.last().map_or(0, |f| f + 1);
            let mut region = vec![(f64::NEG_INFINITY, f64::INFINITY); width];
            grow_cart(rules, &features, &mut region, 0, params)
        }
    };
    Ok(DecisionTree { kind: merged.kind, max_depth: params.max_depth, node })
}

fn grow_id3(rules: Vec<&Rule>, available: &mut BTreeSet<usize>, depth: usize, p: &TrainParams) -> Node {
    if consistent(&rules) || depth >= p.max_depth || available.is_empty() {
        return leaf(&rules);
    }
    let n = rules.len();
    let k = rules[0].y_hat.len();
    let parent = argmax_counts(&rules, k);
    let mut best: Option<(usize, f64)> = None;
    for &f in available.iter() {
        let (children, _) = multiway_histograms(&rules, f, k);
        let reduces = children.iter().any(|(_, h)| h.iter().sum::<usize>() < n);
        if children.is_empty() || !reduces {
            continue;
        }
        let hists: Vec<Vec<usize>> = children.into_iter().map(|(_, h)| h).collect();
        let g = gain_from_children(&parent, &hists);
        if best.is_none_or(|(_, b)| g > b + EPS) {
            best = Some((f, g));
        }
    }
    let Some((feature, _)) = best else {
        return leaf(&rules);
    };

    let mut symbols: Vec<u32> = rules.iter().filter_map(|r| r.symbol_for(feature)).collect();
    symbols.sort_unstable();
    symbols.dedup();
    let free: Vec<&Rule> = rules.iter().copied().filter(|r| r.symbol_for(feature).is_none()).collect();
    available.remove(&feature);
    let branches = symbols
        .iter()
        .map(|&s| {
            let child: Vec<&Rule> =
                rules.iter().copied().filter(|r| r.symbol_for(feature).is_none_or(|x| x == s)).collect();
            Branch { value: s, node: grow_id3(child, available, depth + 1, p) }
        })
        .collect();
    let default = if free.is_empty() { None } else { Some(Box::new(grow_id3(free, available, depth + 1, p))) };
    available.insert(feature);
    Node::Split(Split::Multiway { feature, branches, default })
}

/// Best reducing `(threshold, gain)` for one feature inside `(lo, hi)`.
/// Thresholds are swept in ascending order with running class histograms.
fn best_threshold(rules: &[&Rule], feature: usize, region: (f64, f64), k: usize) -> Option<(f64, f64)> {
    let n = rules.len();
    let mut cands: Vec<f64> = rules
        .iter()
        .flat_map(|r| {
            let (lo, hi) = r.interval(feature);
            [lo, hi]
        })
        .filter(|t| t.is_finite() && *t > region.0 && *t < region.1)
        .collect();
    if cands.is_empty() {
        return None;
    }
    cands.sort_by(f64::total_cmp);
    cands.dedup();

    let mut by_lo: Vec<(f64, usize)> = rules.iter().map(|r| (r.interval(feature).0, r.class())).collect();
    let mut by_hi: Vec<(f64, usize)> = rules.iter().map(|r| (r.interval(feature).1, r.class())).collect();
    by_lo.sort_by(|a, b| a.0.total_cmp(&b.0));
    by_hi.sort_by(|a, b| a.0.total_cmp(&b.0));
    let parent = argmax_counts(rules, k);

    let mut left = vec![0usize; k]; // rules with lo < t
    let mut at_or_below = vec![0usize; k]; // rules with hi <= t
    let (mut nl, mut nb, mut i, mut j) = (0usize, 0usize, 0usize, 0usize);
    let mut best: Option<(f64, f64)> = None;
    for &t in &cands {
        while i < n && by_lo[i].0 < t {
            left[by_lo[i].1] += 1;
            nl += 1;
            i += 1;
        }
        while j < n && by_hi[j].0 <= t {
            at_or_below[by_hi[j].1] += 1;
            nb += 1;
            j += 1;
        }
        let nr = n - nb;
        if nl == 0 || nr == 0 || (nl == n && nr == n) {
            continue;
        }
        let right: Vec<usize> = parent.iter().zip(&at_or_below).map(|(p, b)| p - b).collect();
        let g = gain_from_children(&parent, &[left.clone(), right]);
        if best.is_none_or(|(_, b)| g > b + EPS) {
            best = Some((t, g));
        }
    }
    best
}

fn grow_cart(
    rules: Vec<&Rule>,
    features: &BTreeSet<usize>,
    region: &mut [(f64, f64)],
    depth: usize,
    p: &TrainParams,
) -> Node {
    if consistent(&rules) || depth >= p.max_depth {
        return leaf(&rules);
    }
    let k = rules[0].y_hat.len();
    let mut best: Option<(usize, f64, f64)> = None;
    for &f in features {
        if let Some((t, g)) = best_threshold(&rules, f, region[f], k) {
            if best.is_none_or(|(_, _, b)| g > b + EPS) {
                best = Some((f, t, g));
            }
        }
    }
    let Some((feature, threshold, _)) = best else {
        return leaf(&rules);
    };
    let (mut l, mut r) = (Vec::new(), Vec::new());
    for &rule in &rules {
        let (to_l, to_r) = sides(rule, feature, threshold);
        if to_l {
            l.push(rule);
        }
        if to_r {
            r.push(rule);
        }
    }
    let saved = region[feature];
    region[feature] = (saved.0, threshold);
    let left = grow_cart(l, features, region, depth + 1, p);
    region[feature] = (threshold, saved.1);
    let right = grow_cart(r, features, region, depth + 1, p);
    region[feature] = saved;
    Node::Split(Split::Binary { feature, threshold, left: Box::new(left), right: Box::new(right) })
}
