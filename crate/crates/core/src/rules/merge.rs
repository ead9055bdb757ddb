use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Condition, IntervalOp, Rule, RuleSet};
use crate::dtree::TreeKind;
use crate::{Error, Result};

/// Intermediate rule sets above this size are truncated by `fold_merge`.
pub const DEFAULT_RULE_CAP: usize = 50_000;

fn features(r: &Rule) -> BTreeSet<usize> {
    r.antecedent.iter().map(Condition::feature).collect()
}

/// Equal symbols on every feature both rules constrain.
pub fn compatible_id3(a: &Rule, b: &Rule) -> bool {
    a.antecedent.iter().all(|ca| match *ca {
        Condition::Categorical { feature, symbol } => b.symbol_for(feature).is_none_or(|s| s == symbol),
        Condition::Interval { .. } => true,
    })
}

/// Intersecting `(lo, hi]` intervals on every feature both rules constrain.
pub fn compatible_cart(a: &Rule, b: &Rule) -> bool {
    let fa = features(a);
    features(b).intersection(&fa).all(|&f| {
        let (la, ha) = a.interval(f);
        let (lb, hb) = b.interval(f);
        la.max(lb) < ha.min(hb)
    })
}

pub fn compatible(kind: TreeKind, a: &Rule, b: &Rule) -> bool {
    match kind {
        TreeKind::Id3 => compatible_id3(a, b),
        TreeKind::Cart => compatible_cart(a, b),
    }
}

/// Conjunction of two compatible rules with summed `y_hat`.
///
/// ID3 antecedents are unioned. For CART, two bounds in the same direction
/// on one feature collapse to the less restrictive one (larger `<=`,
/// smaller `>`); opposite directions are both kept.
pub fn merge_pair(a: &Rule, b: &Rule, kind: TreeKind) -> Result<Rule> {
    if !compatible(kind, a, b) {
        return Err(Error::Contract(format!(
            "merging incompatible rules {:?} and {:?}",
            a.provenance, b.provenance
        )));
    }
    if a.y_hat.len() != b.y_hat.len() {
        return Err(Error::Contract("rules disagree on class count".into()));
    }
    let antecedent = match kind {
        TreeKind::Id3 => {
            let mut conds = a.antecedent.clone();
            for c in &b.antecedent {
                if !conds.contains(c) {
                    conds.push(*c);
                }
            }
            conds
        }
        TreeKind::Cart => relaxed_union(a, b),
    };
    let y_hat = a.y_hat.iter().zip(&b.y_hat).map(|(x, y)| x + y).collect();
    let provenance = a.provenance.iter().chain(&b.provenance).copied().collect();
    Ok(Rule::new(antecedent, y_hat, provenance))
}

fn relaxed_union(a: &Rule, b: &Rule) -> Vec<Condition> {
    let mut out = Vec::new();
    let feats: BTreeSet<usize> = features(a).union(&features(b)).copied().collect();
    for f in feats {
        for op in [IntervalOp::Gt, IntervalOp::Le] {
            let bound_of = |r: &Rule| {
                r.antecedent.iter().find_map(|c| match *c {
                    Condition::Interval { feature, op: o, bound } if feature == f && o == op => Some(bound),
                    _ => None,
                })
            };
            let bound = match (bound_of(a), bound_of(b)) {
                (Some(x), Some(y)) => Some(match op {
                    IntervalOp::Le => x.max(y),
                    IntervalOp::Gt => x.min(y),
                }),
                (x, y) => x.or(y),
            };
            if let Some(bound) = bound {
                out.push(Condition::Interval { feature: f, op, bound });
            }
        }
        // Categorical conditions are not expected in CART rules, but keep
        // them rather than dropping constraints silently.
        for c in a.antecedent.iter().chain(&b.antecedent) {
            if matches!(c, Condition::Categorical { feature, .. } if *feature == f) && !out.contains(c) {
                out.push(*c);
            }
        }
    }
    out
}

fn sort_by_provenance(rules: &mut [Rule]) {
    rules.sort_by(|x, y| x.provenance.cmp(&y.provenance));
}

/// Merges the `cap` heaviest compatible pairs. Merged mass is the sum of
/// both masses, so pairs are ranked before any rule is built; ties keep
/// `(i, j)` order.
fn merge_capped(a: &RuleSet, b: &RuleSet, cap: usize) -> Result<(RuleSet, usize)> {
    if a.kind != b.kind {
        return Err(Error::Contract("merging rule sets of different kinds".into()));
    }
    let kind = a.kind;
    let mut pairs: Vec<(u32, u32)> = (0..a.rules.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let ra = &a.rules[i];
            b.rules
                .iter()
                .enumerate()
                .filter(move |(_, rb)| compatible(kind, ra, rb))
                .map(move |(j, _)| (i as u32, j as u32))
        })
        .collect();
    let total = pairs.len();
    if total > cap {
        let mass = |&(i, j): &(u32, u32)| a.rules[i as usize].mass() + b.rules[j as usize].mass();
        pairs.par_sort_by(|x, y| mass(y).total_cmp(&mass(x)).then(x.cmp(y)));
        pairs.truncate(cap);
    }
    let mut rules = pairs
        .par_iter()
        .map(|&(i, j)| merge_pair(&a.rules[i as usize], &b.rules[j as usize], kind))
        .collect::<Result<Vec<_>>>()?;
    sort_by_provenance(&mut rules);
    Ok((RuleSet { kind, rules }, total))
}

/// Every merge of a compatible pair from `a × b`, ordered by provenance.
/// Rules with no compatible partner are dropped.
pub fn merge_rulesets(a: &RuleSet, b: &RuleSet) -> Result<RuleSet> {
    let (out, _) = merge_capped(a, b, usize::MAX)?;
    if out.is_empty() {
        let mut surviving = a.clients();
        surviving.extend(b.clients());
        surviving.sort_unstable();
        surviving.dedup();
        return Err(Error::DegenerateMerge { step: 1, surviving });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    /// 1-based index of the merge that overflowed.
    pub step: usize,
    pub produced: usize,
    pub kept: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldMerge {
    pub rules: RuleSet,
    pub truncations: Vec<Truncation>,
}

/// Left fold of the pairwise merge over `sets` in the given order (callers
/// pass them strongest first). Any intermediate result above `cap` keeps the
/// `cap` rules with the largest `y_hat` mass.
pub fn fold_merge(sets: &[RuleSet], cap: usize) -> Result<FoldMerge> {
    let Some(first) = sets.first() else {
        return Err(Error::Contract("fold_merge needs at least one rule set".into()));
    };
    if cap == 0 {
        return Err(Error::Config("rule cap must be positive".into()));
    }
    let surviving = || {
        let mut ids: Vec<usize> = sets.iter().flat_map(RuleSet::clients).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    };
    let mut acc = first.clone();
    sort_by_provenance(&mut acc.rules);
    let mut truncations = Vec::new();
    if acc.len() > cap {
        let produced = acc.len();
        keep_heaviest(&mut acc, cap);
        truncations.push(Truncation { step: 0, produced, kept: cap });
    }
    for (step, next) in sets.iter().enumerate().skip(1) {
        let (merged, produced) = merge_capped(&acc, next, cap)?;
        if merged.is_empty() {
            return Err(Error::DegenerateMerge { step, surviving: surviving() });
        }
        if produced > cap {
            truncations.push(Truncation { step, produced, kept: merged.len() });
        }
        acc = merged;
    }
    Ok(FoldMerge { rules: acc, truncations })
}

fn keep_heaviest(rs: &mut RuleSet, cap: usize) {
    let mut order: Vec<usize> = (0..rs.len()).collect();
    order.sort_by(|&x, &y| rs.rules[y].mass().total_cmp(&rs.rules[x].mass()).then(x.cmp(&y)));
    order.truncate(cap);
    order.sort_unstable();
    let kept: Vec<Rule> = order.into_iter().map(|i| rs.rules[i].clone()).collect();
    rs.rules = kept;
}
