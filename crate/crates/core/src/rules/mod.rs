//! Decision rules: one per tree leaf, merged across trees by a
//! compatibility-filtered Cartesian product.

mod merge;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{Schema, Value};
use crate::dtree::{argmax, DecisionTree, Node, Split, TreeKind};
use crate::{Error, Result};

pub use merge::{
    compatible, compatible_cart, compatible_id3, fold_merge, merge_pair, merge_rulesets, FoldMerge,
    Truncation, DEFAULT_RULE_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IntervalOp {
    /// `value <= bound`
    Le,
    /// `value > bound`
    Gt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConditionDoc", into = "ConditionDoc")]
pub enum Condition {
    Categorical { feature: usize, symbol: u32 },
    Interval { feature: usize, op: IntervalOp, bound: f64 },
}

/// Wire form: `{feature, op: "=="|"<="|">", value}`.
#[derive(Serialize, Deserialize)]
struct ConditionDoc {
    feature: usize,
    op: String,
    value: f64,
}

impl From<Condition> for ConditionDoc {
    fn from(c: Condition) -> Self {
        match c {
            Condition::Categorical { feature, symbol } => {
                ConditionDoc { feature, op: "==".into(), value: symbol as f64 }
            }
            Condition::Interval { feature, op, bound } => ConditionDoc {
                feature,
                op: match op {
                    IntervalOp::Le => "<=".into(),
                    IntervalOp::Gt => ">".into(),
                },
                value: bound,
            },
        }
    }
}

impl TryFrom<ConditionDoc> for Condition {
    type Error = String;

    fn try_from(d: ConditionDoc) -> std::result::Result<Self, String> {
        if !d.value.is_finite() {
            return Err(format!("non-finite value in condition on feature {}", d.feature));
        }
        match d.op.as_str() {
            "==" => {
                if d.value < 0.0 || d.value.fract() != 0.0 || d.value > u32::MAX as f64 {
                    return Err(format!("symbol {} is not a symbol index", d.value));
                }
                Ok(Condition::Categorical { feature: d.feature, symbol: d.value as u32 })
            }
            "<=" => Ok(Condition::Interval { feature: d.feature, op: IntervalOp::Le, bound: d.value }),
            ">" => Ok(Condition::Interval { feature: d.feature, op: IntervalOp::Gt, bound: d.value }),
            other => Err(format!("unknown operator '{other}'")),
        }
    }
}

impl Condition {
    pub fn feature(&self) -> usize {
        match self {
            Condition::Categorical { feature, .. } | Condition::Interval { feature, .. } => *feature,
        }
    }

    pub fn holds(&self, row: &[Value]) -> bool {
        match *self {
            Condition::Categorical { feature, symbol } => row[feature].as_symbol() == Some(symbol),
            Condition::Interval { feature, op: IntervalOp::Le, bound } => row[feature].as_f64() <= bound,
            Condition::Interval { feature, op: IntervalOp::Gt, bound } => row[feature].as_f64() > bound,
        }
    }

    /// `x7==priority`, `x0<=32.5`. Symbols print by name when the schema
    /// knows them, otherwise by index.
    pub fn render(&self, schema: Option<&Schema>) -> String {
        match *self {
            Condition::Categorical { feature, symbol } => {
                let name = schema
                    .and_then(|s| s.features.get(feature))
                    .and_then(|f| f.symbol(symbol))
                    .map_or_else(|| symbol.to_string(), str::to_string);
                format!("x{feature}=={name}")
            }
            Condition::Interval { feature, op: IntervalOp::Le, bound } => format!("x{feature}<={bound}"),
            Condition::Interval { feature, op: IntervalOp::Gt, bound } => format!("x{feature}>{bound}"),
        }
    }

    fn sort_key(&self) -> (usize, u8, f64) {
        match *self {
            Condition::Categorical { feature, symbol } => (feature, 0, symbol as f64),
            Condition::Interval { feature, op: IntervalOp::Gt, bound } => (feature, 1, bound),
            Condition::Interval { feature, op: IntervalOp::Le, bound } => (feature, 2, bound),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(None))
    }
}

/// (client id, leaf id) pairs a rule was built from.
pub type Provenance = Vec<(usize, usize)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    #[serde(rename = "conditions")]
    pub antecedent: Vec<Condition>,
    pub y_hat: Vec<f64>,
    pub provenance: Provenance,
}

impl Rule {
    /// Builds a rule with the antecedent in canonical order: by feature,
    /// categorical first, then `>` before `<=`.
    pub fn new(mut antecedent: Vec<Condition>, y_hat: Vec<f64>, mut provenance: Provenance) -> Self {
        antecedent.sort_by(|a, b| {
            let (fa, ka, va) = a.sort_key();
            let (fb, kb, vb) = b.sort_key();
            fa.cmp(&fb).then(ka.cmp(&kb)).then(va.total_cmp(&vb))
        });
        provenance.sort_unstable();
        provenance.dedup();
        Rule { antecedent, y_hat, provenance }
    }

    pub fn covers(&self, row: &[Value]) -> bool {
        self.antecedent.iter().all(|c| c.holds(row))
    }

    pub fn class(&self) -> usize {
        argmax(&self.y_hat)
    }

    pub fn mass(&self) -> f64 {
        self.y_hat.iter().sum()
    }

    /// Symbol required for `feature`, if any.
    pub fn symbol_for(&self, feature: usize) -> Option<u32> {
        self.antecedent.iter().find_map(|c| match *c {
            Condition::Categorical { feature: f, symbol } if f == feature => Some(symbol),
            _ => None,
        })
    }

    /// Interval `(lo, hi]` the rule allows for `feature`; unconstrained ends
    /// are infinite.
    pub fn interval(&self, feature: usize) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for c in &self.antecedent {
            if let Condition::Interval { feature: f, op, bound } = *c {
                if f == feature {
                    match op {
                        IntervalOp::Gt => lo = lo.max(bound),
                        IntervalOp::Le => hi = hi.min(bound),
                    }
                }
            }
        }
        (lo, hi)
    }

    pub fn constrains(&self, feature: usize) -> bool {
        self.antecedent.iter().any(|c| c.feature() == feature)
    }

    pub fn render(&self, schema: Option<&Schema>) -> String {
        crate::dtree::render_conjunction(&self.antecedent, schema)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub kind: TreeKind,
    pub rules: Vec<Rule>,
}

impl RuleSet {
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Client ids appearing in any provenance, sorted.
    pub fn clients(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.rules.iter().flat_map(|r| r.provenance.iter().map(|p| p.0)).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// The wire form is a bare JSON list of rules.
    pub fn serialize(&self) -> Vec<u8> {
        serde_json::to_vec(&self.rules).expect("rule serialization cannot fail")
    }

    pub fn deserialize(bytes: &[u8], kind: TreeKind) -> Result<Self> {
        let rules: Vec<Rule> = serde_json::from_slice(bytes)?;
        for r in &rules {
            if r.y_hat.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Format("negative or non-finite y_hat".into()));
            }
        }
        Ok(RuleSet { kind, rules })
    }
}

/// One rule per leaf, with owner id 0.
pub fn extract_rules(t: &DecisionTree) -> RuleSet {
    extract_rules_for(t, 0)
}

/// One rule per leaf; leaf ids count leaves in depth-first order and the
/// provenance is `(owner, leaf id)`.
///
/// Repeated bounds on one feature along a CART path collapse to the
/// tightest. Leaves under a multiway `default` edge have no expressible
/// antecedent and are skipped; local trees never have such edges.
pub fn extract_rules_for(t: &DecisionTree, owner: usize) -> RuleSet {
    let mut rules = Vec::new();
    let mut path = Vec::new();
    let mut leaf_id = 0;
    walk(&t.node, &mut path, owner, &mut leaf_id, &mut rules);
    RuleSet { kind: t.kind, rules }
}

fn walk(node: &Node, path: &mut Vec<Condition>, owner: usize, leaf_id: &mut usize, out: &mut Vec<Rule>) {
    match node {
        Node::Leaf { dist } => {
            out.push(Rule::new(tighten(path), dist.clone(), vec![(owner, *leaf_id)]));
            *leaf_id += 1;
        }
        Node::Split(Split::Multiway { feature, branches, default }) => {
            for b in branches {
                path.push(Condition::Categorical { feature: *feature, symbol: b.value });
                walk(&b.node, path, owner, leaf_id, out);
                path.pop();
            }
            if let Some(d) = default {
                // Count the skipped leaves so ids stay aligned with the tree.
                *leaf_id += d.leaf_count();
            }
        }
        Node::Split(Split::Binary { feature, threshold, left, right }) => {
            for (op, child) in [(IntervalOp::Le, left), (IntervalOp::Gt, right)] {
                path.push(Condition::Interval { feature: *feature, op, bound: *threshold });
                walk(child, path, owner, leaf_id, out);
                path.pop();
            }
        }
    }
}

/// Keeps the tightest `<=` and `>` per feature; categorical conditions pass
/// through.
fn tighten(path: &[Condition]) -> Vec<Condition> {
    let mut out: Vec<Condition> = Vec::new();
    for c in path {
        match *c {
            Condition::Categorical { .. } => out.push(*c),
            Condition::Interval { feature, op, bound } => {
                let existing = out.iter_mut().find(|e| {
                    matches!(e, Condition::Interval { feature: f, op: o, .. } if *f == feature && *o == op)
                });
                match existing {
                    Some(Condition::Interval { bound: b, .. }) => {
                        *b = match op {
                            IntervalOp::Le => b.min(bound),
                            IntervalOp::Gt => b.max(bound),
                        }
                    }
                    _ => out.push(*c),
                }
            }
        }
    }
    out
}
