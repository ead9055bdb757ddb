//! Local decision trees: multiway ID3 over categorical features and binary
//! CART over numeric ones.
//!
//! Leaves store raw class counts, so summing leaves (or rules derived from
//! them) weights by instance mass and argmax is unaffected by scale.

mod cart;
mod id3;

use serde::{Deserialize, Serialize};

use crate::data::{DataView, Schema, Value};
use crate::metrics::Metrics;
use crate::rules::{Condition, IntervalOp};
use crate::{Error, Result};

pub use cart::train_cart;
pub(crate) use id3::choose_categorical_split;
pub use id3::train_id3;

/// Threshold comparisons treat values this close as equal.
pub const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeKind {
    Id3,
    Cart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    InfoGain,
    Gini,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainParams {
    pub max_depth: usize,
    pub criterion: Criterion,
    pub min_leaf: usize,
}

impl TrainParams {
    /// Information gain with depth `ceil(feature_count / 2)`.
    pub fn id3(feature_count: usize) -> Self {
        TrainParams {
            max_depth: feature_count.div_ceil(2).max(1),
            criterion: Criterion::InfoGain,
            min_leaf: 1,
        }
    }

    /// Gini with depth 5.
    pub fn cart() -> Self {
        TrainParams { max_depth: 5, criterion: Criterion::Gini, min_leaf: 1 }
    }

    pub fn for_kind(kind: TreeKind, feature_count: usize) -> Self {
        match kind {
            TreeKind::Id3 => Self::id3(feature_count),
            TreeKind::Cart => Self::cart(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf { dist: Vec<f64> },
    Split(Split),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Split {
    /// One child per observed symbol. `default` catches symbols with no
    /// branch; without it they follow the heaviest branch.
    Multiway {
        feature: usize,
        branches: Vec<Branch>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        default: Option<Box<Node>>,
    },
    /// `value <= threshold` goes left.
    Binary { feature: usize, threshold: f64, left: Box<Node>, right: Box<Node> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub value: u32,
    pub node: Node,
}

impl Node {
    pub fn leaf(dist: Vec<f64>) -> Self {
        Node::Leaf { dist }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }

    /// Total leaf mass below this node.
    pub fn mass(&self) -> f64 {
        match self {
            Node::Leaf { dist } => dist.iter().sum(),
            Node::Split(Split::Multiway { branches, default, .. }) => {
                branches.iter().map(|b| b.node.mass()).sum::<f64>()
                    + default.as_ref().map_or(0.0, |d| d.mass())
            }
            Node::Split(Split::Binary { left, right, .. }) => left.mass() + right.mass(),
        }
    }

    /// Child taken by `row`, plus the condition that edge asserts (`None`
    /// for default or fallback routing).
    fn step<'a>(&'a self, row: &[Value]) -> Option<(&'a Node, Option<Condition>)> {
        match self {
            Node::Leaf { .. } => None,
            Node::Split(Split::Multiway { feature, branches, default }) => {
                let sym = row[*feature].as_symbol().unwrap_or(u32::MAX);
                if let Some(b) = branches.iter().find(|b| b.value == sym) {
                    let cond = Condition::Categorical { feature: *feature, symbol: sym };
                    return Some((&b.node, Some(cond)));
                }
                if let Some(d) = default {
                    return Some((d, None));
                }
                Some((heaviest(branches), None))
            }
            Node::Split(Split::Binary { feature, threshold, left, right }) => {
                let x = row[*feature].as_f64();
                let (child, op) =
                    if x <= *threshold { (left, IntervalOp::Le) } else { (right, IntervalOp::Gt) };
                let cond = Condition::Interval { feature: *feature, op, bound: *threshold };
                Some((child, Some(cond)))
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split(Split::Multiway { branches, default, .. }) => {
                1 + branches
                    .iter()
                    .map(|b| b.node.depth())
                    .chain(default.iter().map(|d| d.depth()))
                    .max()
                    .unwrap_or(0)
            }
            Node::Split(Split::Binary { left, right, .. }) => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split(Split::Multiway { branches, default, .. }) => {
                branches.iter().map(|b| b.node.leaf_count()).sum::<usize>()
                    + default.as_ref().map_or(0, |d| d.leaf_count())
            }
            Node::Split(Split::Binary { left, right, .. }) => left.leaf_count() + right.leaf_count(),
        }
    }
}

/// Heaviest branch; the first one wins ties.
fn heaviest(branches: &[Branch]) -> &Node {
    let mut best = &branches[0].node;
    let mut best_mass = best.mass();
    for b in &branches[1..] {
        let m = b.node.mass();
        if m > best_mass {
            best = &b.node;
            best_mass = m;
        }
    }
    best
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(dist: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in dist.iter().enumerate() {
        if v > dist[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub kind: TreeKind,
    pub max_depth: usize,
    pub node: Node,
}

impl DecisionTree {
    pub fn train(view: DataView<'_>, kind: TreeKind, params: &TrainParams) -> Result<Self> {
        match kind {
            TreeKind::Id3 => train_id3(view, params),
            TreeKind::Cart => train_cart(view, params),
        }
    }

    fn leaf_reached(&self, row: &[Value]) -> &[f64] {
        let mut node = &self.node;
        while let Some((next, _)) = node.step(row) {
            node = next;
        }
        match node {
            Node::Leaf { dist } => dist,
            Node::Split(_) => unreachable!("step only stops at leaves"),
        }
    }

    pub fn predict_dist(&self, row: &[Value]) -> &[f64] {
        self.leaf_reached(row)
    }

    pub fn predict(&self, row: &[Value]) -> usize {
        argmax(self.leaf_reached(row))
    }

    pub fn evaluate(&self, view: DataView<'_>) -> Result<Metrics> {
        if view.is_empty() {
            return Err(Error::EmptyView);
        }
        let truth = view.classes();
        let pred: Vec<usize> = view.rows().map(|r| self.predict(&r.values)).collect();
        Metrics::compute(&truth, &pred, view.schema().class_count())
    }

    /// Conditions on the root-to-leaf path that `row` satisfies, in path
    /// order. Default or fallback edges contribute no condition.
    pub fn explain(&self, row: &[Value]) -> Vec<Condition> {
        let mut out = Vec::new();
        let mut node = &self.node;
        while let Some((next, cond)) = node.step(row) {
            out.extend(cond);
            node = next;
        }
        out
    }

    pub fn depth(&self) -> usize {
        self.node.depth()
    }

    pub fn leaf_count(&self) -> usize {
        self.node.leaf_count()
    }

    pub fn class_count(&self) -> usize {
        fn first_leaf(n: &Node) -> usize {
            match n {
                Node::Leaf { dist } => dist.len(),
                Node::Split(Split::Multiway { branches, default, .. }) => branches
                    .first()
                    .map(|b| first_leaf(&b.node))
                    .or(default.as_deref().map(first_leaf))
                    .unwrap_or(0),
                Node::Split(Split::Binary { left, .. }) => first_leaf(left),
            }
        }
        first_leaf(&self.node)
    }

    pub fn serialize(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("tree serialization cannot fail")
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        if bytes.iter().all(u8::is_ascii_whitespace) {
            return Err(Error::Format("empty tree document".into()));
        }
        let tree: DecisionTree = serde_json::from_slice(bytes)?;
        tree.validate()?;
        Ok(tree)
    }

    /// Structural checks for trees that arrive from outside.
    pub fn validate(&self) -> Result<()> {
        let k = self.class_count();
        if k == 0 {
            return Err(Error::Format("tree has no class distribution".into()));
        }
        self.validate_node(&self.node, k, &mut Vec::new())
    }

    fn validate_node(&self, node: &Node, k: usize, path: &mut Vec<usize>) -> Result<()> {
        match node {
            Node::Leaf { dist } => {
                if dist.len() != k {
                    return Err(Error::Format(format!("leaf has {} classes, expected {k}", dist.len())));
                }
                if dist.iter().any(|v| !v.is_finite() || *v < 0.0) || !dist.iter().any(|&v| v > 0.0) {
                    return Err(Error::Format(format!("invalid leaf distribution {dist:?}")));
                }
                Ok(())
            }
            Node::Split(Split::Multiway { feature, branches, default }) => {
                if self.kind != TreeKind::Id3 {
                    return Err(Error::Format("multiway split in a CART tree".into()));
                }
                if branches.is_empty() {
                    return Err(Error::Format("multiway split without branches".into()));
                }
                if path.contains(feature) {
                    return Err(Error::Format(format!("feature {feature} repeated on a path")));
                }
                path.push(*feature);
                for b in branches {
                    self.validate_node(&b.node, k, path)?;
                }
                if let Some(d) = default {
                    self.validate_node(d, k, path)?;
                }
                path.pop();
                Ok(())
            }
            Node::Split(Split::Binary { threshold, left, right, .. }) => {
                if self.kind != TreeKind::Cart {
                    return Err(Error::Format("binary split in an ID3 tree".into()));
                }
                if !threshold.is_finite() {
                    return Err(Error::Format("non-finite threshold".into()));
                }
                self.validate_node(left, k, path)?;
                self.validate_node(right, k, path)
            }
        }
    }
}

/// Renders a conjunction the way explanations are printed, e.g.
/// `{x7==priority, x1==improper}`. Symbol names come from `schema` when given.
pub fn render_conjunction(conds: &[Condition], schema: Option<&Schema>) -> String {
    let parts: Vec<String> = conds.iter().map(|c| c.render(schema)).collect();
    format!("{{{}}}", parts.join(", "))
}

/// Class counts of the rows in `view`.
pub(crate) fn class_counts(view: &DataView<'_>, k: usize) -> Vec<u64> {
    let mut counts = vec![0u64; k];
    for r in view.rows() {
        counts[r.class] += 1;
    }
    counts
}

pub(crate) fn to_dist(counts: &[u64]) -> Vec<f64> {
    counts.iter().map(|&c| c as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, Feature, Row};

    pub(crate) fn xor() -> Dataset {
        let schema = Schema {
            features: vec![Feature::categorical("a", &["0", "1"]), Feature::categorical("b", &["0", "1"])],
            class_names: vec!["no".into(), "yes".into()],
        };
        let rows = [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)]
            .iter()
            .map(|&(a, b, c)| Row { values: vec![Value::Cat(a), Value::Cat(b)], class: c })
            .collect();
        Dataset::new(schema, rows).unwrap()
    }

    fn xor_tree() -> DecisionTree {
        let d = xor();
        let idx = d.all_indices();
        let p = TrainParams { max_depth: 2, ..TrainParams::id3(2) };
        train_id3(d.view(&idx), &p).unwrap()
    }

    #[test]
    fn default_depths() {
        assert_eq!(TrainParams::id3(8).max_depth, 4);
        assert_eq!(TrainParams::id3(6).max_depth, 3);
        assert_eq!(TrainParams::id3(7).max_depth, 4);
        assert_eq!(TrainParams::cart().max_depth, 5);
    }

    #[test]
    fn argmax_tie_goes_low() {
        assert_eq!(argmax(&[2.0, 5.0, 5.0]), 1);
        let t = DecisionTree { kind: TreeKind::Id3, max_depth: 1, node: Node::leaf(vec![3.0, 3.0]) };
        assert_eq!(t.predict(&[]), 0);
    }

    #[test]
    fn single_leaf_explains_nothing() {
        let t = DecisionTree { kind: TreeKind::Id3, max_depth: 1, node: Node::leaf(vec![1.0, 0.0]) };
        assert!(t.explain(&[Value::Cat(0)]).is_empty());
        assert_eq!(render_conjunction(&t.explain(&[]), None), "{}");
    }

    #[test]
    fn xor_round_trip_is_byte_identical() {
        let t = xor_tree();
        let bytes = t.serialize();
        let back = DecisionTree::deserialize(&bytes).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.serialize(), bytes);
    }

    #[test]
    fn json_shape() {
        let t = xor_tree();
        let v: serde_json::Value = serde_json::from_slice(&t.serialize()).unwrap();
        assert_eq!(v["kind"], "id3");
        assert_eq!(v["max_depth"], 2);
        assert!(v["node"]["split"]["branches"].is_array());
        let leaf = &v["node"]["split"]["branches"][0]["node"]["split"]["branches"][0]["node"];
        assert!(leaf["leaf"]["dist"].is_array());
    }

    #[test]
    fn empty_and_malformed_documents_rejected() {
        assert!(matches!(DecisionTree::deserialize(b""), Err(Error::Format(_))));
        assert!(matches!(DecisionTree::deserialize(b"{\"kind\":\"id3\"}"), Err(Error::Format(_))));
        let bad = br#"{"kind":"id3","max_depth":1,"node":{"leaf":{"dist":[0.0,0.0]}}}"#;
        assert!(DecisionTree::deserialize(bad).is_err());
        let wrong_kind = br#"{"kind":"id3","max_depth":1,"node":{"split":{"feature":0,"threshold":0.5,
            "left":{"leaf":{"dist":[1.0,0.0]}},"right":{"leaf":{"dist":[0.0,1.0]}}}}}"#;
        assert!(DecisionTree::deserialize(wrong_kind).is_err());
    }

    #[test]
    fn unseen_symbol_follows_heaviest_branch() {
        let node = Node::Split(Split::Multiway {
            feature: 0,
            branches: vec![
                Branch { value: 0, node: Node::leaf(vec![2.0, 0.0]) },
                Branch { value: 1, node: Node::leaf(vec![0.0, 7.0]) },
            ],
            default: None,
        });
        let t = DecisionTree { kind: TreeKind::Id3, max_depth: 1, node };
        assert_eq!(t.predict(&[Value::Cat(5)]), 1);
        assert!(t.explain(&[Value::Cat(5)]).is_empty());
    }

    #[test]
    fn explain_path_replays_to_prediction() {
        let t = xor_tree();
        let d = xor();
        for r in d.rows() {
            let path = t.explain(&r.values);
            assert_eq!(path.len(), 2);
            // Replay: follow the branch named by each condition.
            let mut node = &t.node;
            for c in &path {
                node = match (node, c) {
                    (Node::Split(Split::Multiway { branches, .. }), Condition::Categorical { symbol, .. }) => {
                        &branches.iter().find(|b| b.value == *symbol).unwrap().node
                    }
                    _ => panic!("unexpected node"),
                };
            }
            match node {
                Node::Leaf { dist } => assert_eq!(argmax(dist), t.predict(&r.values)),
                _ => panic!("path did not end at a leaf"),
            }
        }
    }

    #[test]
    fn rendering_uses_symbol_names() {
        let d = xor();
        let c = vec![
            Condition::Categorical { feature: 1, symbol: 1 },
            Condition::Interval { feature: 0, op: IntervalOp::Gt, bound: 32.5 },
        ];
        assert_eq!(render_conjunction(&c, Some(d.schema())), "{x1==1, x0>32.5}");
    }

    #[test]
    fn evaluate_all_wrong_constant() {
        let d = xor();
        let idx = d.all_indices();
        let t = DecisionTree { kind: TreeKind::Id3, max_depth: 1, node: Node::leaf(vec![0.0, 1.0]) };
        let m = t.evaluate(d.view(&[idx[0], idx[3]])).unwrap();
        assert_eq!((m.accuracy, m.macro_f1), (0.0, 0.0));
        assert!(matches!(t.evaluate(d.view(&[])), Err(Error::EmptyView)));
    }
}
