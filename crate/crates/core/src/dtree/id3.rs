use super::{class_counts, to_dist, Branch, DecisionTree, Node, Split, TrainParams, TreeKind, EPS};
use crate::data::{DataView, FeatureKind};
use crate::{Error, Result};

/// Shannon entropy (bits) of a count vector.
pub(crate) fn entropy(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Picks the feature with the highest information gain.
///
/// `tables` holds, per candidate feature, `table[symbol][class]` counts of
/// the node's rows. A feature qualifies when at least two symbols occur and
/// every occurring symbol has `min_leaf` rows. Gains within `EPS` of each
/// other tie, and the earlier (lower-index) feature wins. Gain may be zero:
/// an impure node still splits if any feature qualifies.
///
/// Both the centralized trainer and the federated count protocol go through
/// this function, which keeps their trees identical.
pub(crate) fn choose_categorical_split(
    parent: &[u64],
    tables: &[(usize, Vec<Vec<u64>>)],
    min_leaf: u64,
) -> Option<usize> {
    let n: u64 = parent.iter().sum();
    let h = entropy(parent);
    let mut best: Option<(usize, f64)> = None;
    for (feature, table) in tables {
        let sizes: Vec<u64> = table.iter().map(|row| row.iter().sum()).collect();
        let occurring = sizes.iter().filter(|&&s| s > 0).count();
        if occurring < 2 || sizes.iter().any(|&s| s > 0 && s < min_leaf) {
            continue;
        }
        let child: f64 = table
            .iter()
            .zip(&sizes)
            .filter(|(_, &s)| s > 0)
            .map(|(row, &s)| s as f64 / n as f64 * entropy(row))
            .sum();
        let gain = h - child;
        if best.is_none_or(|(_, g)| gain > g + EPS) {
            best = Some((*feature, gain));
        }
    }
    best.map(|(f, _)| f)
}

/// Multiway ID3 with information gain. Every feature must be categorical.
pub fn train_id3(view: DataView<'_>, p: &TrainParams) -> Result<DecisionTree> {
    if view.is_empty() {
        return Err(Error::EmptyView);
    }
    let schema = view.schema();
    if !schema.all_categorical() {
        return Err(Error::Schema("ID3 needs categorical features; discretize first".into()));
    }
    let mut available: Vec<bool> = vec![true; schema.feature_count()];
    let node = grow(view, view.indices().to_vec(), p, 0, &mut available);
    Ok(DecisionTree { kind: TreeKind::Id3, max_depth: p.max_depth, node })
}

fn grow(
    view: DataView<'_>,
    rows: Vec<usize>,
    p: &TrainParams,
    depth: usize,
    available: &mut [bool],
) -> Node {
    let data = view.dataset();
    let schema = view.schema();
    let k = schema.class_count();
    let counts = class_counts(&data.view(&rows), k);
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || depth >= p.max_depth {
        return Node::leaf(to_dist(&counts));
    }

    let tables: Vec<(usize, Vec<Vec<u64>>)> = (0..schema.feature_count())
        .filter(|&f| available[f] && schema.features[f].kind == FeatureKind::Categorical)
        .map(|f| {
            let mut table = vec![vec![0u64; k]; schema.features[f].symbols.len()];
            for &i in &rows {
                let r = data.row(i);
                let s = r.values[f].as_symbol().expect("categorical value") as usize;
                table[s][r.class] += 1;
            }
            (f, table)
        })
        .collect();
    let Some(feature) = choose_categorical_split(&counts, &tables, p.min_leaf as u64) else {
        return Node::leaf(to_dist(&counts));
    };

    let arity = schema.features[feature].symbols.len();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); arity];
    for &i in &rows {
        let s = data.row(i).values[feature].as_symbol().expect("categorical value");
        groups[s as usize].push(i);
    }
    available[feature] = false;
    let branches = groups
        .into_iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .map(|(s, g)| Branch { value: s as u32, node: grow(view, g, p, depth + 1, available) })
        .collect();
    available[feature] = true;
    Node::Split(Split::Multiway { feature, branches, default: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, Feature, Row, Schema, Value};
    use crate::dtree::tests::xor;
    use proptest::prelude::*;

    #[test]
    fn entropy_basics() {
        assert_eq!(entropy(&[4, 0]), 0.0);
        assert!((entropy(&[2, 2]) - 1.0).abs() < 1e-15);
        assert_eq!(entropy(&[0, 0]), 0.0);
    }

    #[test]
    fn single_class_is_one_leaf() {
        let schema = Schema {
            features: vec![Feature::categorical("a", &["u", "v"])],
            class_names: vec!["p".into(), "q".into()],
        };
        let rows = (0..6).map(|i| Row { values: vec![Value::Cat(i % 2)], class: 1 }).collect();
        let d = Dataset::new(schema, rows).unwrap();
        let idx = d.all_indices();
        let t = train_id3(d.view(&idx), &TrainParams::id3(1)).unwrap();
        assert_eq!(t.node, Node::leaf(vec![0.0, 6.0]));
    }

    #[test]
    fn xor_needs_depth_two_and_fits() {
        let d = xor();
        let idx = d.all_indices();
        let t = train_id3(d.view(&idx), &TrainParams { max_depth: 2, ..TrainParams::id3(2) }).unwrap();
        assert_eq!(t.depth(), 2);
        // Both features have zero gain at the root; the lower index wins.
        match &t.node {
            Node::Split(Split::Multiway { feature, .. }) => assert_eq!(*feature, 0),
            _ => panic!("expected a split"),
        }
        for r in d.rows() {
            assert_eq!(t.predict(&r.values), r.class);
        }
    }

    #[test]
    fn numeric_features_rejected() {
        let schema = Schema { features: vec![Feature::numeric("x")], class_names: vec!["a".into(), "b".into()] };
        let d = Dataset::new(schema, vec![Row { values: vec![Value::Num(1.0)], class: 0 }]).unwrap();
        let idx = d.all_indices();
        assert!(train_id3(d.view(&idx), &TrainParams::id3(1)).is_err());
        assert!(matches!(train_id3(d.view(&[]), &TrainParams::id3(1)), Err(Error::EmptyView)));
    }

    fn random_dataset(rows: &[(u32, u32, u32, usize)]) -> Dataset {
        let schema = Schema {
            features: vec![
                Feature::categorical("a", &["0", "1", "2"]),
                Feature::categorical("b", &["0", "1"]),
                Feature::categorical("c", &["0", "1", "2", "3"]),
            ],
            class_names: vec!["x".into(), "y".into(), "z".into()],
        };
        let rows = rows
            .iter()
            .map(|&(a, b, c, y)| Row { values: vec![Value::Cat(a), Value::Cat(b), Value::Cat(c)], class: y })
            .collect();
        Dataset::new(schema, rows).unwrap()
    }

    fn row_strategy() -> impl Strategy<Value = Vec<(u32, u32, u32, usize)>> {
        prop::collection::vec((0u32..3, 0u32..2, 0u32..4, 0usize..3), 1..30)
    }

    /// Root feature by direct gain computation over every feature.
    fn root_oracle(d: &Dataset) -> Option<usize> {
        let n = d.len() as f64;
        let h = |rows: &[&Row]| {
            let m = rows.len() as f64;
            (0..3)
                .map(|c| rows.iter().filter(|r| r.class == c).count() as f64 / m)
                .filter(|&p| p > 0.0)
                .map(|p| -p * p.log2())
                .sum::<f64>()
        };
        let all: Vec<&Row> = d.rows().iter().collect();
        if all.iter().all(|r| r.class == all[0].class) {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for f in 0..3 {
            let arity = d.schema().features[f].symbols.len() as u32;
            let parts: Vec<Vec<&Row>> = (0..arity)
                .map(|s| all.iter().copied().filter(|r| r.values[f] == Value::Cat(s)).collect())
                .filter(|g: &Vec<&Row>| !g.is_empty())
                .collect();
            if parts.len() < 2 {
                continue;
            }
            let g = h(&all) - parts.iter().map(|p| p.len() as f64 / n * h(p)).sum::<f64>();
            if best.is_none_or(|(_, b)| g > b + 1e-12) {
                best = Some((f, g));
            }
        }
        best.map(|(f, _)| f)
    }

    proptest! {
        #[test]
        fn root_split_matches_oracle(rows in row_strategy()) {
            let d = random_dataset(&rows);
            let idx = d.all_indices();
            let t = train_id3(d.view(&idx), &TrainParams::id3(3)).unwrap();
            let got = match &t.node {
                Node::Split(Split::Multiway { feature, .. }) => Some(*feature),
                _ => None,
            };
            prop_assert_eq!(got, root_oracle(&d));
        }

        #[test]
        fn structure_invariants(rows in row_strategy(), depth in 1usize..4) {
            let d = random_dataset(&rows);
            let idx = d.all_indices();
            let p = TrainParams { max_depth: depth, ..TrainParams::id3(3) };
            let t = train_id3(d.view(&idx), &p).unwrap();
            prop_assert!(t.depth() <= depth);
            prop_assert!(t.validate().is_ok());
            prop_assert!((t.node.mass() - d.len() as f64).abs() < 1e-9);
            let again = train_id3(d.view(&idx), &p).unwrap();
            prop_assert_eq!(again, t);
        }
    }
}
