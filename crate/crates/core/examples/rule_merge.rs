//! Two clients' ID3 rule sets merged by the compatibility-checked Cartesian
//! product, and a CART pair showing interval resolution.

use fedtree::data::Schema;
use fedtree::rules::{merge_pair, merge_rulesets, Condition, IntervalOp};
use fedtree::{Rule, RuleSet, TreeKind};

fn cat(feature: usize, symbol: u32) -> Condition {
    Condition::Categorical { feature, symbol }
}

fn rule(conds: Vec<Condition>, y_hat: Vec<f64>, client: usize, leaf: usize) -> Rule {
    Rule::new(conds, y_hat, vec![(client, leaf)])
}

fn show(title: &str, rs: &RuleSet, schema: Option<&Schema>) {
    println!("{title}");
    for r in &rs.rules {
        println!("  {} -> class {}  y_hat {:?}  from {:?}", r.render(schema), r.class(), r.y_hat, r.provenance);
    }
}

fn main() -> fedtree::Result<()> {
    // Client A splits on feature 7 only; client B goes deeper.
    let a = RuleSet {
        kind: TreeKind::Id3,
        rules: vec![
            rule(vec![cat(7, 1)], vec![0.0, 0.0, 0.0, 0.0, 5.0], 0, 0),
            rule(vec![cat(7, 0)], vec![55.0, 0.0, 0.0, 0.0, 0.0], 0, 1),
        ],
    };
    let b = RuleSet {
        kind: TreeKind::Id3,
        rules: vec![
            rule(vec![cat(7, 1), cat(3, 2), cat(4, 1)], vec![0.0, 3.0, 0.0, 0.0, 0.0], 1, 0),
            rule(vec![cat(7, 1), cat(3, 0)], vec![0.0, 0.0, 0.0, 0.0, 4.0], 1, 1),
            rule(vec![cat(7, 0), cat(1, 2)], vec![20.0, 0.0, 0.0, 0.0, 0.0], 1, 2),
            rule(vec![cat(7, 2)], vec![0.0, 0.0, 0.0, 9.0, 0.0], 1, 3),
        ],
    };
    show("client A", &a, None);
    show("client B", &b, None);
    let merged = merge_rulesets(&a, &b)?;
    show("merged (incompatible pairs dropped)", &merged, None);

    // CART: same-direction bounds keep the looser one.
    let gt = |f, v| Condition::Interval { feature: f, op: IntervalOp::Gt, bound: v };
    let le = |f, v| Condition::Interval { feature: f, op: IntervalOp::Le, bound: v };
    let x = Rule::new(vec![gt(0, 32.5)], vec![0.0, 8.0], vec![(0, 1)]);
    let y = Rule::new(vec![gt(0, 35.0), le(2, 4.5)], vec![1.0, 6.0], vec![(1, 3)]);
    let m = merge_pair(&x, &y, TreeKind::Cart)?;
    println!("\nCART {} + {} = {}", x.render(None), y.render(None), m.render(None));
    Ok(())
}
