//! Train ID3 and CART on Car, report training accuracy, and explain a row.

use fedtree::data::{discretize_numeric, encode_ordinal, Manifest, DEFAULT_BINS};
use fedtree::dtree::render_conjunction;
use fedtree::{DecisionTree, TrainParams, TreeKind};

fn main() -> fedtree::Result<()> {
    let manifest = Manifest::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/car.json"))?;
    let raw = manifest.load()?;
    let f = raw.schema().feature_count();

    for kind in [TreeKind::Id3, TreeKind::Cart] {
        let data = match kind {
            TreeKind::Id3 => discretize_numeric(&raw, DEFAULT_BINS)?,
            TreeKind::Cart => encode_ordinal(&raw)?,
        };
        let all = data.all_indices();
        let params = TrainParams::for_kind(kind, f);
        let tree = DecisionTree::train(data.view(&all), kind, &params)?;
        let m = tree.evaluate(data.view(&all))?;
        println!(
            "{kind:?}: depth {} leaves {} train acc {:.4} macro-F1 {:.4} ({} bytes as JSON)",
            tree.depth(),
            tree.leaf_count(),
            m.accuracy,
            m.macro_f1,
            tree.serialize().len()
        );
        let row = data.row(100);
        let class = tree.predict(&row.values);
        let path = render_conjunction(&tree.explain(&row.values), Some(data.schema()));
        println!("  row 100 -> {} with {path}", data.schema().class_names[class]);
    }
    Ok(())
}
