//! IID and non-IID client shares of the Car data, with per-class counts.

use fedtree::data::{kfold, partition, Manifest, PartitionPlan};

fn main() -> fedtree::Result<()> {
    let manifest = Manifest::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/car.json"))?;
    let data = manifest.load()?;
    let classes = &data.schema().class_names;
    println!("{} rows, classes {:?}", data.len(), classes);

    for plan in [PartitionPlan::iid(5, 7), PartitionPlan::non_iid(5, 7)] {
        println!("\n{:?}", plan.mode);
        let shares = partition(&data, &plan)?;
        for (c, share) in shares.iter().enumerate() {
            let mut counts = vec![0usize; classes.len()];
            for &i in share {
                counts[data.row(i).class] += 1;
            }
            println!("  client {c}: {:4} rows  per class {counts:?}", share.len());
        }
        // Every client gets its own stratified folds.
        let first = &shares[0];
        let labels: Vec<usize> = first.iter().map(|&i| data.row(i).class).collect();
        let folds = kfold(first, &labels, first.len().min(10), 7)?;
        let sizes: Vec<usize> = folds.folds.iter().map(|f| f.test.len()).collect();
        println!("  client 0 test fold sizes {sizes:?}");
    }
    Ok(())
}
