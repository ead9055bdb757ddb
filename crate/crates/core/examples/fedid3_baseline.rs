//! Federated-ID3 grows one tree from summed class counts; it matches ID3 on
//! the pooled rows while only count tables cross the network.

use fedtree::data::{partition, Manifest, PartitionPlan};
use fedtree::dtree::train_id3;
use fedtree::fedid3::fedid3_build;
use fedtree::TrainParams;

fn main() -> fedtree::Result<()> {
    let manifest = Manifest::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/car.json"))?;
    let data = manifest.load()?;
    let params = TrainParams::id3(data.schema().feature_count());
    let shares = partition(&data, &PartitionPlan::non_iid(4, 3))?;
    let views: Vec<_> = shares.iter().map(|s| data.view(s)).collect();

    let (fed, stats) = fedid3_build(&views, &params)?;
    let all = data.all_indices();
    let pooled = train_id3(data.view(&all), &params)?;
    println!("client sizes {:?}", shares.iter().map(Vec::len).collect::<Vec<_>>());
    println!("exchanges {} messages {} count queries {}", stats.exchanges, stats.messages, stats.queries);
    println!("identical to pooled ID3: {}", fed == pooled);
    println!("accuracy on all rows {:.4}", fed.evaluate(data.view(&all))?.accuracy);
    Ok(())
}
