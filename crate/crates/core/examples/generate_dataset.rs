use tmk_qa::{dataset, demo, kb};

fn main() {
    let kb = kb::compile(&demo::model()).unwrap();
    let templates = demo::templates();
    let ds = dataset::expand(&templates, &kb).unwrap().with_seed(demo::DEFAULT_SEED);

    println!("{} examples (closed form {})", ds.len(), dataset::expected_size(&templates, &kb));
    for c in &ds.manifest.counts {
        println!("  {:<12} {:<14} {}", c.intent, c.template_id, c.count);
    }
    println!("sha256 {}", ds.manifest.dataset_hash);
    for e in ds.examples.iter().step_by(ds.len() / 5) {
        println!("  {:?} -> {} / {}", e.question, e.intent, e.object_id);
    }

    let (train, held) = dataset::split(&ds, 0.15, 42).unwrap();
    println!("split: {} train, {} held out", train.len(), held.len());
}
