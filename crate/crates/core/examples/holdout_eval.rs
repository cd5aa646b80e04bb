use tmk_qa::{dataset, demo, eval, ClassifierConfig, EngineConfig, Snapshot};

fn main() {
    let (full, ds) = demo::snapshot();
    let in_vitro = eval::evaluate_dataset(&full, &ds);
    println!("in vitro: {}/{} ({:.1}%)", in_vitro.correct, in_vitro.total, in_vitro.accuracy * 100.0);

    for seed in [42, 7, 2024] {
        let (train, held) = dataset::split(&ds, 0.15, seed).unwrap();
        let s = Snapshot::build_with_dataset(
            full.model.clone(),
            full.kb.clone(),
            &train,
            seed,
            &ClassifierConfig::default(),
            EngineConfig::default(),
        )
        .unwrap();
        let r = eval::evaluate_dataset(&s, &held);
        println!(
            "holdout seed {seed}: strict {:.1}%, behavioral {:.1}% over {} unseen paraphrases",
            r.accuracy * 100.0,
            r.behavioral_accuracy * 100.0,
            r.total
        );
    }
}
