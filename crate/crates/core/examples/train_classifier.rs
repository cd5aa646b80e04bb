use tmk_qa::classifier::{self, ClassifierConfig, IntentModel};
use tmk_qa::{dataset, demo, kb, Intent};

fn main() {
    let kb = kb::compile(&demo::model()).unwrap();
    let ds = dataset::expand(&demo::templates(), &kb).unwrap();
    let model = classifier::train(&ds, 42, &ClassifierConfig::default()).unwrap();
    println!("{} features, trained on {} examples", model.vocabulary.len(), model.manifest.dataset_size);

    for q in [
        "What is an alignment score?",
        "Why is the proposal summary important?",
        "what do i need before starting an RFP",
        "Walk me through the training request.",
        "banana",
    ] {
        let s = model.classify(q).unwrap();
        let all: Vec<String> = Intent::ALL
            .iter()
            .map(|i| format!("{i} {:.2}", s.confidence(*i)))
            .collect();
        println!("{q:?}\n  top {} ({:.3}); {}", s.top_intent, s.top_confidence, all.join(", "));
    }

    let json = model.to_json();
    assert_eq!(IntentModel::from_json(&json).unwrap(), model);
    println!("artifact: {} bytes, round-trips", json.len());
}
