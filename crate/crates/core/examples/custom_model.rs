use tmk_qa::{demo, model, ClassifierConfig, EngineConfig, Snapshot};

const MODEL: &str = r#"{
  "name": "library-app",
  "version": "0.1.0",
  "glossary": [
    {"id": "hold", "term": "Hold", "aliases": ["Holds"], "definition": "a reservation on a checked-out item"},
    {"id": "due-date", "term": "Due Date", "definition": "the day a loan must be returned"}
  ],
  "tasks": [
    {"id": "borrow-book", "name": "Borrow Book", "keywords": ["Checkout"],
     "goal": "The patron leaves with a book on loan.",
     "inputs": ["Library card", "Book"], "outputs": ["Loan record"],
     "subtasks": ["scan-card"], "primitive_action": "none"},
    {"id": "scan-card", "name": "Scan Card", "goal": "The patron is identified.",
     "inputs": ["Library card"], "outputs": ["Patron session"], "subtasks": [],
     "primitive_action": "button-click"}
  ],
  "methods": [
    {"id": "self-checkout", "name": "Self checkout", "description": "Scan, then borrow.",
     "transitions": [{"state": "identified", "subtask": "scan-card"}]}
  ],
  "roots": ["borrow-book"]
}"#;

fn main() {
    let model = model::parse_model(MODEL).unwrap();
    let (engine, ds) = Snapshot::build(
        model,
        &demo::templates(),
        demo::DEFAULT_SEED,
        &ClassifierConfig::default(),
        EngineConfig::default(),
    )
    .unwrap();
    println!("trained on {} generated questions", ds.len());
    for q in [
        "What is a hold?",
        "What do I need before starting checkout?",
        "How do I do Borrow Book?",
        "Why would I do scan card?",
        "Can I renew online?",
    ] {
        println!("{q}\n  {}", engine.answer(q, "s").text.replace('\n', "\n  "));
    }
}
