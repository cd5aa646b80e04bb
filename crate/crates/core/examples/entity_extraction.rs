use tmk_qa::classifier::extract_entity;
use tmk_qa::{demo, kb, Intent};

fn main() {
    let kb = kb::compile(&demo::model()).unwrap();
    for (q, intent) in [
        ("What is a training objective?", Intent::Vocabulary),
        ("What does the Training Proposal Summary produce?", Intent::Outputs),
        ("What are the steps to accomplish Proposal Summary?", Intent::Subtasks),
        ("What is the goal of the RFP?", Intent::Goals),
        ("What is a skill?", Intent::Goals),
        ("What is the weather today?", Intent::Vocabulary),
    ] {
        match extract_entity(&kb, q, intent) {
            Some(m) => println!(
                "{q:?} [{intent}] -> {} via {:?} tokens {:?}, valid for intent: {}",
                m.object_id, m.matched_surface, m.span, m.intent_valid
            ),
            None => println!("{q:?} [{intent}] -> no entity"),
        }
    }
}
