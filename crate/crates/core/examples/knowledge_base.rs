use tmk_qa::{demo, kb, Intent, StructuredQuery};

fn main() {
    let kb = kb::compile(&demo::model()).expect("demo pack compiles");
    println!(
        "{} entities, {} surface forms, model {}",
        kb.entities.len(),
        kb.surface_index.len(),
        kb.model_version
    );

    for q in [
        StructuredQuery::new(Intent::Vocabulary, "alignment-score"),
        StructuredQuery::new(Intent::Inputs, "training-request"),
        StructuredQuery::new(Intent::Subtasks, "training-proposal"),
        StructuredQuery::new(Intent::Goals, "alignment-score"),
        StructuredQuery::new(Intent::Goals, "no-such-task"),
    ] {
        match kb.execute(&q) {
            Ok(r) => println!("{} {} -> {:?}", q.intent, q.object_id, r.payload),
            Err(e) => println!("{} {} -> {e}", q.intent, q.object_id),
        }
    }

    let tokens = tmk_qa::text::tokenize("What is the weather for my training request today?");
    println!("suggestions: {:?}", kb.suggest_topics(&tokens, 3));
}
