use tmk_qa::demo;

fn main() {
    let (engine, _) = demo::snapshot();
    let questions: Vec<String> = std::env::args().skip(1).collect();
    let questions = if questions.is_empty() {
        vec![
            "What is an alignment score?".to_owned(),
            "What is the reason for completing a training request?".to_owned(),
            "What are the steps to accomplish Training Proposal?".to_owned(),
            "What is the weather today?".to_owned(),
        ]
    } else {
        questions
    };
    for q in questions {
        let r = engine.answer(&q, "example");
        println!("Q: {q}\nA: {}", r.text);
        println!("   {:?} confidence={:.3} query={:?}\n", r.kind, r.confidence, r.query);
    }
}
