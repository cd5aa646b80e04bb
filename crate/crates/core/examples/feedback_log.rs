use tmk_qa::demo;
use tmk_qa::feedback::{FeedbackStore, Helpful};

fn main() {
    let dir = std::env::temp_dir().join(format!("tmkqa-feedback-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("feedback.jsonl");
    let (engine, _) = demo::snapshot();
    {
        let store = FeedbackStore::open(&path).unwrap();
        for (q, helpful) in [("What is an alignment score?", Some(Helpful::Yes)), ("What is a cohort?", None)] {
            let reply = engine.answer(q, "session-1");
            store.register_reply(&reply, q, "session-1").unwrap();
            if let Some(h) = helpful {
                store.record_feedback(&reply.message_id, "session-1", h).unwrap();
            }
        }
        println!("{:?}", store.record_feedback("made-up-id", "session-1", Helpful::No).unwrap_err());
    }
    let reopened = FeedbackStore::open(&path).unwrap();
    for r in reopened.records().unwrap() {
        println!("{} {:?} -> {:?}", r.question, r.reply_kind, r.helpful);
    }
    print!("{}", std::fs::read_to_string(&path).unwrap());
    std::fs::remove_dir_all(dir).unwrap();
}
