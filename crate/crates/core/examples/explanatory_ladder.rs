use tmk_qa::demo;
use tmk_qa::eval::{ladder_classify, LadderTable};

fn main() {
    let (engine, _) = demo::snapshot();
    let table = LadderTable::default();
    for q in [
        "What is an alignment score?",
        "How do I add a competency?",
        "What data does this score come from?",
        "Why was this training opportunity recommended?",
        "What should I do on this page?",
        "What happens after I submit?",
        "What are the stages of the training proposal?",
        "What is the weather today?",
    ] {
        let cat = ladder_classify(&engine, &table, q).map_or("UNCLASSIFIED".to_owned(), |c| c.to_string());
        println!("{cat:<34} {q}");
    }

    let custom = LadderTable::parse("reasoning\tcontext\tweather\n").unwrap();
    println!("with a custom table: {:?}", ladder_classify(&engine, &custom, "What is the weather today?"));
}
