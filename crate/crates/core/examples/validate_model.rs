use tmk_qa::model::PrimitiveAction;
use tmk_qa::{demo, validate};

fn main() {
    let model = demo::model();
    print!("{}", validate(&model).render());

    let mut broken = model.clone();
    broken.glossary[1].definition.clear();
    let leaf = broken.tasks.iter().position(|t| t.id == "submit-training-request").unwrap();
    broken.tasks[leaf].subtasks = vec!["create-training-plan".into()];
    broken.tasks[leaf].primitive_action = PrimitiveAction::None;

    let report = validate(&broken);
    print!("\n{}", report.render());
    println!("codes: {:?}", report.error_codes());
}
