use tmk_qa::eval::{self, ReportFormat};
use tmk_qa::demo;

fn main() {
    let format: ReportFormat = std::env::args().nth(1).as_deref().unwrap_or("text").parse().unwrap();
    let (engine, _) = demo::snapshot();
    let questions = eval::load_questions(demo::INSITU_219).unwrap();
    let report = eval::evaluate(&engine, &questions);
    print!("{}", eval::coverage_report(&report, format));
}
