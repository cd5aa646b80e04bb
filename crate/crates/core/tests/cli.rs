mod common;

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn tmkqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmkqa"))
        .args(args)
        .env_remove("TMKQA_MODEL")
        .env_remove("TMKQA_TEMPLATES")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn validate_demo_pack() {
    let o = tmkqa(&["validate"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0 errors"));
}

#[test]
fn validate_cycle_fails() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = tmk_qa::demo::model();
    let leaf = m.tasks.iter().position(|t| t.id == "submit-training-request").unwrap();
    m.tasks[leaf].subtasks = vec!["training-request".into()];
    m.tasks[leaf].primitive_action = tmk_qa::model::PrimitiveAction::None;
    let path = dir.path().join("cyclic.json");
    std::fs::write(&path, tmk_qa::model::serialize(&m)).unwrap();
    let o = tmkqa(&["validate", "--model", p(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("CYCLE"));
}

#[test]
fn validate_reports_missing_file_and_parse_location() {
    let o = tmkqa(&["validate", "--model", "/definitely/missing.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"name\": \"x\",\n  oops\n}").unwrap();
    let o = tmkqa(&["validate", "--model", p(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(tmkqa(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(tmkqa(&["validate", "--bogus"]).status.code(), Some(2));
    assert_eq!(tmkqa(&["eval"]).status.code(), Some(2));
    assert_eq!(tmkqa(&["eval", "--questions", "a", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(tmkqa(&["--help"]).status.code(), Some(0));
}

#[test]
fn generate_is_deterministic_and_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    let oa = tmkqa(&["generate", "--out", p(&a), "--seed", "42"]);
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(tmkqa(&["generate", "--out", p(&b), "--seed", "42"]).status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.manifest.json")).unwrap()).unwrap();
    let kb = tmk_qa::kb::compile(&tmk_qa::demo::model()).unwrap();
    let expected = tmk_qa::dataset::expected_size(&tmk_qa::demo::templates(), &kb);
    assert_eq!(manifest["size"].as_u64().unwrap() as usize, expected);
    assert!(stdout(&oa).contains(&format!("wrote {expected} examples")));
}

#[test]
fn generate_rejects_slotless_template() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.tsv");
    std::fs::write(&t, "vocabulary\tformal\tWhat is it?\n").unwrap();
    let o = tmkqa(&["generate", "--templates", p(&t), "--out", p(&dir.path().join("x.jsonl"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn generate_with_supplement() {
    let dir = tempfile::tempdir().unwrap();
    let sup = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/real_questions.jsonl");
    let out = dir.path().join("d.jsonl");
    let o = tmkqa(&["generate", "--supplement", p(&sup), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let lines = std::fs::read_to_string(&out).unwrap().lines().count();
    let base = tmk_qa::demo::snapshot().1.len();
    assert_eq!(lines, base + tmk_qa::demo::SUPPLEMENT.lines().filter(|l| !l.trim().is_empty()).count());
}

#[test]
fn train_prints_accuracy_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("d.jsonl");
    tmkqa(&["generate", "--out", p(&ds)]);
    let (c1, c2) = (dir.path().join("c1.json"), dir.path().join("c2.json"));
    let o = tmkqa(&["train", "--dataset", p(&ds), "--out", p(&c1)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("train accuracy 100.0%"));
    tmkqa(&["train", "--dataset", p(&ds), "--out", p(&c2)]);
    assert_eq!(std::fs::read(&c1).unwrap(), std::fs::read(&c2).unwrap());
}

#[test]
fn train_fails_without_an_intent() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("d.jsonl");
    tmkqa(&["generate", "--out", p(&ds)]);
    let kept: String = std::fs::read_to_string(&ds)
        .unwrap()
        .lines()
        .filter(|l| !l.contains("\"intent\":\"subtasks\""))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&ds, kept).unwrap();
    let o = tmkqa(&["train", "--dataset", p(&ds), "--out", p(&dir.path().join("c.json"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("MISSING_INTENT"));
}

#[test]
fn eval_in_vitro_and_in_situ() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("d.jsonl");
    tmkqa(&["generate", "--out", p(&ds)]);
    let o = tmkqa(&["eval", "--dataset", p(&ds), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["accuracy"], 1.0);

    let insitu = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/insitu_219.jsonl");
    let o = tmkqa(&["eval", "--questions", p(&insitu), "--format", "csv"]);
    assert!(stdout(&o).starts_with("section,key,asked,correct,behavioral_correct\n"));
    assert!(stdout(&o).contains("total,all,219,200,219\n"));
    let o = tmkqa(&["eval", "--questions", p(&insitu), "--ladder"]);
    assert!(stdout(&o).contains("219 asked / 106 unique / 200 correct (91.3%)"));
    assert!(stdout(&o).contains("(vocabulary, none)"));
}

#[test]
fn demo_end_to_end_and_rerun_identical() {
    let dir = tempfile::tempdir().unwrap();
    let o = tmkqa(&["demo", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("training-set accuracy: 100.0%"));
    let first = std::fs::read(dir.path().join("classifier.json")).unwrap();
    tmkqa(&["demo", "--out", p(dir.path())]);
    assert_eq!(std::fs::read(dir.path().join("classifier.json")).unwrap(), first);
}

#[test]
fn demo_into_unwritable_dir_fails() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("not-a-dir");
    std::fs::write(&file, "").unwrap();
    let o = tmkqa(&["demo", "--out", p(&file.join("sub"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("setup"));
}

#[test]
fn repl_answers_and_records_feedback() {
    let dir = tempfile::tempdir().unwrap();
    let fb = dir.path().join("fb.jsonl");
    let mut child = Command::new(env!("CARGO_BIN_EXE_tmkqa"))
        .args(["repl", "--feedback", p(&fb)])
        .env_remove("TMKQA_MODEL")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"What is an alignment score?\n:yes\nWhat is the weather today?\n:quit\n")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0));
    assert!(out.contains("covers the company's requested training objectives"));
    assert!(out.contains("I can help with topics like"));
    let log = std::fs::read_to_string(&fb).unwrap();
    assert_eq!(log.lines().count(), 1);
    assert!(log.contains("\"helpful\":\"yes\""));
}

#[test]
fn kb_dump_is_json() {
    let o = tmkqa(&["kb-dump", "--model", p(&common::fixture("micro_kb.json"))]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["entities"].as_object().unwrap().len(), 5);
}
