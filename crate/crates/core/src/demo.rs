//! The bundled demo knowledge pack: a workforce-training application with
//! 41 glossary terms and 10 tasks, the default question templates, and the
//! labeled fixture files.

use crate::classifier::ClassifierConfig;
use crate::dataset::{self, Dataset, QuestionTemplate};
use crate::dialogue::EngineConfig;
use crate::engine::Snapshot;
use crate::model::{self, TmkModel};

pub const MODEL_JSON: &str = include_str!("../data/demo_pack.json");
pub const TEMPLATES_TSV: &str = include_str!("../data/templates.tsv");
/// Labeled stand-ins for focus-group questions, mergeable into a dataset.
pub const SUPPLEMENT: &str = include_str!("../data/real_questions.jsonl");
/// Labeled in-situ question log used to exercise the coverage report.
pub const INSITU_219: &str = include_str!("../fixtures/insitu_219.jsonl");

/// Seed used by every command unless overridden.
pub const DEFAULT_SEED: u64 = 42;

pub fn model() -> TmkModel {
    model::parse_model(MODEL_JSON).expect("bundled demo pack parses")
}

pub fn templates() -> Vec<QuestionTemplate> {
    dataset::load_templates(TEMPLATES_TSV).expect("bundled templates parse")
}

/// Demo engine with default settings, plus the dataset it was trained on.
pub fn snapshot() -> (Snapshot, Dataset) {
    Snapshot::build(
        model(),
        &templates(),
        DEFAULT_SEED,
        &ClassifierConfig::default(),
        EngineConfig::default(),
    )
    .expect("demo pack builds")
}
