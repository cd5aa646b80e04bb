//! An engine snapshot binds a model, its compiled knowledge base, a trained
//! intent model and the dialogue config to one model version.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::classifier::{self, ClassifierConfig, ClassifierError, IntentModel};
use crate::dataset::{self, Dataset, DatasetError, QuestionTemplate};
use crate::dialogue::{self, AgentReply, ConfigError, EngineConfig};
use crate::kb::{self, CompileError, KnowledgeBase};
use crate::eval;
use crate::model::{self, ParseError, TmkModel};
use crate::validate::ValidationReport;

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("component versions disagree: model {model}, knowledge base {kb}, classifier {classifier}")]
    VersionMismatch {
        model: String,
        kb: String,
        classifier: String,
    },
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub model: TmkModel,
    pub kb: KnowledgeBase,
    pub classifier: IntentModel,
    pub config: EngineConfig,
}

/// Summary of a freshly built snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildStats {
    pub model_version: String,
    pub dataset_size: usize,
    pub train_accuracy: f64,
}

impl BuildStats {
    pub fn measure(snapshot: &Snapshot, ds: &Dataset) -> Self {
        BuildStats {
            model_version: snapshot.model_version().to_owned(),
            dataset_size: ds.len(),
            train_accuracy: eval::evaluate_dataset(snapshot, ds).accuracy,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Dataset { path: PathBuf, source: DatasetError },
    #[error(transparent)]
    Build(#[from] BuildError),
}

impl LoadError {
    /// The validation report, when the model was rejected by validation.
    pub fn report(&self) -> Option<&ValidationReport> {
        match self {
            LoadError::Build(BuildError::Compile(CompileError::Invalid(r))) => Some(r),
            _ => None,
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Builds a snapshot from files on disk. Without a dataset file the
/// templates are expanded against the model.
pub fn load_and_build(
    model_path: &Path,
    dataset_path: Option<&Path>,
    templates: &[QuestionTemplate],
    seed: u64,
    classifier_config: &ClassifierConfig,
    config: EngineConfig,
) -> Result<(Snapshot, Dataset), LoadError> {
    let model = model::parse_model(&read_file(model_path)?).map_err(|source| LoadError::Parse {
        path: model_path.to_owned(),
        source,
    })?;
    let Some(dataset_path) = dataset_path else {
        return Ok(Snapshot::build(model, templates, seed, classifier_config, config)?);
    };
    let kb = kb::compile(&model).map_err(BuildError::from)?;
    let ds = Dataset::from_jsonl(&read_file(dataset_path)?, seed, &model.version).map_err(|source| {
        LoadError::Dataset {
            path: dataset_path.to_owned(),
            source,
        }
    })?;
    let snapshot = Snapshot::build_with_dataset(model, kb, &ds, seed, classifier_config, config)?;
    Ok((snapshot, ds))
}

impl Snapshot {
    /// Bundles prebuilt components, checking they come from one model version.
    pub fn assemble(
        model: TmkModel,
        kb: KnowledgeBase,
        classifier: IntentModel,
        config: EngineConfig,
    ) -> Result<Self, BuildError> {
        config.validate()?;
        if kb.model_version != model.version || classifier.manifest.model_version != model.version {
            return Err(BuildError::VersionMismatch {
                model: model.version,
                kb: kb.model_version,
                classifier: classifier.manifest.model_version,
            });
        }
        Ok(Snapshot {
            model,
            kb,
            classifier,
            config,
        })
    }

    /// Compiles the model, expands the templates and trains the intent layer.
    pub fn build(
        model: TmkModel,
        templates: &[QuestionTemplate],
        seed: u64,
        classifier_config: &ClassifierConfig,
        config: EngineConfig,
    ) -> Result<(Self, Dataset), BuildError> {
        let kb = kb::compile(&model)?;
        let ds = dataset::expand(templates, &kb)?.with_seed(seed);
        let snapshot = Self::build_with_dataset(model, kb, &ds, seed, classifier_config, config)?;
        Ok((snapshot, ds))
    }

    pub fn build_with_dataset(
        model: TmkModel,
        kb: KnowledgeBase,
        ds: &Dataset,
        seed: u64,
        classifier_config: &ClassifierConfig,
        config: EngineConfig,
    ) -> Result<Self, BuildError> {
        let classifier = classifier::train(ds, seed, classifier_config)?;
        Self::assemble(model, kb, classifier, config)
    }

    pub fn model_version(&self) -> &str {
        &self.model.version
    }

    pub fn answer(&self, question: &str, session_id: &str) -> AgentReply {
        dialogue::answer(&self.kb, &self.classifier, &self.config, question, session_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;

    #[test]
    fn mismatched_versions_rejected() {
        let (snap, _) = demo::snapshot();
        let mut other = snap.model.clone();
        other.version = "2.0.0".into();
        let err = Snapshot::assemble(other, snap.kb.clone(), snap.classifier.clone(), snap.config.clone())
            .unwrap_err();
        assert!(matches!(err, BuildError::VersionMismatch { .. }));
    }

    #[test]
    fn bad_config_rejected() {
        let (snap, _) = demo::snapshot();
        let cfg = EngineConfig {
            confidence_threshold: 0.0,
            ..EngineConfig::default()
        };
        assert!(matches!(
            Snapshot::assemble(snap.model, snap.kb, snap.classifier, cfg),
            Err(BuildError::Config(_))
        ));
    }
}
