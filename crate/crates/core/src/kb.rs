//! Compiled knowledge base: the structured table (task facts), the
//! unstructured table (term definitions) and the surface-form index used for
//! entity lookup.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{surface_forms, Entity, TmkModel};
use crate::text;
use crate::validate::{validate, ValidationReport};

/// The five answerable question categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Intent {
    Vocabulary,
    Goals,
    Inputs,
    Outputs,
    Subtasks,
}

impl Intent {
    pub const ALL: [Intent; 5] = [
        Intent::Vocabulary,
        Intent::Goals,
        Intent::Inputs,
        Intent::Outputs,
        Intent::Subtasks,
    ];
    pub const TASK: [Intent; 4] = [Intent::Goals, Intent::Inputs, Intent::Outputs, Intent::Subtasks];

    pub fn as_str(&self) -> &'static str {
        match self {
            Intent::Vocabulary => "vocabulary",
            Intent::Goals => "goals",
            Intent::Inputs => "inputs",
            Intent::Outputs => "outputs",
            Intent::Subtasks => "subtasks",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }

    pub fn applies_to(&self, kind: EntityKind) -> bool {
        match kind {
            EntityKind::Term => *self == Intent::Vocabulary,
            EntityKind::Task => *self != Intent::Vocabulary,
        }
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl std::str::FromStr for Intent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Intent::ALL
            .into_iter()
            .find(|i| i.as_str() == s.trim())
            .ok_or_else(|| format!("unknown intent `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Term,
    Task,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredQuery {
    pub intent: Intent,
    pub object_id: String,
}

impl StructuredQuery {
    pub fn new(intent: Intent, object_id: impl Into<String>) -> Self {
        StructuredQuery {
            intent,
            object_id: object_id.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    Text(String),
    List(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Source {
    pub object_id: String,
    pub intent: Intent,
    pub model_version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryResult {
    pub payload: Payload,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("NOT_FOUND: no object `{0}`")]
    NotFound(String),
    #[error("INTENT_MISMATCH: `{object_id}` cannot answer {intent} questions")]
    IntentMismatch { intent: Intent, object_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("model has {} validation errors", .0.errors.len())]
    Invalid(ValidationReport),
    #[error("SURFACE_COLLISION: `{form}` names both `{first}` and `{second}`")]
    SurfaceCollision {
        form: String,
        first: String,
        second: String,
    },
}

/// Per-entity metadata kept alongside the answer tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityInfo {
    pub kind: EntityKind,
    pub name: String,
    pub surface_forms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub model_version: String,
    pub structured: BTreeMap<String, BTreeMap<Intent, Payload>>,
    pub unstructured: BTreeMap<String, String>,
    pub surface_index: BTreeMap<String, String>,
    pub objects_by_intent: BTreeMap<Intent, BTreeSet<String>>,
    pub entities: BTreeMap<String, EntityInfo>,
}

/// Builds the answer tables from a model. The model is validated first and
/// rejected if it has any errors.
pub fn compile(model: &TmkModel) -> Result<KnowledgeBase, CompileError> {
    let report = validate(model);
    if !report.is_ok() {
        return Err(CompileError::Invalid(report));
    }

    let mut kb = KnowledgeBase {
        model_version: model.version.clone(),
        structured: BTreeMap::new(),
        unstructured: BTreeMap::new(),
        surface_index: BTreeMap::new(),
        objects_by_intent: Intent::ALL.iter().map(|i| (*i, BTreeSet::new())).collect(),
        entities: BTreeMap::new(),
    };

    for g in &model.glossary {
        kb.unstructured.insert(g.id.clone(), g.definition.clone());
        kb.objects_by_intent
            .get_mut(&Intent::Vocabulary)
            .expect("all intents present")
            .insert(g.id.clone());
    }
    for t in &model.tasks {
        let subtask_names = t
            .subtasks
            .iter()
            .map(|id| model.task(id).map(|s| s.name.clone()).unwrap_or_else(|| id.clone()))
            .collect();
        let row = BTreeMap::from([
            (Intent::Goals, Payload::Text(t.goal.clone())),
            (Intent::Inputs, Payload::List(t.inputs.clone())),
            (Intent::Outputs, Payload::List(t.outputs.clone())),
            (Intent::Subtasks, Payload::List(subtask_names)),
        ]);
        kb.structured.insert(t.id.clone(), row);
        for intent in Intent::TASK {
            kb.objects_by_intent
                .get_mut(&intent)
                .expect("all intents present")
                .insert(t.id.clone());
        }
    }

    for entity in model.entities() {
        let forms = surface_forms(entity);
        for form in &forms {
            if let Some(prev) = kb.surface_index.get(form) {
                if prev != entity.id() {
                    let (first, second) = if prev.as_str() < entity.id() {
                        (prev.clone(), entity.id().to_owned())
                    } else {
                        (entity.id().to_owned(), prev.clone())
                    };
                    return Err(CompileError::SurfaceCollision {
                        form: form.clone(),
                        first,
                        second,
                    });
                }
            }
            kb.surface_index.insert(form.clone(), entity.id().to_owned());
        }
        let kind = match entity {
            Entity::Term(_) => EntityKind::Term,
            Entity::Task(_) => EntityKind::Task,
        };
        kb.entities.insert(
            entity.id().to_owned(),
            EntityInfo {
                kind,
                name: entity.display_name().to_owned(),
                surface_forms: forms,
            },
        );
    }
    Ok(kb)
}

impl KnowledgeBase {
    pub fn entity(&self, id: &str) -> Option<&EntityInfo> {
        self.entities.get(id)
    }

    pub fn objects(&self, intent: Intent) -> impl Iterator<Item = &str> {
        self.objects_by_intent
            .get(&intent)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    pub fn is_valid(&self, intent: Intent, object_id: &str) -> bool {
        self.entity(object_id)
            .is_some_and(|e| intent.applies_to(e.kind))
    }

    /// Longest surface form, in tokens.
    pub fn max_surface_tokens(&self) -> usize {
        self.surface_index
            .keys()
            .map(|k| k.split(' ').count())
            .max()
            .unwrap_or(0)
    }

    /// Answers a structured query from the compiled tables.
    pub fn execute(&self, q: &StructuredQuery) -> Result<QueryResult, QueryError> {
        let info = self
            .entity(&q.object_id)
            .ok_or_else(|| QueryError::NotFound(q.object_id.clone()))?;
        if !q.intent.applies_to(info.kind) {
            return Err(QueryError::IntentMismatch {
                intent: q.intent,
                object_id: q.object_id.clone(),
            });
        }
        let payload = match q.intent {
            Intent::Vocabulary => self.unstructured.get(&q.object_id).cloned().map(Payload::Text),
            other => self
                .structured
                .get(&q.object_id)
                .and_then(|row| row.get(&other))
                .cloned(),
        }
        .ok_or_else(|| QueryError::NotFound(q.object_id.clone()))?;
        Ok(QueryResult {
            payload,
            source: Source {
                object_id: q.object_id.clone(),
                intent: q.intent,
                model_version: self.model_version.clone(),
            },
        })
    }

    /// Number of (intent, surface form) pairs that can name this entity.
    /// Proportional to the entity's share of a template-expanded dataset.
    pub fn coverage(&self, id: &str) -> usize {
        self.entity(id).map_or(0, |e| {
            let intents = Intent::ALL.iter().filter(|i| i.applies_to(e.kind)).count();
            intents * e.surface_forms.len()
        })
    }

    /// Ranks entities by how many content tokens of the question they share.
    ///
    /// Entities with a positive overlap come first (score descending, id
    /// ascending). The remaining slots are filled by training coverage
    /// (descending, id ascending), so a non-empty KB always yields `k`
    /// suggestions, or all entities if there are fewer.
    pub fn suggest_topics(&self, question_tokens: &[String], k: usize) -> Vec<(String, String)> {
        let wanted: HashSet<&str> = question_tokens
            .iter()
            .map(String::as_str)
            .filter(|t| !text::is_stopword(t))
            .collect();
        let mut scored: Vec<(usize, usize, &str)> = self
            .entities
            .iter()
            .map(|(id, info)| {
                let tokens: HashSet<&str> = info
                    .surface_forms
                    .iter()
                    .flat_map(|f| f.split(' '))
                    .filter(|t| !text::is_stopword(t))
                    .collect();
                let score = tokens.intersection(&wanted).count();
                (score, self.coverage(id), id.as_str())
            })
            .collect();
        scored.sort_by_key(|&(score, coverage, id)| {
            let fill = if score == 0 { coverage } else { 0 };
            (Reverse(score), Reverse(fill), id)
        });
        scored
            .into_iter()
            .take(k.max(1))
            .map(|(_, _, id)| (id.to_owned(), self.entities[id].name.clone()))
            .collect()
    }
}
