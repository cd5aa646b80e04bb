//! Confidence-gated answering: runs the two classification layers, queries
//! the knowledge base and phrases the result, or falls back to topic
//! suggestions.

use serde::{Deserialize, Serialize};
use tracing::debug;
use uuid::Uuid;

use crate::classifier::{build_query, extract_entity, IntentModel};
use crate::kb::{Intent, KnowledgeBase, Payload, QueryResult, StructuredQuery};
use crate::text;

pub const DEFAULT_FEEDBACK_PROMPT: &str = "Was this answer helpful?";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub confidence_threshold: f64,
    pub rescue_margin: f64,
    pub suggestion_count: usize,
    pub feedback_prompt: String,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            confidence_threshold: 0.5,
            rescue_margin: 0.05,
            suggestion_count: 3,
            feedback_prompt: DEFAULT_FEEDBACK_PROMPT.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("confidence threshold {0} must lie strictly between 0 and 1")]
    Threshold(f64),
    #[error("rescue margin {0} must be in [0, 1)")]
    Margin(f64),
    #[error("suggestion count must be at least 1")]
    Suggestions,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.confidence_threshold > 0.0 && self.confidence_threshold < 1.0) {
            return Err(ConfigError::Threshold(self.confidence_threshold));
        }
        if !(0.0..1.0).contains(&self.rescue_margin) {
            return Err(ConfigError::Margin(self.rescue_margin));
        }
        if self.suggestion_count == 0 {
            return Err(ConfigError::Suggestions);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplyKind {
    Answer,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentReply {
    pub kind: ReplyKind,
    pub text: String,
    pub confidence: f64,
    pub query: Option<StructuredQuery>,
    pub suggestions: Option<Vec<String>>,
    pub message_id: String,
    pub feedback_prompt: String,
}

/// Why a question fell back instead of being answered. Logged, never shown.
#[derive(Debug, Clone, PartialEq)]
enum Decline {
    Empty,
    NoEntity,
    LowConfidence(f64),
    Query(String),
}

/// Answers one question. Every input yields a reply; anything the pipeline
/// cannot resolve confidently becomes a fallback with topic suggestions.
pub fn answer(
    kb: &KnowledgeBase,
    model: &IntentModel,
    cfg: &EngineConfig,
    question: &str,
    session_id: &str,
) -> AgentReply {
    let message_id = Uuid::new_v4().to_string();
    let tokens = text::tokenize(question);
    let outcome = resolve(kb, model, cfg, question);
    match outcome {
        Ok((query, result, confidence)) => AgentReply {
            kind: ReplyKind::Answer,
            text: format_answer(kb, &query, &result),
            confidence,
            query: Some(query),
            suggestions: None,
            message_id,
            feedback_prompt: cfg.feedback_prompt.clone(),
        },
        Err((decline, confidence)) => {
            debug!(session_id, ?decline, question, "falling back");
            let topics: Vec<String> = kb
                .suggest_topics(&tokens, cfg.suggestion_count)
                .into_iter()
                .map(|(_, name)| name)
                .collect();
            AgentReply {
                kind: ReplyKind::Fallback,
                text: fallback_text(&topics),
                confidence,
                query: None,
                suggestions: Some(topics),
                message_id,
                feedback_prompt: cfg.feedback_prompt.clone(),
            }
        }
    }
}

type Resolved = (StructuredQuery, QueryResult, f64);

fn resolve(
    kb: &KnowledgeBase,
    model: &IntentModel,
    cfg: &EngineConfig,
    question: &str,
) -> Result<Resolved, (Decline, f64)> {
    let scores = model.classify(question).map_err(|_| (Decline::Empty, 0.0))?;
    let conf = scores.top_confidence;
    if conf < cfg.confidence_threshold {
        return Err((Decline::LowConfidence(conf), conf));
    }
    let found = extract_entity(kb, question, scores.top_intent).ok_or((Decline::NoEntity, conf))?;
    let query = build_query(kb, &scores, &found, cfg.rescue_margin);
    let result = kb
        .execute(&query)
        .map_err(|e| (Decline::Query(e.to_string()), conf))?;
    Ok((query, result, conf))
}

pub fn fallback_text(topics: &[String]) -> String {
    if topics.is_empty() {
        "I can't answer that yet.".to_owned()
    } else {
        format!("I can't answer that yet. I can help with topics like: {}.", topics.join(", "))
    }
}

/// Phrases a query result as a reply. Goal text is returned verbatim; other
/// intents get a short sentence frame around the stored payload.
pub fn format_answer(kb: &KnowledgeBase, q: &StructuredQuery, result: &QueryResult) -> String {
    let name = kb
        .entity(&q.object_id)
        .map(|e| e.name.as_str())
        .unwrap_or(q.object_id.as_str());
    match (&result.payload, q.intent) {
        (Payload::Text(definition), Intent::Vocabulary) => {
            format!("{} is {}", sentence_case(name), end_sentence(definition))
        }
        (Payload::Text(goal), _) => goal.clone(),
        (Payload::List(items), Intent::Inputs) => {
            format!("To complete {name}, you need: {}", end_sentence(&list_or_none(items)))
        }
        (Payload::List(items), Intent::Outputs) => {
            format!("Completing {name} produces: {}", end_sentence(&list_or_none(items)))
        }
        (Payload::List(steps), Intent::Subtasks) if steps.is_empty() => {
            format!("{name} is a single step with no subtasks.")
        }
        (Payload::List(steps), _) => {
            let mut out = format!("To accomplish {name}:");
            for (i, step) in steps.iter().enumerate() {
                out.push_str(&format!("\n{}. {step}", i + 1));
            }
            out
        }
    }
}

fn list_or_none(items: &[String]) -> String {
    if items.is_empty() {
        "nothing".to_owned()
    } else {
        items.join(", ")
    }
}

fn end_sentence(s: &str) -> String {
    if s.ends_with(['.', '!', '?']) {
        s.to_owned()
    } else {
        format!("{s}.")
    }
}

/// "Alignment Score" -> "Alignment score". Acronyms keep their case.
fn sentence_case(term: &str) -> String {
    let is_acronym = |w: &str| w.chars().count() > 1 && w.chars().all(|c| !c.is_lowercase());
    term.split(' ')
        .enumerate()
        .map(|(i, w)| {
            if is_acronym(w) {
                w.to_owned()
            } else if i == 0 {
                let mut cs = w.chars();
                match cs.next() {
                    Some(c) => c.to_uppercase().chain(cs.flat_map(char::to_lowercase)).collect(),
                    None => String::new(),
                }
            } else {
                w.to_lowercase()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}
