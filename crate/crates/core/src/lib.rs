//! Explainable question answering over a Task-Method-Knowledge (TMK) model
//! of an application.
//!
//! A TMK model describes an application's vocabulary (glossary terms) and
//! its task hierarchy. This crate compiles such a model into answer tables,
//! generates a labeled question set from templates, trains an intent
//! classifier on it, and answers free-text questions through a two-layer
//! pipeline: statistical intent classification followed by longest-match
//! entity extraction. Low-confidence or unresolvable questions fall back to
//! topic suggestions.
//!
//! ```no_run
//! let (engine, _dataset) = tmk_qa::demo::snapshot();
//! let reply = engine.answer("What is an alignment score?", "session-1");
//! println!("{}", reply.text);
//! ```
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod classifier;
pub mod cli;
pub mod dataset;
pub mod demo;
pub mod dialogue;
pub mod engine;
pub mod eval;
pub mod feedback;
pub mod kb;
pub mod model;
pub mod server;
pub mod text;
pub mod validate;

pub use classifier::{ClassifierConfig, IntentModel, IntentScores};
pub use dataset::{Dataset, QuestionTemplate, TrainingExample};
pub use dialogue::{AgentReply, EngineConfig, ReplyKind};
pub use engine::Snapshot;
pub use kb::{Intent, KnowledgeBase, StructuredQuery};
pub use model::TmkModel;
pub use validate::{validate, ValidationReport};
