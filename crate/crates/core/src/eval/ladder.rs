//! Explanatory-ladder classification. Questions the engine answers are
//! placed by their intent; everything else goes through an ordered keyword
//! table.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Expected, LabeledQuestion};
use crate::dialogue::ReplyKind;
use crate::engine::Snapshot;
use crate::kb::Intent;
use crate::text;

pub const DEFAULT_LADDER_TSV: &str = include_str!("../../data/ladder.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LadderLevel {
    Vocabulary,
    Knowledge,
    Reasoning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LadderSub {
    None,
    RawData,
    InferredKnowledge,
    Context,
    Task,
    Process,
}

impl LadderSub {
    pub fn belongs_to(&self, level: LadderLevel) -> bool {
        use LadderSub::*;
        match level {
            LadderLevel::Vocabulary => *self == None,
            LadderLevel::Knowledge => matches!(self, RawData | InferredKnowledge),
            LadderLevel::Reasoning => matches!(self, Context | Task | Process),
        }
    }
}

macro_rules! kebab_str {
    ($ty:ty { $($variant:ident => $s:literal),* $(,)? }) => {
        impl $ty {
            pub fn as_str(&self) -> &'static str {
                match self { $(Self::$variant => $s),* }
            }
        }
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s.trim() {
                    $($s => Ok(Self::$variant),)*
                    other => Err(format!("unknown {} `{other}`", stringify!($ty))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.pad(self.as_str())
            }
        }
    };
}

kebab_str!(LadderLevel { Vocabulary => "vocabulary", Knowledge => "knowledge", Reasoning => "reasoning" });
kebab_str!(LadderSub {
    None => "none",
    RawData => "raw-data",
    InferredKnowledge => "inferred-knowledge",
    Context => "context",
    Task => "task",
    Process => "process",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LadderCategory {
    pub level: LadderLevel,
    pub sub: LadderSub,
}

impl LadderCategory {
    pub fn new(level: LadderLevel, sub: LadderSub) -> Option<Self> {
        sub.belongs_to(level).then_some(LadderCategory { level, sub })
    }

    pub fn for_intent(intent: Intent) -> Self {
        match intent {
            Intent::Vocabulary => LadderCategory {
                level: LadderLevel::Vocabulary,
                sub: LadderSub::None,
            },
            _ => LadderCategory {
                level: LadderLevel::Reasoning,
                sub: LadderSub::Task,
            },
        }
    }
}

impl fmt::Display for LadderCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.level, self.sub)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LadderRule {
    pub category: LadderCategory,
    pub phrase: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct LadderTableError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LadderTable {
    pub rules: Vec<LadderRule>,
}

impl Default for LadderTable {
    fn default() -> Self {
        LadderTable::parse(DEFAULT_LADDER_TSV).expect("bundled ladder table parses")
    }
}

impl LadderTable {
    pub fn parse(text: &str) -> Result<Self, LadderTableError> {
        let mut rules = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let err = |message: String| LadderTableError { line: n + 1, message };
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            let [level, sub, phrase] = fields[..] else {
                return Err(err(format!("expected 3 tab-separated fields, found {}", fields.len())));
            };
            let level: LadderLevel = level.parse().map_err(err)?;
            let sub: LadderSub = sub.parse().map_err(err)?;
            let category = LadderCategory::new(level, sub)
                .ok_or_else(|| err(format!("`{sub}` is not a sub-category of `{level}`")))?;
            let phrase = text::tokenize(phrase);
            if phrase.is_empty() {
                return Err(err("empty phrase".into()));
            }
            rules.push(LadderRule { category, phrase });
        }
        Ok(LadderTable { rules })
    }

    /// First rule whose phrase occurs in the question, if any.
    pub fn lookup(&self, question: &str) -> Option<LadderCategory> {
        let tokens = text::tokenize(question);
        self.rules
            .iter()
            .find(|r| tokens.windows(r.phrase.len()).any(|w| w == r.phrase.as_slice()))
            .map(|r| r.category)
    }
}

/// Places a raw question on the ladder. `None` means UNCLASSIFIED.
pub fn ladder_classify(snapshot: &Snapshot, table: &LadderTable, question: &str) -> Option<LadderCategory> {
    let reply = snapshot.answer(question, "ladder");
    match (reply.kind, reply.query) {
        (ReplyKind::Answer, Some(q)) => Some(LadderCategory::for_intent(q.intent)),
        _ => table.lookup(question),
    }
}

/// Like [`ladder_classify`], but an answerable label decides the intent.
pub fn ladder_classify_labeled(
    snapshot: &Snapshot,
    table: &LadderTable,
    q: &LabeledQuestion,
) -> Option<LadderCategory> {
    match &q.expected {
        Expected::Answer { intent, .. } => Some(LadderCategory::for_intent(*intent)),
        Expected::Miss(_) => ladder_classify(snapshot, table, &q.question),
    }
}
