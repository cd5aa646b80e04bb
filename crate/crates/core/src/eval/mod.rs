//! Evaluation: scoring the engine against labeled questions, coverage
//! reports, and explanatory-ladder classification of question logs.

mod ladder;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::dialogue::ReplyKind;
use crate::engine::Snapshot;
use crate::kb::{Intent, StructuredQuery};

pub use ladder::{
    ladder_classify, ladder_classify_labeled, LadderCategory, LadderLevel, LadderRule, LadderSub,
    LadderTable, LadderTableError, DEFAULT_LADDER_TSV,
};
pub use report::{coverage_report, ReportFormat};

/// Labels for questions the engine is expected to decline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MissLabel {
    OutOfCompetence,
    StaleTerm,
    LanguageError,
}

impl MissLabel {
    pub fn reason(&self) -> &'static str {
        match self {
            MissLabel::OutOfCompetence => REASON_OUT_OF_COMPETENCE,
            MissLabel::StaleTerm => REASON_STALE_TERM,
            MissLabel::LanguageError => REASON_LANGUAGE_ERROR,
        }
    }
}

pub const REASON_LANGUAGE_ERROR: &str = "language-error";
pub const REASON_OUT_OF_COMPETENCE: &str = "out-of-competence";
pub const REASON_STALE_TERM: &str = "stale-term";
/// An answerable question that got a wrong answer.
pub const REASON_MISANSWERED: &str = "misanswered";
/// An answerable question that fell back.
pub const REASON_UNANSWERED: &str = "unanswered";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expected {
    Answer { intent: Intent, object_id: String },
    Miss(MissLabel),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledQuestion {
    pub question: String,
    pub expected: Expected,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_tag: Option<String>,
}

impl LabeledQuestion {
    pub fn answerable(question: impl Into<String>, intent: Intent, object_id: impl Into<String>) -> Self {
        LabeledQuestion {
            question: question.into(),
            expected: Expected::Answer {
                intent,
                object_id: object_id.into(),
            },
            user_tag: None,
        }
    }

    pub fn miss(question: impl Into<String>, label: MissLabel) -> Self {
        LabeledQuestion {
            question: question.into(),
            expected: Expected::Miss(label),
            user_tag: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct QuestionFileError {
    pub line: usize,
    pub message: String,
}

/// Parses a JSON-lines file of labeled questions. Blank lines are skipped.
pub fn load_questions(text: &str) -> Result<Vec<LabeledQuestion>, QuestionFileError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let q: LabeledQuestion = serde_json::from_str(raw).map_err(|e| QuestionFileError {
            line: n + 1,
            message: e.to_string(),
        })?;
        if q.question.trim().is_empty() {
            return Err(QuestionFileError {
                line: n + 1,
                message: "empty question".into(),
            });
        }
        out.push(q);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub asked: usize,
    pub correct: usize,
    pub behavioral_correct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total: usize,
    pub unique_count: usize,
    pub answered: usize,
    /// Questions answered with the expected (intent, object).
    pub correct: usize,
    /// `correct` plus expected misses that fell back.
    pub behavioral_correct: usize,
    /// Distinct question texts counted in `correct`.
    pub unique_correct: usize,
    pub accuracy: f64,
    pub behavioral_accuracy: f64,
    pub unique_accuracy: f64,
    pub misses_by_reason: BTreeMap<String, usize>,
    pub per_intent: BTreeMap<Intent, Counts>,
    pub per_user: BTreeMap<String, Counts>,
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn strict_accuracy(&self) -> f64 {
        self.accuracy
    }

    pub fn misses(&self) -> usize {
        self.misses_by_reason.values().sum()
    }
}

/// Tag used in per-user tables for questions without a user tag.
pub const UNTAGGED: &str = "untagged";

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub kind: ReplyKind,
    pub query: Option<StructuredQuery>,
    pub correct: bool,
    pub behavioral_correct: bool,
    pub miss_reason: Option<&'static str>,
}

/// Scores one question against the snapshot.
pub fn score(snapshot: &Snapshot, q: &LabeledQuestion) -> Outcome {
    let reply = snapshot.answer(&q.question, "eval");
    let (correct, behavioral, reason) = match &q.expected {
        Expected::Answer { intent, object_id } => {
            let hit = reply.kind == ReplyKind::Answer
                && reply
                    .query
                    .as_ref()
                    .is_some_and(|got| got.intent == *intent && &got.object_id == object_id);
            let reason = match (hit, reply.kind) {
                (true, _) => None,
                (false, ReplyKind::Answer) => Some(REASON_MISANSWERED),
                (false, ReplyKind::Fallback) => Some(REASON_UNANSWERED),
            };
            (hit, hit, reason)
        }
        Expected::Miss(label) => (false, reply.kind == ReplyKind::Fallback, Some(label.reason())),
    };
    Outcome {
        kind: reply.kind,
        query: reply.query,
        correct,
        behavioral_correct: behavioral,
        miss_reason: reason,
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

pub fn evaluate(snapshot: &Snapshot, questions: &[LabeledQuestion]) -> EvalReport {
    let mut report = EvalReport {
        total: questions.len(),
        unique_count: 0,
        answered: 0,
        correct: 0,
        behavioral_correct: 0,
        unique_correct: 0,
        accuracy: 1.0,
        behavioral_accuracy: 1.0,
        unique_accuracy: 1.0,
        misses_by_reason: BTreeMap::new(),
        per_intent: Intent::ALL.into_iter().map(|i| (i, Counts::default())).collect(),
        per_user: BTreeMap::new(),
        warnings: Vec::new(),
    };
    let mut unique = BTreeSet::new();
    let mut unique_hits = BTreeSet::new();
    for q in questions {
        let out = score(snapshot, q);
        unique.insert(q.question.as_str());
        if out.kind == ReplyKind::Answer {
            report.answered += 1;
        }
        if out.correct {
            report.correct += 1;
            unique_hits.insert(q.question.as_str());
        }
        if out.behavioral_correct {
            report.behavioral_correct += 1;
        }
        if let Some(reason) = out.miss_reason {
            *report.misses_by_reason.entry(reason.to_owned()).or_default() += 1;
        }
        if let Expected::Answer { intent, .. } = &q.expected {
            let c = report.per_intent.entry(*intent).or_default();
            c.asked += 1;
            c.correct += out.correct as usize;
            c.behavioral_correct += out.behavioral_correct as usize;
        }
        let tag = q.user_tag.clone().unwrap_or_else(|| UNTAGGED.to_owned());
        let c = report.per_user.entry(tag).or_default();
        c.asked += 1;
        c.correct += out.correct as usize;
        c.behavioral_correct += out.behavioral_correct as usize;
    }
    report.unique_count = unique.len();
    report.unique_correct = unique_hits.len();
    report.accuracy = ratio(report.correct, report.total);
    report.behavioral_accuracy = ratio(report.behavioral_correct, report.total);
    report.unique_accuracy = ratio(report.unique_correct, report.unique_count);
    if questions.is_empty() {
        report
            .warnings
            .push("no questions to evaluate; accuracy is reported as 1.0".to_owned());
    }
    report
}

/// In-vitro evaluation: every generated example as an answerable question.
pub fn evaluate_dataset(snapshot: &Snapshot, ds: &Dataset) -> EvalReport {
    let questions: Vec<LabeledQuestion> = ds
        .examples
        .iter()
        .map(|e| LabeledQuestion::answerable(e.question.clone(), e.intent, e.object_id.clone()))
        .collect();
    evaluate(snapshot, &questions)
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&coverage_report(self, ReportFormat::Text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn engine() -> &'static Snapshot {
        static S: OnceLock<Snapshot> = OnceLock::new();
        S.get_or_init(|| demo::snapshot().0)
    }

    #[test]
    fn expected_labels_parse() {
        let qs = load_questions(concat!(
            r#"{"question":"What is a cohort?","expected":{"intent":"vocabulary","object_id":"cohort"},"user_tag":"company-a"}"#,
            "\n\n",
            r#"{"question":"What is the weather today?","expected":"OUT_OF_COMPETENCE"}"#,
            "\n"
        ))
        .unwrap();
        assert_eq!(qs[0], {
            let mut q = LabeledQuestion::answerable("What is a cohort?", Intent::Vocabulary, "cohort");
            q.user_tag = Some("company-a".into());
            q
        });
        assert_eq!(qs[1].expected, Expected::Miss(MissLabel::OutOfCompetence));
    }

    #[test]
    fn bad_label_reports_line() {
        let err = load_questions("\n{\"question\":\"x\",\"expected\":\"MAYBE\"}\n").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn empty_input_is_perfect_with_warning() {
        let r = evaluate(engine(), &[]);
        assert_eq!((r.total, r.correct, r.accuracy), (0, 0, 1.0));
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn fallback_on_expected_miss_is_behavioral_only() {
        let qs = [
            LabeledQuestion::miss("What is the weather today?", MissLabel::OutOfCompetence),
            LabeledQuestion::answerable("What is an alignment score?", Intent::Vocabulary, "alignment-score"),
            LabeledQuestion::answerable("What is an alignment score?", Intent::Vocabulary, "alignment-score"),
        ];
        let r = evaluate(engine(), &qs);
        assert_eq!((r.total, r.unique_count, r.answered, r.correct, r.behavioral_correct), (3, 2, 2, 2, 3));
        assert_eq!(r.misses_by_reason, BTreeMap::from([(REASON_OUT_OF_COMPETENCE.to_owned(), 1)]));
        assert_eq!(r.unique_correct, 1);
        assert_eq!(r.per_intent[&Intent::Vocabulary].asked, 2);
    }

    #[test]
    fn wrong_label_counts_as_misanswered() {
        let qs = [LabeledQuestion::answerable("What is an alignment score?", Intent::Vocabulary, "cohort")];
        let r = evaluate(engine(), &qs);
        assert_eq!(r.misses_by_reason[REASON_MISANSWERED], 1);
    }

    #[test]
    fn training_set_is_fully_answered() {
        let (snap, ds) = demo::snapshot();
        let r = evaluate_dataset(&snap, &ds);
        assert_eq!(r.correct, ds.len());
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn insitu_fixture_counts() {
        let qs = load_questions(demo::INSITU_219).unwrap();
        let r = evaluate(engine(), &qs);
        assert_eq!((r.total, r.unique_count, r.correct), (219, 106, 200));
        assert_eq!(r.behavioral_correct, 219);
        assert_eq!(r.per_user.len(), 7);
        assert_eq!(
            r.misses_by_reason,
            BTreeMap::from([
                (REASON_LANGUAGE_ERROR.to_owned(), 1),
                (REASON_OUT_OF_COMPETENCE.to_owned(), 10),
                (REASON_STALE_TERM.to_owned(), 8),
            ])
        );
    }

    fn arb_question() -> impl Strategy<Value = LabeledQuestion> {
        let objects = prop::sample::select(vec!["alignment-score", "cohort", "training-request", "nope"]);
        let texts = prop::sample::select(vec![
            "What is an alignment score?",
            "What is a cohort?",
            "What inputs do I need to complete this Training Request?",
            "What is the weather today?",
            "wat",
        ]);
        let misses = prop::sample::select(vec![
            MissLabel::OutOfCompetence,
            MissLabel::StaleTerm,
            MissLabel::LanguageError,
        ]);
        (texts, prop::sample::select(Intent::ALL.to_vec()), objects, misses, any::<bool>()).prop_map(
            |(t, i, o, m, answerable)| {
                if answerable {
                    LabeledQuestion::answerable(t, i, o)
                } else {
                    LabeledQuestion::miss(t, m)
                }
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn accounting_identity(qs in prop::collection::vec(arb_question(), 0..12)) {
            let r = evaluate(engine(), &qs);
            prop_assert_eq!(r.correct + r.misses(), r.total);
            prop_assert!(r.answered <= r.total);
            prop_assert!(r.correct <= r.behavioral_correct);
            prop_assert_eq!(r.per_user.values().map(|c| c.asked).sum::<usize>(), r.total);
        }
    }
}
