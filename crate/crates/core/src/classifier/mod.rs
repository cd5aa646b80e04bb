//! Two-layer question classification: a statistical intent layer followed
//! by rule-based entity extraction, combined into a [`StructuredQuery`].

mod intent;

pub use intent::{
    train, ClassifierConfig, ClassifierError, IntentModel, IntentScores, PriorMode, TrainingManifest,
    FORMAT_VERSION,
};

use serde::{Deserialize, Serialize};

use crate::kb::{Intent, KnowledgeBase, StructuredQuery};
use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMatch {
    pub object_id: String,
    pub matched_surface: String,
    /// Token offsets `[start, end)` into the normalized question.
    pub span: (usize, usize),
    pub match_length: usize,
    /// False when the match came from the unrestricted retry, i.e. the
    /// object is not valid for the requested intent.
    pub intent_valid: bool,
}

/// Finds the entity a question refers to.
///
/// Contiguous token windows are looked up in the surface index, longest
/// first, then leftmost. Objects valid for `intent` are tried first; if none
/// occurs the scan is repeated over all objects, with `intent_valid` false
/// on the result.
pub fn extract_entity(kb: &KnowledgeBase, question: &str, intent: Intent) -> Option<EntityMatch> {
    let tokens = text::tokenize(question);
    scan(kb, &tokens, Some(intent)).or_else(|| scan(kb, &tokens, None))
}

fn scan(kb: &KnowledgeBase, tokens: &[String], intent: Option<Intent>) -> Option<EntityMatch> {
    let longest = kb.max_surface_tokens().min(tokens.len());
    for len in (1..=longest).rev() {
        for start in 0..=tokens.len() - len {
            let key = tokens[start..start + len].join(" ");
            let Some(id) = kb.surface_index.get(&key) else {
                continue;
            };
            if intent.is_some_and(|i| !kb.is_valid(i, id)) {
                continue;
            }
            return Some(EntityMatch {
                object_id: id.clone(),
                matched_surface: key,
                span: (start, start + len),
                match_length: len,
                intent_valid: intent.is_some(),
            });
        }
    }
    None
}

/// Combines intent scores and the extracted entity.
///
/// If the object cannot answer the top intent but exactly one intent it can
/// answer scores within `rescue_margin` of the top, that intent is used.
/// Otherwise the top intent is kept and execution reports the mismatch.
pub fn build_query(
    kb: &KnowledgeBase,
    scores: &IntentScores,
    found: &EntityMatch,
    rescue_margin: f64,
) -> StructuredQuery {
    let top = scores.top_intent;
    if kb.is_valid(top, &found.object_id) {
        return StructuredQuery::new(top, found.object_id.clone());
    }
    let near: Vec<Intent> = Intent::ALL
        .into_iter()
        .filter(|&i| i != top && kb.is_valid(i, &found.object_id))
        .filter(|&i| scores.top_confidence - scores.confidence(i) <= rescue_margin)
        .collect();
    match near[..] {
        [only] => StructuredQuery::new(only, found.object_id.clone()),
        _ => StructuredQuery::new(top, found.object_id.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::kb::compile;
    use proptest::prelude::*;

    fn kb() -> KnowledgeBase {
        compile(&demo::model()).unwrap()
    }

    #[test]
    fn alignment_score_match() {
        let m = extract_entity(&kb(), "What is an alignment score?", Intent::Vocabulary).unwrap();
        assert_eq!(m.object_id, "alignment-score");
        assert_eq!(m.matched_surface, "alignment score");
        assert_eq!(m.span, (3, 5));
        assert!(m.intent_valid);
    }

    #[test]
    fn longest_keyword_wins() {
        // "training proposal" (2 tokens) beats the 1-token keyword "proposal".
        let m = extract_entity(&kb(), "What is the expected outcome of a training proposal?", Intent::Outputs).unwrap();
        assert_eq!(m.object_id, "training-proposal");
        assert_eq!(m.match_length, 2);
    }

    #[test]
    fn out_of_domain_has_no_match() {
        assert_eq!(extract_entity(&kb(), "What is the weather today?", Intent::Vocabulary), None);
    }

    #[test]
    fn restricted_pass_prefers_valid_objects() {
        // "training plan" is a term; the task "create training plan" is longer
        // but under vocabulary the term is the restricted match.
        let k = kb();
        let m = extract_entity(&k, "what is create training plan", Intent::Vocabulary).unwrap();
        assert_eq!(m.object_id, "training-plan");
        let m = extract_entity(&k, "what is create training plan", Intent::Goals).unwrap();
        assert_eq!(m.object_id, "create-training-plan");
        // Nothing valid for goals: unrestricted retry flags the mismatch.
        let m = extract_entity(&k, "what is the goal of a cohort", Intent::Goals).unwrap();
        assert_eq!(m.object_id, "cohort");
        assert!(!m.intent_valid);
    }

    #[test]
    fn leftmost_among_equal_lengths() {
        let m = extract_entity(&kb(), "tuition or cohort", Intent::Vocabulary).unwrap();
        assert_eq!(m.object_id, "tuition");
    }

    fn scores(pairs: &[(Intent, f64)]) -> IntentScores {
        let mut raw = [0.0; 5];
        for (i, c) in pairs {
            raw[i.index()] = *c;
        }
        IntentScores::from_confidences(raw)
    }

    fn found(id: &str) -> EntityMatch {
        EntityMatch {
            object_id: id.into(),
            matched_surface: id.into(),
            span: (0, 1),
            match_length: 1,
            intent_valid: true,
        }
    }

    #[test]
    fn build_keeps_valid_top() {
        let k = kb();
        let s = scores(&[(Intent::Vocabulary, 0.9), (Intent::Goals, 0.1)]);
        assert_eq!(
            build_query(&k, &s, &found("alignment-score"), 0.05),
            StructuredQuery::new(Intent::Vocabulary, "alignment-score")
        );
        let s = scores(&[(Intent::Goals, 0.8), (Intent::Inputs, 0.2)]);
        assert_eq!(
            build_query(&k, &s, &found("training-request"), 0.05),
            StructuredQuery::new(Intent::Goals, "training-request")
        );
    }

    #[test]
    fn rescue_within_margin() {
        let k = kb();
        let s = scores(&[(Intent::Vocabulary, 0.51), (Intent::Goals, 0.49)]);
        assert_eq!(
            build_query(&k, &s, &found("training-request"), 0.05),
            StructuredQuery::new(Intent::Goals, "training-request")
        );
        // Outside the margin the contradiction is kept for execute to report.
        let s = scores(&[(Intent::Vocabulary, 0.6), (Intent::Goals, 0.4)]);
        assert_eq!(
            build_query(&k, &s, &found("training-request"), 0.05).intent,
            Intent::Vocabulary
        );
        // Two candidates within the margin: ambiguous, no rescue.
        let s = scores(&[(Intent::Vocabulary, 0.34), (Intent::Goals, 0.33), (Intent::Inputs, 0.33)]);
        assert_eq!(
            build_query(&k, &s, &found("training-request"), 0.05).intent,
            Intent::Vocabulary
        );
    }

    proptest! {
        #[test]
        fn matches_are_sound(q in "[a-z ]{0,60}", pick in 0usize..60) {
            let k = kb();
            let keys: Vec<&String> = k.surface_index.keys().collect();
            let q = format!("{q} {}", keys[pick % keys.len()]);
            for intent in Intent::ALL {
                if let Some(m) = extract_entity(&k, &q, intent) {
                    prop_assert_eq!(k.surface_index.get(&m.matched_surface), Some(&m.object_id));
                    let toks = text::tokenize(&q);
                    prop_assert_eq!(toks[m.span.0..m.span.1].join(" "), m.matched_surface.clone());
                    prop_assert_eq!(m.span.1 - m.span.0, m.match_length);
                }
            }
        }

        // Appending a strictly longer surface form moves the match onto it.
        #[test]
        fn longest_match_dominates(prefix in "[a-z]{3,8}( [a-z]{3,8}){0,3}", n in 1usize..5) {
            use crate::model::{GlossaryEntry, TmkModel};
            let mut m = TmkModel::empty("p", "0");
            let words: Vec<String> = (0..=n).map(|i| format!("zq{i}")).collect();
            m.glossary.push(GlossaryEntry {
                id: "short".into(), term: words[..n].join(" "), aliases: vec![],
                definition: "d".into(), extra: Default::default(),
            });
            m.glossary.push(GlossaryEntry {
                id: "long".into(), term: words.join(" "), aliases: vec![],
                definition: "d".into(), extra: Default::default(),
            });
            let k = compile(&m).unwrap();
            let base = format!("{prefix} {}", words[..n].join(" "));
            prop_assert_eq!(extract_entity(&k, &base, Intent::Vocabulary).unwrap().object_id, "short");
            let longer = format!("{base} and {}", words.join(" "));
            prop_assert_eq!(extract_entity(&k, &longer, Intent::Vocabulary).unwrap().object_id, "long");
        }
    }
}
