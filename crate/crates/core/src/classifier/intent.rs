//! Statistical intent layer: a multinomial naive Bayes model over
//! normalized question tokens.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::Dataset;
use crate::kb::Intent;
use crate::text;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorMode {
    /// Every intent starts equally likely.
    Uniform,
    /// Intent priors follow the class frequencies of the training set.
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    /// Additive (Lidstone) smoothing applied to token counts.
    pub smoothing: f64,
    pub stemming: bool,
    pub priors: PriorMode,
    /// Replace entity mentions with a placeholder before scoring.
    pub mask_entities: bool,
    /// Add adjacent token pairs as features alongside single tokens.
    pub bigrams: bool,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            smoothing: 0.1,
            stemming: false,
            priors: PriorMode::Uniform,
            mask_entities: true,
            bigrams: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingManifest {
    pub model_version: String,
    pub dataset_hash: String,
    pub dataset_size: usize,
    pub seed: u64,
    pub config: ClassifierConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentModel {
    pub format_version: u32,
    pub manifest_hash: String,
    pub manifest: TrainingManifest,
    pub intents: Vec<Intent>,
    /// Surface forms masked out of questions when `mask_entities` is set.
    pub entity_lexicon: BTreeSet<String>,
    pub vocabulary: BTreeMap<String, usize>,
    pub log_priors: Vec<f64>,
    /// `token_log_weights[intent][feature]`
    pub token_log_weights: Vec<Vec<f64>>,
    /// Log weight of a token never seen in training, per intent.
    pub unseen_log_weight: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentScores {
    /// Indexed by [`Intent::index`].
    pub confidences: [f64; 5],
    pub top_intent: Intent,
    pub top_confidence: f64,
}

impl IntentScores {
    pub fn confidence(&self, intent: Intent) -> f64 {
        self.confidences[intent.index()]
    }

    /// Builds scores from an arbitrary confidence vector (normalized here).
    pub fn from_confidences(raw: [f64; 5]) -> Self {
        let total: f64 = raw.iter().sum();
        let confidences = raw.map(|c| c / total);
        let (top, &top_confidence) = confidences
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        IntentScores {
            confidences,
            top_intent: Intent::ALL[top],
            top_confidence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifierError {
    #[error("MISSING_INTENT: no training examples for {0}")]
    MissingIntent(Intent),
    #[error("EMPTY_QUESTION: question has no tokens after normalization")]
    EmptyQuestion,
    #[error("unsupported model format_version {found}, expected {FORMAT_VERSION}")]
    FormatVersion { found: u32 },
    #[error("malformed model artifact: {0}")]
    Malformed(String),
}

/// Stands in for a masked entity mention. Tokenization strips braces from
/// user text, so no user token equals it.
pub const ENTITY_PLACEHOLDER: &str = "{object}";

const DETERMINERS: [&str; 3] = ["a", "an", "the"];

struct FeatureExtractor<'a> {
    config: &'a ClassifierConfig,
    lexicon: &'a BTreeSet<String>,
    longest: usize,
}

impl<'a> FeatureExtractor<'a> {
    fn new(config: &'a ClassifierConfig, lexicon: &'a BTreeSet<String>) -> Self {
        let longest = lexicon.iter().map(|f| f.split(' ').count()).max().unwrap_or(0);
        FeatureExtractor { config, lexicon, longest }
    }

    fn features(&self, question: &str) -> Vec<String> {
        let tokens = text::tokenize(question);
        let tokens = if self.config.mask_entities {
            self.mask(tokens)
        } else {
            tokens
        };
        let tokens: Vec<String> = if self.config.stemming {
            tokens
                .into_iter()
                .map(|t| if t == ENTITY_PLACEHOLDER { t } else { text::stem(&t) })
                .collect()
        } else {
            tokens
        };
        if !self.config.bigrams {
            return tokens;
        }
        let pairs: Vec<String> = tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])).collect();
        tokens.into_iter().chain(pairs).collect()
    }

    /// Leftmost-longest replacement of lexicon entries by the placeholder.
    /// A determiner directly before a mention is folded into it.
    fn mask(&self, tokens: Vec<String>) -> Vec<String> {
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            let longest = self.longest.min(tokens.len() - i);
            let hit = (1..=longest)
                .rev()
                .find(|&len| self.lexicon.contains(&tokens[i..i + len].join(" ")));
            match hit {
                Some(len) => {
                    if out.last().is_some_and(|t: &String| DETERMINERS.contains(&t.as_str())) {
                        out.pop();
                    }
                    out.push(ENTITY_PLACEHOLDER.to_owned());
                    i += len;
                }
                None => {
                    out.push(tokens[i].clone());
                    i += 1;
                }
            }
        }
        out
    }
}

/// Trains the intent layer. Deterministic in `(ds, seed, config)`; the seed
/// is recorded for provenance, the estimator itself draws no randomness.
pub fn train(ds: &Dataset, seed: u64, config: &ClassifierConfig) -> Result<IntentModel, ClassifierError> {
    let entity_lexicon: BTreeSet<String> = ds
        .examples
        .iter()
        .map(|e| text::normalize(&e.surface_form))
        .filter(|f| !f.is_empty())
        .collect();
    let extractor = FeatureExtractor::new(config, &entity_lexicon);
    let mut doc_counts = [0usize; 5];
    let mut token_counts: Vec<BTreeMap<String, usize>> = vec![BTreeMap::new(); 5];
    for e in &ds.examples {
        let c = e.intent.index();
        doc_counts[c] += 1;
        for tok in extractor.features(&e.question) {
            *token_counts[c].entry(tok).or_default() += 1;
        }
    }
    if let Some(missing) = Intent::ALL.iter().find(|i| doc_counts[i.index()] == 0) {
        return Err(ClassifierError::MissingIntent(*missing));
    }

    let mut all_tokens: Vec<&String> = token_counts.iter().flat_map(|m| m.keys()).collect();
    all_tokens.sort();
    all_tokens.dedup();
    let vocabulary: BTreeMap<String, usize> = all_tokens
        .into_iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();

    let alpha = config.smoothing;
    // One extra slot of smoothing mass covers every unseen token.
    let slots = (vocabulary.len() + 1) as f64;
    let mut token_log_weights = Vec::with_capacity(5);
    let mut unseen_log_weight = Vec::with_capacity(5);
    for counts in &token_counts {
        let total: usize = counts.values().sum();
        let denom = (total as f64 + alpha * slots).ln();
        let row: Vec<f64> = vocabulary
            .keys()
            .map(|tok| (counts.get(tok).copied().unwrap_or(0) as f64 + alpha).ln() - denom)
            .collect();
        token_log_weights.push(row);
        unseen_log_weight.push(alpha.ln() - denom);
    }

    let n = ds.len() as f64;
    let log_priors = doc_counts
        .iter()
        .map(|&d| match config.priors {
            PriorMode::Uniform => (1.0f64 / 5.0).ln(),
            PriorMode::Empirical => (d as f64 / n).ln(),
        })
        .collect();

    let manifest = TrainingManifest {
        model_version: ds.model_version().to_owned(),
        dataset_hash: ds.manifest.dataset_hash.clone(),
        dataset_size: ds.len(),
        seed,
        config: config.clone(),
    };
    let manifest_hash = hex::encode(Sha256::digest(
        serde_json::to_vec(&manifest).expect("manifest serializes"),
    ));
    Ok(IntentModel {
        format_version: FORMAT_VERSION,
        manifest_hash,
        manifest,
        intents: Intent::ALL.to_vec(),
        entity_lexicon,
        vocabulary,
        log_priors,
        token_log_weights,
        unseen_log_weight,
    })
}

impl IntentModel {
    /// Scores a question over the five intents.
    pub fn classify(&self, question: &str) -> Result<IntentScores, ClassifierError> {
        let tokens = FeatureExtractor::new(&self.manifest.config, &self.entity_lexicon).features(question);
        if tokens.is_empty() {
            return Err(ClassifierError::EmptyQuestion);
        }
        let mut log_scores = [0.0f64; 5];
        for (c, score) in log_scores.iter_mut().enumerate() {
            *score = self.log_priors[c]
                + tokens
                    .iter()
                    .map(|t| match self.vocabulary.get(t) {
                        Some(&f) => self.token_log_weights[c][f],
                        None => self.unseen_log_weight[c],
                    })
                    .sum::<f64>();
        }
        let max = log_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(IntentScores::from_confidences(log_scores.map(|s| (s - max).exp())))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| ClassifierError::Malformed(e.to_string()))?;
        if header.format_version != FORMAT_VERSION {
            return Err(ClassifierError::FormatVersion {
                found: header.format_version,
            });
        }
        let model: IntentModel =
            serde_json::from_str(text).map_err(|e| ClassifierError::Malformed(e.to_string()))?;
        let n = model.vocabulary.len();
        if model.intents != Intent::ALL
            || model.log_priors.len() != 5
            || model.unseen_log_weight.len() != 5
            || model.token_log_weights.len() != 5
            || model.token_log_weights.iter().any(|r| r.len() != n)
        {
            return Err(ClassifierError::Malformed("statistics have the wrong shape".into()));
        }
        Ok(model)
    }
}
