//! Training data generation: question templates expanded against every
//! surface form of every object they apply to.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::kb::{Intent, KnowledgeBase};
use crate::text;

pub const SLOT: &str = "{object}";

/// Template id given to labeled questions merged from a supplement file.
pub const SUPPLEMENT_TEMPLATE: &str = "supplement";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Register {
    Formal,
    Casual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionTemplate {
    pub id: String,
    pub intent: Intent,
    pub pattern: String,
    pub register: Register,
}

impl QuestionTemplate {
    pub fn fill(&self, surface: &str) -> String {
        self.pattern.replacen(SLOT, surface, 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct TemplateParseError {
    pub line: usize,
    pub message: String,
}

/// Parses the line-oriented template file: `intent<TAB>register<TAB>pattern`.
/// Blank lines and `#` comments are skipped. Ids are assigned per intent in
/// declaration order (`goals-1`, `goals-2`, ...).
pub fn load_templates(text: &str) -> Result<Vec<QuestionTemplate>, TemplateParseError> {
    let mut per_intent: HashMap<Intent, usize> = HashMap::new();
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |message: String| TemplateParseError { line, message };
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        let [intent, register, pattern] = fields[..] else {
            return Err(err(format!("expected 3 tab-separated fields, found {}", fields.len())));
        };
        let intent: Intent = intent.parse().map_err(err)?;
        let register = match register.trim() {
            "formal" => Register::Formal,
            "casual" => Register::Casual,
            other => return Err(err(format!("unknown register `{other}`"))),
        };
        let pattern = pattern.trim();
        match pattern.matches(SLOT).count() {
            1 => {}
            0 => return Err(err(format!("pattern `{pattern}` has no {SLOT} slot"))),
            k => return Err(err(format!("pattern `{pattern}` has {k} {SLOT} slots"))),
        }
        let k = per_intent.entry(intent).or_default();
        *k += 1;
        out.push(QuestionTemplate {
            id: format!("{intent}-{k}"),
            intent,
            pattern: pattern.to_owned(),
            register,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub question: String,
    pub intent: Intent,
    pub object_id: String,
    pub template_id: String,
    pub surface_form: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestCount {
    pub intent: Intent,
    pub template_id: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub model_version: String,
    pub size: usize,
    pub counts: Vec<ManifestCount>,
    pub dataset_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub examples: Vec<TrainingExample>,
    pub seed: u64,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("question `{question}` is labeled both {first} and {second}")]
    ConflictingLabels {
        question: String,
        first: String,
        second: String,
    },
    #[error("dataset is empty")]
    Empty,
    #[error("holdout fraction {0} is outside (0, 1)")]
    BadFraction(f64),
    #[error("cannot stratify intent {intent}: {reason}")]
    Unsatisfiable { intent: Intent, reason: String },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("labeled question `{question}`: {message}")]
    BadLabel { question: String, message: String },
}

impl Dataset {
    /// Wraps examples, rejecting conflicting labels and computing the manifest.
    pub fn from_examples(
        examples: Vec<TrainingExample>,
        seed: u64,
        model_version: &str,
    ) -> Result<Self, DatasetError> {
        let mut labels: HashMap<String, (Intent, &str)> = HashMap::new();
        for e in &examples {
            let key = text::normalize(&e.question);
            match labels.get(&key) {
                Some(&(intent, obj)) if intent != e.intent || obj != e.object_id => {
                    return Err(DatasetError::ConflictingLabels {
                        question: e.question.clone(),
                        first: format!("({intent}, {obj})"),
                        second: format!("({}, {})", e.intent, e.object_id),
                    });
                }
                Some(_) => {}
                None => {
                    labels.insert(key, (e.intent, &e.object_id));
                }
            }
        }
        let manifest = Manifest::describe(&examples, seed, model_version);
        Ok(Dataset {
            examples,
            seed,
            manifest,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// JSON-lines rendering, one example per line.
    pub fn to_jsonl(&self) -> String {
        examples_to_jsonl(&self.examples)
    }

    /// Re-stamps the dataset with the seed used to generate or split it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.manifest.seed = seed;
        self
    }

    pub fn model_version(&self) -> &str {
        &self.manifest.model_version
    }

    /// Reads a JSON-lines dataset; seed and model version come from its manifest.
    pub fn from_jsonl(text: &str, seed: u64, model_version: &str) -> Result<Self, DatasetError> {
        let mut examples = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e = serde_json::from_str(line).map_err(|err| DatasetError::Malformed {
                line: n + 1,
                message: err.to_string(),
            })?;
            examples.push(e);
        }
        Dataset::from_examples(examples, seed, model_version)
    }

    /// Appends labeled questions (e.g. real user questions) to the dataset.
    pub fn merge_supplement(self, extra: Vec<LabeledExample>, kb: &KnowledgeBase) -> Result<Self, DatasetError> {
        let mut examples = self.examples;
        for l in extra {
            if !kb.is_valid(l.intent, &l.object_id) {
                return Err(DatasetError::BadLabel {
                    question: l.question,
                    message: format!("`{}` cannot answer {} questions", l.object_id, l.intent),
                });
            }
            examples.push(TrainingExample {
                question: l.question,
                intent: l.intent,
                object_id: l.object_id,
                template_id: SUPPLEMENT_TEMPLATE.to_owned(),
                surface_form: String::new(),
            });
        }
        Dataset::from_examples(examples, self.seed, &self.manifest.model_version)
    }
}

fn examples_to_jsonl(examples: &[TrainingExample]) -> String {
    let mut out = String::new();
    for e in examples {
        out.push_str(&serde_json::to_string(e).expect("example serializes"));
        out.push('\n');
    }
    out
}

impl Manifest {
    fn describe(examples: &[TrainingExample], seed: u64, model_version: &str) -> Self {
        let mut counts: Vec<ManifestCount> = Vec::new();
        let mut slot: HashMap<(Intent, &str), usize> = HashMap::new();
        for e in examples {
            let i = *slot.entry((e.intent, e.template_id.as_str())).or_insert_with(|| {
                counts.push(ManifestCount {
                    intent: e.intent,
                    template_id: e.template_id.clone(),
                    count: 0,
                });
                counts.len() - 1
            });
            counts[i].count += 1;
        }
        let digest = Sha256::digest(examples_to_jsonl(examples).as_bytes());
        Manifest {
            seed,
            model_version: model_version.to_owned(),
            size: examples.len(),
            counts,
            dataset_hash: hex::encode(digest),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// A question with a known answer, as found in supplement files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub question: String,
    pub intent: Intent,
    pub object_id: String,
}

pub fn load_supplement(text: &str) -> Result<Vec<LabeledExample>, DatasetError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|err| DatasetError::Malformed {
                line: n + 1,
                message: err.to_string(),
            })
        })
        .collect()
}

/// Expands every template against every surface form of every object its
/// intent applies to. Order: template, then object id, then surface form.
pub fn expand(templates: &[QuestionTemplate], kb: &KnowledgeBase) -> Result<Dataset, DatasetError> {
    let mut examples = Vec::new();
    for t in templates {
        for object_id in kb.objects(t.intent) {
            let info = kb.entity(object_id).expect("indexed object exists");
            for surface in &info.surface_forms {
                examples.push(TrainingExample {
                    question: t.fill(surface),
                    intent: t.intent,
                    object_id: object_id.to_owned(),
                    template_id: t.id.clone(),
                    surface_form: surface.clone(),
                });
            }
        }
    }
    Dataset::from_examples(examples, 0, &kb.model_version)
}

/// Closed-form size of `expand(templates, kb)`.
pub fn expected_size(templates: &[QuestionTemplate], kb: &KnowledgeBase) -> usize {
    templates
        .iter()
        .map(|t| {
            kb.objects(t.intent)
                .map(|o| kb.entity(o).map_or(0, |e| e.surface_forms.len()))
                .sum::<usize>()
        })
        .sum()
}

/// Seeded, intent-stratified holdout split.
///
/// Each intent contributes `round(fraction * n_intent)` examples to the
/// holdout. An example may only be held out while its object keeps a
/// training example under some other template.
pub fn split(ds: &Dataset, holdout_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DatasetError> {
    if ds.is_empty() {
        return Err(DatasetError::Empty);
    }
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(DatasetError::BadFraction(holdout_fraction));
    }

    let mut by_intent: BTreeMap<Intent, Vec<usize>> = BTreeMap::new();
    for (i, e) in ds.examples.iter().enumerate() {
        by_intent.entry(e.intent).or_default().push(i);
    }

    // object -> template -> examples still in train
    let mut train_counts: HashMap<&str, BTreeMap<&str, usize>> = HashMap::new();
    for e in &ds.examples {
        *train_counts
            .entry(&e.object_id)
            .or_default()
            .entry(&e.template_id)
            .or_default() += 1;
    }
    let mut held_templates: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    let mut held = vec![false; ds.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for (intent, mut members) in by_intent {
        let templates: BTreeSet<&str> = members.iter().map(|&i| ds.examples[i].template_id.as_str()).collect();
        if templates.len() < 2 {
            return Err(DatasetError::Unsatisfiable {
                intent,
                reason: "only one template".into(),
            });
        }
        let target = (holdout_fraction * members.len() as f64).round() as usize;
        members.shuffle(&mut rng);
        let mut taken = 0;
        for i in members {
            if taken == target {
                break;
            }
            let e = &ds.examples[i];
            let counts = train_counts.get_mut(e.object_id.as_str()).expect("counted");
            *counts.get_mut(e.template_id.as_str()).expect("counted") -= 1;
            let mut probe = held_templates.get(e.object_id.as_str()).cloned().unwrap_or_default();
            probe.insert(&e.template_id);
            let witnessed = probe
                .iter()
                .all(|h| counts.iter().any(|(t, &n)| t != h && n > 0));
            if witnessed {
                held[i] = true;
                held_templates.insert(&e.object_id, probe);
                taken += 1;
            } else {
                *counts.get_mut(e.template_id.as_str()).expect("counted") += 1;
            }
        }
        if taken < target {
            return Err(DatasetError::Unsatisfiable {
                intent,
                reason: format!("only {taken} of {target} examples can be held out"),
            });
        }
    }

    let (mut train, mut holdout) = (Vec::new(), Vec::new());
    for (e, h) in ds.examples.iter().zip(held) {
        if h {
            holdout.push(e.clone());
        } else {
            train.push(e.clone());
        }
    }
    Ok((
        Dataset::from_examples(train, seed, ds.model_version())?,
        Dataset::from_examples(holdout, seed, ds.model_version())?,
    ))
}
