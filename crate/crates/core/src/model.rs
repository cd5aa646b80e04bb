//! The TMK model: glossary terms (knowledge), a task hierarchy (tasks), and
//! the methods that decompose tasks. Models are read from and written to a
//! JSON document; see [`parse_model`] and [`serialize`].

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::de::{self, Deserialize, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::Serialize;
use serde_json::Value;

use crate::text;

/// A vocabulary term and its definition.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct GlossaryEntry {
    pub id: String,
    pub term: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub definition: String,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

/// How a leaf task is carried out in the user interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrimitiveAction {
    ButtonClick,
    TextEntry,
    FileUpload,
    #[default]
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct TaskNode {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    pub goal: String,
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub outputs: Vec<String>,
    #[serde(default)]
    pub subtasks: Vec<String>,
    #[serde(default)]
    pub primitive_action: PrimitiveAction,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl TaskNode {
    pub fn is_primitive(&self) -> bool {
        self.subtasks.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct Transition {
    pub state: String,
    pub subtask: String,
}

/// A method decomposing a task into an ordered set of state transitions.
/// Methods are carried in the model but never queried.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct MethodNode {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub transitions: Vec<Transition>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct TmkModel {
    pub name: String,
    pub version: String,
    #[serde(default)]
    pub glossary: Vec<GlossaryEntry>,
    #[serde(default)]
    pub tasks: Vec<TaskNode>,
    #[serde(default)]
    pub methods: Vec<MethodNode>,
    #[serde(rename = "roots", default)]
    pub root_task_ids: Vec<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl TmkModel {
    pub fn empty(name: impl Into<String>, version: impl Into<String>) -> Self {
        TmkModel {
            name: name.into(),
            version: version.into(),
            glossary: Vec::new(),
            tasks: Vec::new(),
            methods: Vec::new(),
            root_task_ids: Vec::new(),
            extra: BTreeMap::new(),
        }
    }

    pub fn task(&self, id: &str) -> Option<&TaskNode> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn glossary_entry(&self, id: &str) -> Option<&GlossaryEntry> {
        self.glossary.iter().find(|g| g.id == id)
    }

    /// Every glossary entry and task, in declaration order.
    pub fn entities(&self) -> impl Iterator<Item = Entity<'_>> {
        self.glossary
            .iter()
            .map(Entity::Term)
            .chain(self.tasks.iter().map(Entity::Task))
    }

    /// Paths of keys the schema does not know about.
    pub fn unknown_keys(&self) -> Vec<String> {
        let mut out: Vec<String> = self.extra.keys().cloned().collect();
        for (i, g) in self.glossary.iter().enumerate() {
            out.extend(g.extra.keys().map(|k| format!("glossary[{i}].{k}")));
        }
        for (i, t) in self.tasks.iter().enumerate() {
            out.extend(t.extra.keys().map(|k| format!("tasks[{i}].{k}")));
        }
        for (i, m) in self.methods.iter().enumerate() {
            out.extend(m.extra.keys().map(|k| format!("methods[{i}].{k}")));
        }
        out
    }
}

/// A glossary entry or task: anything a question can refer to by name.
#[derive(Debug, Clone, Copy)]
pub enum Entity<'a> {
    Term(&'a GlossaryEntry),
    Task(&'a TaskNode),
}

impl<'a> Entity<'a> {
    pub fn id(&self) -> &'a str {
        match self {
            Entity::Term(g) => &g.id,
            Entity::Task(t) => &t.id,
        }
    }

    pub fn display_name(&self) -> &'a str {
        match self {
            Entity::Term(g) => &g.term,
            Entity::Task(t) => &t.name,
        }
    }

    fn raw_forms(&self) -> impl Iterator<Item = &'a str> {
        let (head, rest): (&'a str, &'a [String]) = match self {
            Entity::Term(g) => (&g.term, &g.aliases),
            Entity::Task(t) => (&t.name, &t.keywords),
        };
        std::iter::once(head).chain(rest.iter().map(String::as_str))
    }
}

/// Normalized names an entity can be referred to by: canonical name first,
/// then aliases or keywords in declaration order, without duplicates.
pub fn surface_forms(entity: Entity<'_>) -> Vec<String> {
    let mut seen = HashSet::new();
    entity
        .raw_forms()
        .map(text::normalize)
        .filter(|s| !s.is_empty() && seen.insert(s.clone()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl From<serde_json::Error> for ParseError {
    fn from(err: serde_json::Error) -> Self {
        let full = err.to_string();
        // serde_json appends " at line L column C"; the position is reported separately.
        let message = match full.rfind(" at line ") {
            Some(idx) => full[..idx].to_owned(),
            None => full,
        };
        ParseError {
            line: err.line(),
            column: err.column(),
            message,
        }
    }
}

/// Parses a TMK model document. Only the syntactic shape is checked here;
/// run [`crate::validate::validate`] before using the model.
pub fn parse_model(text: &str) -> Result<TmkModel, ParseError> {
    serde_json::from_str::<NoDuplicateKeys>(text)?;
    let mut model: TmkModel = serde_json::from_str(text)?;
    trim_model(&mut model);
    Ok(model)
}

/// Canonical text form of a model: pretty JSON with schema key order and a
/// trailing newline.
pub fn serialize(model: &TmkModel) -> String {
    let mut out = serde_json::to_string_pretty(model).expect("model serializes");
    out.push('\n');
    out
}

fn trim_model(m: &mut TmkModel) {
    fn t(s: &mut String) {
        let trimmed = s.trim();
        if trimmed.len() != s.len() {
            *s = trimmed.to_owned();
        }
    }
    fn all(v: &mut [String]) {
        v.iter_mut().for_each(t);
    }
    t(&mut m.name);
    t(&mut m.version);
    all(&mut m.root_task_ids);
    for g in &mut m.glossary {
        t(&mut g.id);
        t(&mut g.term);
        t(&mut g.definition);
        all(&mut g.aliases);
    }
    for task in &mut m.tasks {
        t(&mut task.id);
        t(&mut task.name);
        t(&mut task.goal);
        all(&mut task.keywords);
        all(&mut task.inputs);
        all(&mut task.outputs);
        all(&mut task.subtasks);
    }
    for meth in &mut m.methods {
        t(&mut meth.id);
        t(&mut meth.name);
        t(&mut meth.description);
        for tr in &mut meth.transitions {
            t(&mut tr.state);
            t(&mut tr.subtask);
        }
    }
}

/// Walks any JSON document and fails on the first object with a repeated key.
struct NoDuplicateKeys;

impl<'de> Deserialize<'de> for NoDuplicateKeys {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(NoDuplicateKeysVisitor)
    }
}

struct NoDuplicateKeysVisitor;

impl<'de> Visitor<'de> for NoDuplicateKeysVisitor {
    type Value = NoDuplicateKeys;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("any JSON value")
    }

    fn visit_bool<E>(self, _: bool) -> Result<Self::Value, E> {
        Ok(NoDuplicateKeys)
    }
    fn visit_i64<E>(self, _: i64) -> Result<Self::Value, E> {
        Ok(NoDuplicateKeys)
    }
    fn visit_u64<E>(self, _: u64) -> Result<Self::Value, E> {
        Ok(NoDuplicateKeys)
    }
    fn visit_f64<E>(self, _: f64) -> Result<Self::Value, E> {
        Ok(NoDuplicateKeys)
    }
    fn visit_str<E>(self, _: &str) -> Result<Self::Value, E> {
        Ok(NoDuplicateKeys)
    }
    fn visit_unit<E>(self) -> Result<Self::Value, E> {
        Ok(NoDuplicateKeys)
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
        while seq.next_element::<NoDuplicateKeys>()?.is_some() {}
        Ok(NoDuplicateKeys)
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
        let mut keys = HashSet::new();
        while let Some(key) = map.next_key::<String>()? {
            if !keys.insert(key.clone()) {
                return Err(de::Error::custom(format!("duplicate key `{key}`")));
            }
            map.next_value::<NoDuplicateKeys>()?;
        }
        Ok(NoDuplicateKeys)
    }
}
