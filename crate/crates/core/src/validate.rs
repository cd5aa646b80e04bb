//! Structural validation of a parsed [`TmkModel`].

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{PrimitiveAction, TmkModel};
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    InvalidId,
    DuplicateId,
    IdCollision,
    EmptyTerm,
    EmptyDefinition,
    AliasConflict,
    EmptyName,
    EmptyGoal,
    UnknownSubtask,
    DuplicateSubtask,
    Cycle,
    MultipleParents,
    PrimitiveActionMissing,
    PrimitiveActionOnComposite,
    UnknownRoot,
    DuplicateRoot,
    RootHasParent,
    UnreachableTask,
    MethodNoTransitions,
    MethodUnknownSubtask,
    UnknownKey,
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("code serializes");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub code: IssueCode,
    pub location: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.location, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn error_codes(&self) -> Vec<IssueCode> {
        self.errors.iter().map(|e| e.code).collect()
    }

    fn error(&mut self, code: IssueCode, location: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Issue {
            code,
            location: location.into(),
            message: message.into(),
        });
    }

    /// Human-readable listing, one issue per line, followed by a count line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.errors {
            out.push_str(&format!("error: {e}\n"));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out.push_str(&format!(
            "{} errors, {} warnings\n",
            self.errors.len(),
            self.warnings.len()
        ));
        out
    }
}

fn is_slug(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('-')
        && !id.ends_with('-')
        && !id.contains("--")
        && id
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-')
}

/// Checks every model invariant. Violations are returned as data; a report
/// with any error means the model must not be compiled or served.
pub fn validate(model: &TmkModel) -> ValidationReport {
    use IssueCode::*;
    let mut r = ValidationReport::default();

    let mut term_ids = HashSet::new();
    for (i, g) in model.glossary.iter().enumerate() {
        let loc = format!("glossary[{i}]");
        if !is_slug(&g.id) {
            r.error(InvalidId, &loc, format!("`{}` is not a lowercase hyphenated slug", g.id));
        }
        if !term_ids.insert(g.id.as_str()) {
            r.error(DuplicateId, &loc, format!("glossary id `{}` declared twice", g.id));
        }
        if g.term.trim().is_empty() {
            r.error(EmptyTerm, &loc, "term is empty");
        }
        if g.definition.trim().is_empty() {
            r.error(EmptyDefinition, &loc, format!("`{}` has no definition", g.id));
        }
    }

    let terms_by_norm: HashMap<String, &str> = model
        .glossary
        .iter()
        .map(|g| (text::normalize(&g.term), g.id.as_str()))
        .collect();
    for (i, g) in model.glossary.iter().enumerate() {
        for (j, alias) in g.aliases.iter().enumerate() {
            if let Some(other) = terms_by_norm.get(&text::normalize(alias)) {
                if *other != g.id {
                    r.error(
                        AliasConflict,
                        format!("glossary[{i}].aliases[{j}]"),
                        format!("alias `{alias}` of `{}` is the term of `{other}`", g.id),
                    );
                }
            }
        }
    }

    let mut task_index: HashMap<&str, usize> = HashMap::new();
    for (i, t) in model.tasks.iter().enumerate() {
        let loc = format!("tasks[{i}]");
        if !is_slug(&t.id) {
            r.error(InvalidId, &loc, format!("`{}` is not a lowercase hyphenated slug", t.id));
        }
        if task_index.insert(t.id.as_str(), i).is_some() {
            r.error(DuplicateId, &loc, format!("task id `{}` declared twice", t.id));
        }
        if term_ids.contains(t.id.as_str()) {
            r.error(IdCollision, &loc, format!("task id `{}` is also a glossary id", t.id));
        }
        if t.name.trim().is_empty() {
            r.error(EmptyName, &loc, "name is empty");
        }
        if t.goal.trim().is_empty() {
            r.error(EmptyGoal, &loc, format!("`{}` has no goal", t.id));
        }
        match (t.is_primitive(), t.primitive_action) {
            (true, PrimitiveAction::None) => r.error(
                PrimitiveActionMissing,
                &loc,
                format!("primitive task `{}` declares no primitive action", t.id),
            ),
            (false, a) if a != PrimitiveAction::None => r.error(
                PrimitiveActionOnComposite,
                &loc,
                format!("`{}` has subtasks but declares a primitive action", t.id),
            ),
            _ => {}
        }
    }

    // Parent links, counted once per (parent, child).
    let mut parents: HashMap<&str, Vec<&str>> = HashMap::new();
    for (i, t) in model.tasks.iter().enumerate() {
        let mut listed = HashSet::new();
        for (j, sub) in t.subtasks.iter().enumerate() {
            let loc = format!("tasks[{i}].subtasks[{j}]");
            if !listed.insert(sub.as_str()) {
                r.error(DuplicateSubtask, &loc, format!("`{sub}` listed twice under `{}`", t.id));
                continue;
            }
            if !task_index.contains_key(sub.as_str()) {
                r.error(UnknownSubtask, &loc, format!("`{sub}` is not a task"));
                continue;
            }
            parents.entry(sub.as_str()).or_default().push(t.id.as_str());
        }
    }
    for (i, t) in model.tasks.iter().enumerate() {
        if let Some(ps) = parents.get(t.id.as_str()) {
            if ps.len() > 1 {
                r.error(
                    MultipleParents,
                    format!("tasks[{i}]"),
                    format!("`{}` is a subtask of {}", t.id, ps.join(", ")),
                );
            }
        }
    }

    for (i, t) in model.tasks.iter().enumerate() {
        if closes_cycle(model, &task_index, i) {
            r.error(Cycle, format!("tasks[{i}]"), format!("`{}` is its own descendant", t.id));
        }
    }

    let mut roots = HashSet::new();
    for (i, root) in model.root_task_ids.iter().enumerate() {
        let loc = format!("roots[{i}]");
        if !roots.insert(root.as_str()) {
            r.error(DuplicateRoot, &loc, format!("root `{root}` listed twice"));
        } else if !task_index.contains_key(root.as_str()) {
            r.error(UnknownRoot, &loc, format!("root `{root}` is not a task"));
        } else if let Some(ps) = parents.get(root.as_str()) {
            r.error(RootHasParent, &loc, format!("root `{root}` is a subtask of {}", ps.join(", ")));
        }
    }

    let mut reached = HashSet::new();
    let mut stack: Vec<&str> = model
        .root_task_ids
        .iter()
        .map(String::as_str)
        .filter(|id| task_index.contains_key(id))
        .collect();
    while let Some(id) = stack.pop() {
        if reached.insert(id) {
            let t = &model.tasks[task_index[id]];
            stack.extend(
                t.subtasks
                    .iter()
                    .map(String::as_str)
                    .filter(|s| task_index.contains_key(s)),
            );
        }
    }
    for (i, t) in model.tasks.iter().enumerate() {
        if !reached.contains(t.id.as_str()) {
            r.error(UnreachableTask, format!("tasks[{i}]"), format!("`{}` is not reachable from any root", t.id));
        }
    }

    let mut method_ids = HashSet::new();
    for (i, m) in model.methods.iter().enumerate() {
        let loc = format!("methods[{i}]");
        if !is_slug(&m.id) {
            r.error(InvalidId, &loc, format!("`{}` is not a lowercase hyphenated slug", m.id));
        }
        if !method_ids.insert(m.id.as_str()) {
            r.error(DuplicateId, &loc, format!("method id `{}` declared twice", m.id));
        }
        if m.transitions.is_empty() {
            r.error(MethodNoTransitions, &loc, format!("method `{}` has no transitions", m.id));
        }
        for (j, tr) in m.transitions.iter().enumerate() {
            if !task_index.contains_key(tr.subtask.as_str()) {
                r.error(
                    MethodUnknownSubtask,
                    format!("{loc}.transitions[{j}]"),
                    format!("`{}` is not a task", tr.subtask),
                );
            }
        }
    }

    for key in model.unknown_keys() {
        r.warnings.push(Issue {
            code: UnknownKey,
            location: key.clone(),
            message: format!("unknown key `{key}` ignored"),
        });
    }
    r
}

/// True if task `start` can reach itself through subtask links.
fn closes_cycle(model: &TmkModel, index: &HashMap<&str, usize>, start: usize) -> bool {
    let mut seen = HashSet::new();
    let mut stack: Vec<usize> = model.tasks[start]
        .subtasks
        .iter()
        .filter_map(|s| index.get(s.as_str()).copied())
        .collect();
    while let Some(i) = stack.pop() {
        if i == start {
            return true;
        }
        if seen.insert(i) {
            stack.extend(
                model.tasks[i]
                    .subtasks
                    .iter()
                    .filter_map(|s| index.get(s.as_str()).copied()),
            );
        }
    }
    false
}
