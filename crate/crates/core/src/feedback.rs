//! Append-only feedback log.
//!
//! Two JSON-lines files live side by side: the feedback log itself and a
//! reply log of every message id handed out. Both are reloaded on open.
//! Appends go through one mutex; each line is flushed before the call
//! returns.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::dialogue::{AgentReply, ReplyKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Helpful {
    Yes,
    No,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub message_id: String,
    pub session_id: String,
    pub question: String,
    pub reply_kind: ReplyKind,
    pub helpful: Helpful,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct IssuedReply {
    message_id: String,
    session_id: String,
    question: String,
    reply_kind: ReplyKind,
    timestamp: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum FeedbackError {
    #[error("UNKNOWN_MESSAGE: no reply with id `{0}` was issued")]
    UnknownMessage(String),
    #[error("feedback store I/O: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt line {line} in {path}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

struct Inner {
    feedback: File,
    replies: File,
    issued: HashMap<String, IssuedReply>,
    latest: HashMap<(String, String), Helpful>,
}

pub struct FeedbackStore {
    path: PathBuf,
    inner: Mutex<Inner>,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, FeedbackError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| FeedbackError::Corrupt {
            path: path.to_owned(),
            line: n + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

fn append_line<T: Serialize>(file: &mut File, value: &T) -> io::Result<()> {
    let mut line = serde_json::to_vec(value).map_err(io::Error::other)?;
    line.push(b'\n');
    file.write_all(&line)?;
    file.flush()
}

impl FeedbackStore {
    /// Opens (creating if needed) the feedback log at `path` and its reply
    /// log at `path` with a `.replies.jsonl` extension.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, FeedbackError> {
        let path = path.into();
        let replies_path = Self::replies_path_for(&path);
        let issued = read_lines::<IssuedReply>(&replies_path)?
            .into_iter()
            .map(|r| (r.message_id.clone(), r))
            .collect();
        let latest = read_lines::<FeedbackRecord>(&path)?
            .into_iter()
            .map(|r| ((r.message_id, r.session_id), r.helpful))
            .collect();
        let open = |p: &Path| OpenOptions::new().create(true).append(true).open(p);
        let inner = Inner {
            feedback: open(&path)?,
            replies: open(&replies_path)?,
            issued,
            latest,
        };
        Ok(FeedbackStore {
            path,
            inner: Mutex::new(inner),
        })
    }

    pub fn replies_path_for(path: &Path) -> PathBuf {
        path.with_extension("replies.jsonl")
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Records a reply as issued. Feedback is only accepted for issued replies.
    pub fn register_reply(&self, reply: &AgentReply, question: &str, session_id: &str) -> Result<(), FeedbackError> {
        let issued = IssuedReply {
            message_id: reply.message_id.clone(),
            session_id: session_id.to_owned(),
            question: question.to_owned(),
            reply_kind: reply.kind,
            timestamp: now(),
        };
        let mut inner = self.inner.lock().expect("feedback lock poisoned");
        append_line(&mut inner.replies, &issued)?;
        inner.issued.insert(issued.message_id.clone(), issued);
        Ok(())
    }

    /// Appends a feedback record. Repeated feedback for the same
    /// (message, session) is appended too; the latest value wins.
    pub fn record_feedback(
        &self,
        message_id: &str,
        session_id: &str,
        helpful: Helpful,
    ) -> Result<FeedbackRecord, FeedbackError> {
        let mut inner = self.inner.lock().expect("feedback lock poisoned");
        let issued = inner
            .issued
            .get(message_id)
            .ok_or_else(|| FeedbackError::UnknownMessage(message_id.to_owned()))?;
        let record = FeedbackRecord {
            message_id: message_id.to_owned(),
            session_id: session_id.to_owned(),
            question: issued.question.clone(),
            reply_kind: issued.reply_kind,
            helpful,
            timestamp: now(),
        };
        append_line(&mut inner.feedback, &record)?;
        inner
            .latest
            .insert((record.message_id.clone(), record.session_id.clone()), helpful);
        Ok(record)
    }

    pub fn latest(&self, message_id: &str, session_id: &str) -> Option<Helpful> {
        let inner = self.inner.lock().expect("feedback lock poisoned");
        inner
            .latest
            .get(&(message_id.to_owned(), session_id.to_owned()))
            .copied()
    }

    /// All feedback records in append order, read back from disk.
    pub fn records(&self) -> Result<Vec<FeedbackRecord>, FeedbackError> {
        let _guard = self.inner.lock().expect("feedback lock poisoned");
        read_lines(&self.path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use std::sync::OnceLock;

    fn engine() -> &'static crate::engine::Snapshot {
        static S: OnceLock<crate::engine::Snapshot> = OnceLock::new();
        S.get_or_init(|| demo::snapshot().0)
    }

    #[test]
    fn yes_on_answer_is_persisted() {
        let dir = tempfile::tempdir().unwrap();
        let store = FeedbackStore::open(dir.path().join("feedback.jsonl")).unwrap();
        let q = "What is an alignment score?";
        let reply = engine().answer(q, "s1");
        store.register_reply(&reply, q, "s1").unwrap();
        let rec = store.record_feedback(&reply.message_id, "s1", Helpful::Yes).unwrap();
        assert_eq!(rec.helpful, Helpful::Yes);
        assert_eq!(rec.reply_kind, ReplyKind::Answer);
        assert_eq!(store.records().unwrap(), [rec]);
    }

    #[test]
    fn unknown_message_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let store = FeedbackStore::open(dir.path().join("f.jsonl")).unwrap();
        assert!(matches!(
            store.record_feedback("invented", "s", Helpful::No),
            Err(FeedbackError::UnknownMessage(_))
        ));
        assert!(store.records().unwrap().is_empty());
    }

    #[test]
    fn no_feedback_no_record() {
        let dir = tempfile::tempdir().unwrap();
        let store = FeedbackStore::open(dir.path().join("f.jsonl")).unwrap();
        let reply = engine().answer("What is a cohort?", "s");
        store.register_reply(&reply, "What is a cohort?", "s").unwrap();
        assert!(store.records().unwrap().is_empty());
        assert_eq!(store.latest(&reply.message_id, "s"), None);
    }

    #[test]
    fn latest_wins_and_log_is_kept() {
        let dir = tempfile::tempdir().unwrap();
        let store = FeedbackStore::open(dir.path().join("f.jsonl")).unwrap();
        let reply = engine().answer("What is a cohort?", "s");
        store.register_reply(&reply, "What is a cohort?", "s").unwrap();
        store.record_feedback(&reply.message_id, "s", Helpful::No).unwrap();
        store.record_feedback(&reply.message_id, "s", Helpful::Yes).unwrap();
        assert_eq!(store.latest(&reply.message_id, "s"), Some(Helpful::Yes));
        assert_eq!(store.records().unwrap().len(), 2);
    }

    #[test]
    fn survives_restart_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.jsonl");
        let reply = engine().answer("What is a cohort?", "s");
        {
            let store = FeedbackStore::open(&path).unwrap();
            store.register_reply(&reply, "What is a cohort?", "s").unwrap();
            store.record_feedback(&reply.message_id, "s", Helpful::Yes).unwrap();
        }
        let before = std::fs::read(&path).unwrap();
        let store = FeedbackStore::open(&path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), before);
        assert_eq!(store.records().unwrap().len(), 1);
        // Replies issued before the restart still accept feedback.
        store.record_feedback(&reply.message_id, "s", Helpful::No).unwrap();
        assert!(std::fs::read(&path).unwrap().starts_with(&before));
    }
}
