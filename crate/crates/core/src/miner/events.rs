//! Commit-event input.
//!
//! Native format: one JSON object per line with `repo_full_name`, `sha` and
//! `message` (aliases `repo`, `commit`). Blank lines are skipped.
//!
//! GH Archive format: one event object per line; only `PushEvent`s are read,
//! yielding one record per entry of `payload.commits` with the repository
//! taken from `repo.name`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitEvent {
    #[serde(alias = "repo")]
    pub repo_full_name: String,
    #[serde(alias = "commit")]
    pub sha: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum EventError {
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn read_events<R: BufRead>(reader: R) -> Result<Vec<CommitEvent>, EventError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ev: CommitEvent = serde_json::from_str(&line).map_err(|e| EventError::Schema {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(ev);
    }
    Ok(out)
}

pub fn write_events<W: Write>(mut w: W, events: &[CommitEvent]) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct ArchiveEvent {
    #[serde(rename = "type")]
    kind: String,
    repo: Option<ArchiveRepo>,
    payload: Option<ArchivePayload>,
}

#[derive(Deserialize)]
struct ArchiveRepo {
    name: String,
}

#[derive(Deserialize)]
struct ArchivePayload {
    #[serde(default)]
    commits: Vec<ArchiveCommit>,
}

#[derive(Deserialize)]
struct ArchiveCommit {
    sha: String,
    message: String,
}

pub fn read_gharchive<R: BufRead>(reader: R) -> Result<Vec<CommitEvent>, EventError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| EventError::Schema { line: i + 1, message };
        let ev: ArchiveEvent = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        if ev.kind != "PushEvent" {
            continue;
        }
        let repo = ev.repo.ok_or_else(|| schema("PushEvent without repo".into()))?;
        let payload = ev.payload.ok_or_else(|| schema("PushEvent without payload".into()))?;
        out.extend(payload.commits.into_iter().map(|c| CommitEvent {
            repo_full_name: repo.name.clone(),
            sha: c.sha,
            message: c.message,
        }));
    }
    Ok(out)
}
