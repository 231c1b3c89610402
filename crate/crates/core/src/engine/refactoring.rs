//! Externally supplied refactoring line ranges.
//!
//! Input is comma-separated text, one range per record:
//!
//! ```text
//! # commit_hash,file_path,start_line,end_line
//! 3f2a9c1,src/Foo.java,10,24
//! ```
//!
//! Lines are 1-based and inclusive. A header row and `#` comment lines are
//! ignored. Hashes may be abbreviated; matching accepts either side being a
//! prefix of the other.

use std::collections::BTreeMap;
use std::path::Path;

use crate::repo::{CommitId, RepoSnapshot};

use super::EngineError;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefactoringRanges {
    ranges: BTreeMap<(CommitId, String), Vec<(u32, u32)>>,
}

impl RefactoringRanges {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, commit: CommitId, file: impl Into<String>, start: u32, end: u32) {
        self.ranges
            .entry((commit, file.into()))
            .or_default()
            .push((start.min(end), start.max(end)));
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ranges.values().map(Vec::len).sum()
    }

    pub fn parse(text: &str) -> Result<Self, EngineError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut out = Self::new();
        for (i, record) in reader.records().enumerate() {
            let err = |message: String| EngineError::RefactoringFormat { record: i + 1, message };
            let record = record.map_err(|e| err(e.to_string()))?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            if record.len() != 4 {
                return Err(err(format!("expected 4 fields, found {}", record.len())));
            }
            if i == 0 && record[2].parse::<u32>().is_err() {
                continue; // header row
            }
            let commit = CommitId::parse(&record[0]).map_err(|e| err(e.to_string()))?;
            let line = |k: usize| {
                record[k]
                    .parse::<u32>()
                    .ok()
                    .filter(|n| *n >= 1)
                    .ok_or_else(|| err(format!("bad line number {:?}", &record[k])))
            };
            let (start, end) = (line(2)?, line(3)?);
            if start > end {
                return Err(err(format!("start {start} after end {end}")));
            }
            out.insert(commit, &record[1], start, end);
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EngineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| EngineError::RefactoringFormat {
            record: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Whether line `line` of `file` as of `commit` lies in a refactoring range.
    pub fn covers(&self, commit: &CommitId, file: &str, line: u32) -> bool {
        self.ranges.iter().any(|((c, f), spans)| {
            f == file
                && (c.abbreviates(commit) || commit.abbreviates(c))
                && spans.iter().any(|(s, e)| (*s..=*e).contains(&line))
        })
    }

    /// Expands abbreviated hashes against `repo` and checks every range
    /// against the file length at its commit.
    pub fn resolve(&self, repo: &RepoSnapshot) -> Result<Self, EngineError> {
        let mut out = Self::new();
        for ((commit, file), spans) in &self.ranges {
            let full = repo.resolve(commit.as_str())?;
            let content = repo
                .file_content(&full, file)?
                .ok_or_else(|| EngineError::RefactoringOutOfBounds {
                    commit: full.clone(),
                    file: file.clone(),
                    line: 0,
                    len: 0,
                })?;
            let len = content.lines().count() as u32;
            for (s, e) in spans {
                if *e > len {
                    return Err(EngineError::RefactoringOutOfBounds {
                        commit: full.clone(),
                        file: file.clone(),
                        line: *e,
                        len,
                    });
                }
                out.insert(full.clone(), file.clone(), *s, *e);
            }
        }
        Ok(out)
    }
}
