//! Line origin tracing, with optional re-tracing past formatting-only commits.

use std::collections::{BTreeMap, BTreeSet};

use crate::lang::tokenize;
use crate::repo::{BlameRecord, CommitId};

use super::{EngineError, FixLine, Session, TracedLine};

/// Where a traced line currently sits.
#[derive(Debug, Clone)]
pub(super) struct Hit {
    pub commit: CommitId,
    pub file: String,
    pub line: u32,
    pub depth: u32,
    pub unresolved_cosmetic: bool,
}

impl From<&BlameRecord> for Hit {
    fn from(r: &BlameRecord) -> Self {
        Hit {
            commit: r.origin.clone(),
            file: r.origin_file.clone(),
            line: r.origin_line_no,
            depth: 0,
            unresolved_cosmetic: false,
        }
    }
}

/// Blames every fix line at `revision`, one query per file.
pub(super) fn blame_lines(
    session: &Session<'_>,
    revision: &CommitId,
    lines: &[FixLine],
) -> Result<Vec<(FixLine, Hit)>, EngineError> {
    let mut by_file: BTreeMap<&str, BTreeSet<u32>> = BTreeMap::new();
    for l in lines {
        by_file.entry(&l.file).or_default().insert(l.line_no);
    }
    let mut hits: BTreeMap<(String, u32), Hit> = BTreeMap::new();
    for (file, numbers) in by_file {
        for record in session.repo().blame(revision, file, &numbers)? {
            hits.insert((record.file.clone(), record.line_no), Hit::from(&record));
        }
    }
    lines
        .iter()
        .map(|l| {
            let hit = hits
                .get(&(l.file.clone(), l.line_no))
                .cloned()
                .ok_or_else(|| EngineError::Internal(format!("no blame for {}:{}", l.file, l.line_no)))?;
            Ok((l.clone(), hit))
        })
        .collect()
}

/// Follows `hit` past cosmetic commits, at most `depth_limit` times.
pub(super) fn skip_cosmetic(session: &Session<'_>, mut hit: Hit, depth_limit: u32) -> Result<Hit, EngineError> {
    while session.is_cosmetic(&hit.commit)? {
        if hit.depth >= depth_limit {
            hit.unresolved_cosmetic = true;
            break;
        }
        let Some(parent) = session.repo().first_parent(&hit.commit)? else {
            break;
        };
        let (pre_file, pre_line) = map_to_parent(session, &hit.commit, &parent, &hit.file, hit.line)?;
        let numbers = BTreeSet::from([pre_line]);
        let record = session
            .repo()
            .blame(&parent, &pre_file, &numbers)?
            .into_iter()
            .next()
            .ok_or_else(|| EngineError::Internal(format!("no blame for {pre_file}:{pre_line}")))?;
        hit = Hit {
            depth: hit.depth + 1,
            ..Hit::from(&record)
        };
    }
    Ok(hit)
}

/// Maps a line of a cosmetic commit's post-image to its parent's pre-image.
///
/// The two file versions carry identical token streams, so the line holding
/// the k-th token after the change holds the k-th token before it.
fn map_to_parent(
    session: &Session<'_>,
    commit: &CommitId,
    parent: &CommitId,
    file: &str,
    line: u32,
) -> Result<(String, u32), EngineError> {
    let pre_file = session
        .repo()
        .diff_against_parent(commit, parent)?
        .into_iter()
        .find(|h| h.file_post.as_deref() == Some(file))
        .and_then(|h| h.file_pre)
        .unwrap_or_else(|| file.to_string());
    let post = session.repo().file_content(commit, file)?.unwrap_or_default();
    let pre = session.repo().file_content(parent, &pre_file)?.unwrap_or_default();

    let post_lines: Vec<&str> = post.lines().collect();
    let token_index = {
        let mut before = 0usize;
        let mut found = None;
        for (i, text) in post_lines.iter().enumerate() {
            let n = tokenize(text).len();
            if i + 1 >= line as usize && n > 0 {
                found = Some(before);
                break;
            }
            before += n;
        }
        found
    };
    let pre_len = pre.lines().count().max(1) as u32;
    let Some(k) = token_index else {
        return Ok((pre_file, line.min(pre_len)));
    };
    let mut seen = 0usize;
    for (i, text) in pre.lines().enumerate() {
        seen += tokenize(text).len();
        if seen > k {
            return Ok((pre_file, i as u32 + 1));
        }
    }
    Ok((pre_file, line.min(pre_len)))
}

pub(super) fn traced(fix_line: FixLine, hit: &Hit) -> TracedLine {
    TracedLine {
        fix_line,
        origin_file: hit.file.clone(),
        origin_line: hit.line,
        depth: hit.depth,
    }
}
