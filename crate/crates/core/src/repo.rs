//! Read-only access to on-disk git histories.
//!
//! [`RepoSnapshot`] wraps a libgit2 repository handle behind a mutex so a
//! single snapshot can be shared between threads. Every query resolves
//! abbreviated hashes eagerly and reports ambiguity as an error.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Mutex, MutexGuard};

use chrono::{DateTime, TimeZone, Utc};
use git2::{BlameOptions, Delta, DiffFindOptions, DiffOptions, ErrorCode, Oid, Patch, Repository, Tree};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Minimum similarity (percent) for a delete/add pair to count as a rename.
pub const RENAME_THRESHOLD: u16 = 50;

#[derive(Debug, thiserror::Error)]
pub enum RepoError {
    #[error("{0} is not a git repository")]
    NotARepository(PathBuf),
    #[error("corrupt object store in {path}: {message}")]
    CorruptObjectStore { path: PathBuf, message: String },
    #[error("invalid commit id {0:?}: expected 6-40 lowercase hex characters")]
    InvalidCommitId(String),
    #[error("unknown commit {0}")]
    UnknownCommit(String),
    #[error("abbreviated commit {0} is ambiguous")]
    AmbiguousCommit(String),
    #[error("{parent} is not a parent of {commit}")]
    NotAParent { commit: CommitId, parent: CommitId },
    #[error("{file} does not exist at {revision}")]
    FileAbsent { revision: CommitId, file: String },
    #[error("line {line} out of range for {file} at {revision} ({len} lines)")]
    LineOutOfRange {
        revision: CommitId,
        file: String,
        line: u32,
        len: u32,
    },
    #[error(transparent)]
    Git(#[from] git2::Error),
}

pub type Result<T, E = RepoError> = std::result::Result<T, E>;

/// A lowercase hexadecimal commit hash, full (40 chars) or abbreviated (6+).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CommitId(String);

impl CommitId {
    pub fn parse(s: &str) -> Result<Self> {
        if is_commit_hash(s) {
            Ok(Self(s.to_string()))
        } else {
            Err(RepoError::InvalidCommitId(s.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_full(&self) -> bool {
        self.0.len() == 40
    }

    /// True when one hash is a prefix of the other.
    pub fn abbreviates(&self, other: &CommitId) -> bool {
        self.0.starts_with(&other.0) || other.0.starts_with(&self.0)
    }

    pub fn short(&self) -> &str {
        &self.0[..self.0.len().min(7)]
    }

    fn from_oid(oid: Oid) -> Self {
        Self(oid.to_string())
    }
}

/// `[0-9a-f]{6,40}` anchored at both ends.
pub fn is_commit_hash(s: &str) -> bool {
    (6..=40).contains(&s.len()) && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

impl fmt::Display for CommitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for CommitId {
    type Err = RepoError;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl Serialize for CommitId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for CommitId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        CommitId::parse(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitMeta {
    pub id: CommitId,
    pub parents: Vec<CommitId>,
    pub author_time: DateTime<Utc>,
    pub committer_time: DateTime<Utc>,
    pub message: String,
}

impl CommitMeta {
    pub fn is_merge(&self) -> bool {
        self.parents.len() >= 2
    }

    pub fn is_root(&self) -> bool {
        self.parents.is_empty()
    }
}

/// Changed lines of one file region between a commit and one of its parents.
///
/// `removed` line numbers refer to the parent (pre-image), `added` line
/// numbers to the commit (post-image). Deltas without textual hunks (pure
/// renames, mode changes, binary files, empty files) are reported as a single
/// hunk with no lines so path-level changes stay visible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffHunk {
    pub file_pre: Option<String>,
    pub file_post: Option<String>,
    pub removed: Vec<(u32, String)>,
    pub added: Vec<(u32, String)>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub binary: bool,
}

impl DiffHunk {
    pub fn is_rename(&self) -> bool {
        matches!((&self.file_pre, &self.file_post), (Some(a), Some(b)) if a != b)
    }

    pub fn is_addition(&self) -> bool {
        self.file_pre.is_none()
    }

    pub fn is_deletion(&self) -> bool {
        self.file_post.is_none()
    }

    /// No textual content changed in this hunk.
    pub fn is_empty(&self) -> bool {
        self.removed.is_empty() && self.added.is_empty() && !self.binary
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlameRecord {
    pub file: String,
    pub line_no: u32,
    pub origin: CommitId,
    /// Path of the file at `origin`; differs from `file` across renames.
    pub origin_file: String,
    pub origin_line_no: u32,
}

/// Read-only view of one repository.
pub struct RepoSnapshot {
    path: PathBuf,
    repo: Mutex<Repository>,
}

impl fmt::Debug for RepoSnapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RepoSnapshot").field("path", &self.path).finish()
    }
}

/// Opens the repository at `path` (no upward discovery).
pub fn open_repo(path: impl AsRef<Path>) -> Result<RepoSnapshot> {
    RepoSnapshot::open(path)
}

impl RepoSnapshot {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let repo = Repository::open(&path).map_err(|e| match e.code() {
            ErrorCode::NotFound => RepoError::NotARepository(path.clone()),
            _ => RepoError::CorruptObjectStore {
                path: path.clone(),
                message: e.message().to_string(),
            },
        })?;
        repo.odb().map_err(|e| RepoError::CorruptObjectStore {
            path: path.clone(),
            message: e.message().to_string(),
        })?;
        Ok(Self {
            path,
            repo: Mutex::new(repo),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn lock(&self) -> MutexGuard<'_, Repository> {
        self.repo.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    /// Resolves a possibly abbreviated hash to the full hash of a commit.
    pub fn resolve(&self, rev: &str) -> Result<CommitId> {
        let id = CommitId::parse(rev)?;
        let repo = self.lock();
        resolve_oid(&repo, &id).map(CommitId::from_oid)
    }

    pub fn commit_meta(&self, commit: &CommitId) -> Result<CommitMeta> {
        let repo = self.lock();
        let oid = resolve_oid(&repo, commit)?;
        let c = repo.find_commit(oid)?;
        let meta = CommitMeta {
            id: CommitId::from_oid(oid),
            parents: c.parent_ids().map(CommitId::from_oid).collect(),
            author_time: to_utc(c.author().when()),
            committer_time: to_utc(c.committer().when()),
            message: String::from_utf8_lossy(c.message_bytes()).into_owned(),
        };
        Ok(meta)
    }

    pub fn is_merge(&self, commit: &CommitId) -> Result<bool> {
        Ok(self.commit_meta(commit)?.is_merge())
    }

    pub fn first_parent(&self, commit: &CommitId) -> Result<Option<CommitId>> {
        Ok(self.commit_meta(commit)?.parents.into_iter().next())
    }

    /// Diff of `commit` against `parent`, which must be one of its parents.
    pub fn diff_against_parent(&self, commit: &CommitId, parent: &CommitId) -> Result<Vec<DiffHunk>> {
        let repo = self.lock();
        let oid = resolve_oid(&repo, commit)?;
        let parent_oid = resolve_oid(&repo, parent)?;
        let c = repo.find_commit(oid)?;
        if !c.parent_ids().any(|p| p == parent_oid) {
            return Err(RepoError::NotAParent {
                commit: CommitId::from_oid(oid),
                parent: CommitId::from_oid(parent_oid),
            });
        }
        let old = repo.find_commit(parent_oid)?.tree()?;
        let new = c.tree()?;
        let hunks = diff_trees(&repo, Some(&old), &new)?;
        Ok(hunks)
    }

    /// Diff against the first parent, or against the empty tree for a root.
    pub fn diff_first_parent(&self, commit: &CommitId) -> Result<Vec<DiffHunk>> {
        let repo = self.lock();
        let oid = resolve_oid(&repo, commit)?;
        let c = repo.find_commit(oid)?;
        let old = match c.parent_ids().next() {
            Some(p) => Some(repo.find_commit(p)?.tree()?),
            None => None,
        };
        let new = c.tree()?;
        let hunks = diff_trees(&repo, old.as_ref(), &new)?;
        Ok(hunks)
    }

    /// Text of `file` at `revision`, or `None` if the path does not exist.
    pub fn file_content(&self, revision: &CommitId, file: &str) -> Result<Option<String>> {
        let repo = self.lock();
        let oid = resolve_oid(&repo, revision)?;
        let tree = repo.find_commit(oid)?.tree()?;
        let entry = match tree.get_path(Path::new(file)) {
            Ok(entry) => entry,
            Err(e) if e.code() == ErrorCode::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let object = entry.to_object(&repo)?;
        match object.as_blob() {
            Some(blob) => Ok(Some(String::from_utf8_lossy(blob.content()).into_owned())),
            None => Ok(None),
        }
    }

    /// Attributes each requested line of `file` at `revision` to the commit
    /// that last changed it, following renames.
    pub fn blame(&self, revision: &CommitId, file: &str, lines: &BTreeSet<u32>) -> Result<Vec<BlameRecord>> {
        let full = self.resolve(revision.as_str())?;
        let content = self.file_content(&full, file)?.ok_or_else(|| RepoError::FileAbsent {
            revision: full.clone(),
            file: file.to_string(),
        })?;
        let len = content.lines().count() as u32;
        if let Some(&bad) = lines.iter().find(|l| **l == 0 || **l > len) {
            return Err(RepoError::LineOutOfRange {
                revision: full,
                file: file.to_string(),
                line: bad,
                len,
            });
        }
        let (Some(&min), Some(&max)) = (lines.first(), lines.last()) else {
            return Ok(Vec::new());
        };

        let repo = self.lock();
        let mut opts = BlameOptions::new();
        opts.newest_commit(Oid::from_str(full.as_str())?)
            .min_line(min as usize)
            .max_line(max as usize);
        let blame = repo.blame_file(Path::new(file), Some(&mut opts))?;
        let mut records = Vec::with_capacity(lines.len());
        for &line in lines {
            let hunk = blame.get_line(line as usize).ok_or_else(|| {
                RepoError::Git(git2::Error::from_str(&format!(
                    "blame produced no hunk for {file}:{line}"
                )))
            })?;
            let offset = line - hunk.final_start_line() as u32;
            let origin_file = hunk
                .path()
                .map(|p| p.to_string_lossy().into_owned())
                .unwrap_or_else(|| file.to_string());
            records.push(BlameRecord {
                file: file.to_string(),
                line_no: line,
                origin: CommitId::from_oid(hunk.final_commit_id()),
                origin_file,
                origin_line_no: hunk.orig_start_line() as u32 + offset,
            });
        }
        Ok(records)
    }
}

fn resolve_oid(repo: &Repository, id: &CommitId) -> Result<Oid> {
    let found = if id.is_full() {
        let oid = Oid::from_str(id.as_str())?;
        repo.find_commit(oid).map(|c| c.id())
    } else {
        repo.find_commit_by_prefix(id.as_str()).map(|c| c.id())
    };
    found.map_err(|e| match e.code() {
        ErrorCode::Ambiguous => RepoError::AmbiguousCommit(id.to_string()),
        ErrorCode::NotFound | ErrorCode::InvalidSpec => RepoError::UnknownCommit(id.to_string()),
        _ if e.class() == git2::ErrorClass::Invalid || e.class() == git2::ErrorClass::Odb => {
            RepoError::UnknownCommit(id.to_string())
        }
        _ => RepoError::Git(e),
    })
}

fn to_utc(time: git2::Time) -> DateTime<Utc> {
    Utc.timestamp_opt(time.seconds(), 0)
        .single()
        .unwrap_or(DateTime::<Utc>::UNIX_EPOCH)
}

fn path_string(path: Option<&Path>) -> Option<String> {
    path.map(|p| p.to_string_lossy().into_owned())
}

fn diff_trees(repo: &Repository, old: Option<&Tree<'_>>, new: &Tree<'_>) -> Result<Vec<DiffHunk>> {
    let mut opts = DiffOptions::new();
    opts.context_lines(0).interhunk_lines(0).ignore_submodules(true);
    let mut diff = repo.diff_tree_to_tree(old, Some(new), Some(&mut opts))?;
    let mut find = DiffFindOptions::new();
    find.renames(true).rename_threshold(RENAME_THRESHOLD);
    diff.find_similar(Some(&mut find))?;

    let mut hunks = Vec::new();
    for idx in 0..diff.deltas().len() {
        let Some(delta) = diff.get_delta(idx) else {
            continue;
        };
        let (file_pre, file_post) = match delta.status() {
            Delta::Added | Delta::Copied => (None, path_string(delta.new_file().path())),
            Delta::Deleted => (path_string(delta.old_file().path()), None),
            Delta::Modified | Delta::Renamed | Delta::Typechange => (
                path_string(delta.old_file().path()),
                path_string(delta.new_file().path()),
            ),
            _ => continue,
        };
        let empty = |binary: bool| DiffHunk {
            file_pre: file_pre.clone(),
            file_post: file_post.clone(),
            removed: Vec::new(),
            added: Vec::new(),
            binary,
        };
        if delta.flags().is_binary() {
            hunks.push(empty(true));
            continue;
        }
        let Some(patch) = Patch::from_diff(&diff, idx)? else {
            hunks.push(empty(true));
            continue;
        };
        if patch.num_hunks() == 0 {
            hunks.push(empty(false));
            continue;
        }
        for h in 0..patch.num_hunks() {
            let mut hunk = empty(false);
            for l in 0..patch.num_lines_in_hunk(h)? {
                let line = patch.line_in_hunk(h, l)?;
                let text = line_text(line.content());
                match line.origin() {
                    '-' => {
                        if let Some(n) = line.old_lineno() {
                            hunk.removed.push((n, text));
                        }
                    }
                    '+' => {
                        if let Some(n) = line.new_lineno() {
                            hunk.added.push((n, text));
                        }
                    }
                    _ => {}
                }
            }
            hunks.push(hunk);
        }
    }
    Ok(hunks)
}

fn line_text(raw: &[u8]) -> String {
    let raw = raw.strip_suffix(b"\n").unwrap_or(raw);
    String::from_utf8_lossy(raw).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use szz_testkit::ScriptedRepo;

    fn id(oid: Oid) -> CommitId {
        CommitId::parse(&oid.to_string()).unwrap()
    }

    fn lines(ls: &[u32]) -> BTreeSet<u32> {
        ls.iter().copied().collect()
    }

    #[test]
    fn commit_id_pattern() {
        assert!(CommitId::parse("a8a97bd").is_ok());
        assert!(CommitId::parse("cafe").is_err());
        assert!(CommitId::parse("A8A97BD").is_err());
        assert!(CommitId::parse(&"a".repeat(41)).is_err());
        assert!(CommitId::parse("e58f75g").is_err());
        let full = CommitId::parse(&"ab".repeat(20)).unwrap();
        assert!(full.is_full());
        assert!(full.abbreviates(&CommitId::parse("ababab").unwrap()));
    }

    #[test]
    fn open_rejects_plain_directory() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(open_repo(dir.path()), Err(RepoError::NotARepository(_))));
    }

    #[test]
    fn open_and_resolve_abbreviations() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ScriptedRepo::init(dir.path());
        s.write("a.txt", "one\n");
        let c1 = s.commit("one", 1_000);
        let repo = open_repo(dir.path()).unwrap();
        let short = &c1.to_string()[..7];
        assert_eq!(repo.resolve(short).unwrap(), id(c1));
        assert!(matches!(repo.resolve("0000000"), Err(RepoError::UnknownCommit(_))));
    }

    #[test]
    fn ambiguous_prefix_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let raw = Repository::init(dir.path()).unwrap();
        let mut seen = std::collections::HashSet::new();
        let mut clash = None;
        for i in 0..200_000u32 {
            let oid = raw.blob(format!("blob {i}\n").as_bytes()).unwrap();
            let prefix = oid.to_string()[..6].to_string();
            if !seen.insert(prefix.clone()) {
                clash = Some(prefix);
                break;
            }
        }
        let clash = clash.expect("no 6-char collision found");
        let repo = open_repo(dir.path()).unwrap();
        assert!(matches!(repo.resolve(&clash), Err(RepoError::AmbiguousCommit(_))));
    }

    #[test]
    fn merge_detection() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ScriptedRepo::init(dir.path());
        s.write("a.txt", "a\n");
        let root = s.commit("root", 1_000);
        s.write("b.txt", "b\n");
        let side = s.commit("side", 2_000);
        s.checkout(root);
        s.write("d.txt", "d\n");
        let third = s.commit("third", 2_500);
        s.checkout(root);
        s.write("c.txt", "c\n");
        s.commit("main", 3_000);
        s.write("b.txt", "b\n");
        let merge = s.merge("merge", 4_000, &[side]);
        s.write("d.txt", "d\n");
        let octopus = s.merge("octopus", 5_000, &[side, third]);

        let repo = open_repo(dir.path()).unwrap();
        assert!(!repo.is_merge(&id(root)).unwrap());
        assert!(repo.is_merge(&id(merge)).unwrap());
        assert!(repo.is_merge(&id(octopus)).unwrap());
        assert_eq!(repo.commit_meta(&id(octopus)).unwrap().parents.len(), 3);
        assert!(matches!(
            repo.is_merge(&CommitId::parse("abcdef0").unwrap()),
            Err(RepoError::UnknownCommit(_))
        ));
    }

    #[test]
    fn diff_added_file_and_modified_line() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ScriptedRepo::init(dir.path());
        s.write("seed.txt", "x\n");
        let c0 = s.commit("seed", 500);
        s.write("a.c", "l1\nl2\nl3\n");
        let c1 = s.commit("add", 1_000);
        s.write("a.c", "l1\nl2\nl3\nl4\nold5\nl6\n");
        let c2 = s.commit("grow", 2_000);
        s.replace_line("a.c", 5, "new5");
        let c3 = s.commit("edit", 3_000);
        let repo = open_repo(dir.path()).unwrap();

        let hunks = repo.diff_against_parent(&id(c1), &id(c0)).unwrap();
        assert_eq!(hunks.len(), 1);
        assert!(hunks[0].removed.is_empty());
        assert_eq!(hunks[0].added.len(), 3);
        assert!(hunks[0].is_addition());

        let hunks = repo.diff_against_parent(&id(c3), &id(c2)).unwrap();
        assert_eq!(hunks.len(), 1);
        assert_eq!(hunks[0].removed, vec![(5, "old5".to_string())]);
        assert_eq!(hunks[0].added, vec![(5, "new5".to_string())]);

        assert!(matches!(
            repo.diff_against_parent(&id(c3), &id(c1)),
            Err(RepoError::NotAParent { .. })
        ));
    }

    #[test]
    fn whitespace_is_preserved_in_diffs() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ScriptedRepo::init(dir.path());
        s.write("a.c", "x=1;\n");
        let c1 = s.commit("a", 1_000);
        s.write("a.c", "x = 1;  \n");
        let c2 = s.commit("b", 2_000);
        let repo = open_repo(dir.path()).unwrap();
        let hunks = repo.diff_against_parent(&id(c2), &id(c1)).unwrap();
        assert_eq!(hunks[0].removed[0].1, "x=1;");
        assert_eq!(hunks[0].added[0].1, "x = 1;  ");
    }

    #[test]
    fn rename_with_edit_is_reported_as_path_pair() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ScriptedRepo::init(dir.path());
        let body: Vec<String> = (1..=10).map(|i| format!("line {i}")).collect();
        s.write("old.c", &szz_testkit::join_lines(&body));
        let c1 = s.commit("add", 1_000);
        s.rename("old.c", "new.c").replace_line("new.c", 3, "line three");
        let c2 = s.commit("rename+edit", 2_000);
        let repo = open_repo(dir.path()).unwrap();
        let hunks = repo.diff_against_parent(&id(c2), &id(c1)).unwrap();
        // replay: the script renamed old.c -> new.c and rewrote line 3
        assert_eq!(hunks.len(), 1);
        assert!(hunks[0].is_rename());
        assert_eq!(hunks[0].file_pre.as_deref(), Some("old.c"));
        assert_eq!(hunks[0].file_post.as_deref(), Some("new.c"));
        assert_eq!(hunks[0].removed, vec![(3, "line 3".to_string())]);
        assert_eq!(hunks[0].added, vec![(3, "line three".to_string())]);
    }

    #[test]
    fn dissimilar_rename_is_add_plus_delete() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ScriptedRepo::init(dir.path());
        s.write("old.c", "a\nb\nc\nd\n");
        let c1 = s.commit("add", 1_000);
        s.remove("old.c").write("new.c", "w\nx\ny\nz\n");
        let c2 = s.commit("replace", 2_000);
        let repo = open_repo(dir.path()).unwrap();
        let hunks = repo.diff_against_parent(&id(c2), &id(c1)).unwrap();
        assert_eq!(hunks.len(), 2);
        assert!(hunks.iter().all(|h| !h.is_rename()));
    }

    #[test]
    fn mode_change_is_an_empty_hunk() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ScriptedRepo::init(dir.path());
        s.write("run.sh", "echo hi\n");
        let c1 = s.commit("add", 1_000);
        s.set_executable("run.sh", true);
        let c2 = s.commit("chmod", 2_000);
        let repo = open_repo(dir.path()).unwrap();
        let hunks = repo.diff_against_parent(&id(c2), &id(c1)).unwrap();
        assert_eq!(hunks.len(), 1);
        assert!(hunks[0].is_empty());
    }

    #[test]
    fn blame_single_and_two_commit_histories() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ScriptedRepo::init(dir.path());
        s.write("a.c", "one\ntwo\nthree\n");
        let c1 = s.commit("c1", 1_000);
        let repo = open_repo(dir.path()).unwrap();
        let recs = repo.blame(&id(c1), "a.c", &lines(&[1, 2, 3])).unwrap();
        assert!(recs.iter().all(|r| r.origin == id(c1)));

        s.replace_line("a.c", 1, "ONE");
        let c2 = s.commit("c2", 2_000);
        let repo = open_repo(dir.path()).unwrap();
        let recs = repo.blame(&id(c2), "a.c", &lines(&[1, 2])).unwrap();
        assert_eq!(recs[0].origin, id(c2));
        assert_eq!(recs[1].origin, id(c1));
        assert_eq!(recs[1].origin_line_no, 2);
    }

    #[test]
    fn blame_follows_renames() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ScriptedRepo::init(dir.path());
        let body: Vec<String> = (1..=8).map(|i| format!("statement {i};")).collect();
        s.write("src/a.c", &szz_testkit::join_lines(&body));
        let c1 = s.commit("c1", 1_000);
        s.rename("src/a.c", "lib/b.c");
        s.commit("c2 rename", 2_000);
        s.replace_line("lib/b.c", 3, "statement three;");
        let c3 = s.commit("c3 edit", 3_000);
        let repo = open_repo(dir.path()).unwrap();
        let recs = repo.blame(&id(c3), "lib/b.c", &lines(&[3, 6])).unwrap();
        assert_eq!(recs[0].origin, id(c3));
        assert_eq!(recs[1].origin, id(c1));
        assert_eq!(recs[1].origin_file, "src/a.c");
        assert_eq!(recs[1].origin_line_no, 6);
    }

    #[test]
    fn blame_errors() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ScriptedRepo::init(dir.path());
        s.write("a.c", "one\n");
        let c1 = s.commit("c1", 1_000);
        let repo = open_repo(dir.path()).unwrap();
        assert!(matches!(
            repo.blame(&id(c1), "missing.c", &lines(&[1])),
            Err(RepoError::FileAbsent { .. })
        ));
        assert!(matches!(
            repo.blame(&id(c1), "a.c", &lines(&[2])),
            Err(RepoError::LineOutOfRange { line: 2, len: 1, .. })
        ));
        assert!(repo.blame(&id(c1), "a.c", &BTreeSet::new()).unwrap().is_empty());
    }

    #[test]
    fn blame_closure_on_scripted_history() {
        // every blamed origin line must carry the same text as the queried line
        let dir = tempfile::tempdir().unwrap();
        let mut s = ScriptedRepo::init(dir.path());
        let body: Vec<String> = (1..=12).map(|i| format!("v{i} = {i};")).collect();
        s.write("m.py", &szz_testkit::join_lines(&body));
        s.commit("c1", 1_000);
        s.insert_line("m.py", 4, "inserted = 0;");
        s.commit("c2", 2_000);
        s.replace_line("m.py", 9, "v8 = 80;");
        s.rename("m.py", "n.py");
        s.commit("c3", 3_000);
        s.insert_line("n.py", 1, "head = 1;");
        let c4 = s.commit("c4", 4_000);
        let repo = open_repo(dir.path()).unwrap();
        let text = repo.file_content(&id(c4), "n.py").unwrap().unwrap();
        let all: BTreeSet<u32> = (1..=text.lines().count() as u32).collect();
        for rec in repo.blame(&id(c4), "n.py", &all).unwrap() {
            let origin_text = repo.file_content(&rec.origin, &rec.origin_file).unwrap().unwrap();
            assert_eq!(
                origin_text.lines().nth(rec.origin_line_no as usize - 1),
                text.lines().nth(rec.line_no as usize - 1),
                "{rec:?}"
            );
        }
    }

    #[test]
    fn removed_lines_are_blameable_at_parent() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ScriptedRepo::init(dir.path());
        s.write("a.c", "a\nb\nc\nd\n");
        s.commit("c1", 1_000);
        s.replace_line("a.c", 2, "B").replace_line("a.c", 4, "D");
        let p = s.commit("c2", 2_000);
        s.replace_line("a.c", 2, "bb").replace_line("a.c", 3, "cc");
        let c = s.commit("c3", 3_000);
        let repo = open_repo(dir.path()).unwrap();
        for hunk in repo.diff_against_parent(&id(c), &id(p)).unwrap() {
            let file = hunk.file_pre.unwrap();
            let ls: BTreeSet<u32> = hunk.removed.iter().map(|(n, _)| *n).collect();
            assert_eq!(repo.blame(&id(p), &file, &ls).unwrap().len(), ls.len());
        }
    }

    #[test]
    fn snapshot_is_shareable_across_threads() {
        fn assert_sync<T: Send + Sync>() {}
        assert_sync::<RepoSnapshot>();
    }
}
