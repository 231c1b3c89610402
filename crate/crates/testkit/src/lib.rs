//! Deterministic, scripted git histories for tests.
//!
//! A [`ScriptedRepo`] keeps an in-memory snapshot of the working tree and
//! turns each [`ScriptedRepo::commit`] call into a real commit with fixed
//! author/committer timestamps, so two runs of the same script produce
//! byte-identical object databases.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use git2::{IndexEntry, IndexTime, Oid, Repository, Signature, Time};

pub mod random;
pub mod scenarios;

const REGULAR: u32 = 0o100644;
const EXECUTABLE: u32 = 0o100755;

#[derive(Debug, Clone, PartialEq, Eq)]
struct FileState {
    content: String,
    executable: bool,
}

pub struct ScriptedRepo {
    repo: Repository,
    files: BTreeMap<String, FileState>,
    head: Option<Oid>,
}

impl ScriptedRepo {
    /// Initialises an empty repository at `dir` (created if needed).
    pub fn init(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).expect("create fixture dir");
        let repo = Repository::init(dir).expect("git init");
        Self {
            repo,
            files: BTreeMap::new(),
            head: None,
        }
    }

    pub fn path(&self) -> PathBuf {
        self.repo.workdir().unwrap_or_else(|| self.repo.path()).to_path_buf()
    }

    pub fn head(&self) -> Option<Oid> {
        self.head
    }

    pub fn write(&mut self, path: &str, content: &str) -> &mut Self {
        let executable = self.files.get(path).map(|f| f.executable).unwrap_or(false);
        self.files.insert(
            path.to_string(),
            FileState {
                content: content.to_string(),
                executable,
            },
        );
        self
    }

    pub fn remove(&mut self, path: &str) -> &mut Self {
        self.files.remove(path).expect("remove: no such file");
        self
    }

    pub fn rename(&mut self, from: &str, to: &str) -> &mut Self {
        let state = self.files.remove(from).expect("rename: no such file");
        self.files.insert(to.to_string(), state);
        self
    }

    pub fn set_executable(&mut self, path: &str, executable: bool) -> &mut Self {
        self.files.get_mut(path).expect("chmod: no such file").executable = executable;
        self
    }

    pub fn content(&self, path: &str) -> Option<&str> {
        self.files.get(path).map(|f| f.content.as_str())
    }

    /// Replaces 1-based line `line_no` of `path`.
    pub fn replace_line(&mut self, path: &str, line_no: usize, new_line: &str) -> &mut Self {
        let content = self.content(path).expect("replace_line: no such file");
        let mut lines: Vec<&str> = content.lines().collect();
        lines[line_no - 1] = new_line;
        let rebuilt = join_lines(&lines);
        self.write(path, &rebuilt)
    }

    /// Inserts `new_line` so that it becomes line `line_no` (1-based).
    pub fn insert_line(&mut self, path: &str, line_no: usize, new_line: &str) -> &mut Self {
        let content = self.content(path).expect("insert_line: no such file");
        let mut lines: Vec<&str> = content.lines().collect();
        lines.insert(line_no - 1, new_line);
        let rebuilt = join_lines(&lines);
        self.write(path, &rebuilt)
    }

    /// Commits the current snapshot on top of the current head.
    pub fn commit(&mut self, message: &str, time: i64) -> Oid {
        let parents: Vec<Oid> = self.head.into_iter().collect();
        self.commit_with_parents(message, time, time, &parents)
    }

    /// Commits with distinct author and committer timestamps.
    pub fn commit_at(&mut self, message: &str, author_time: i64, committer_time: i64) -> Oid {
        let parents: Vec<Oid> = self.head.into_iter().collect();
        self.commit_with_parents(message, author_time, committer_time, &parents)
    }

    /// Records a merge of `others` into the current head using the current
    /// snapshot as the merge result.
    pub fn merge(&mut self, message: &str, time: i64, others: &[Oid]) -> Oid {
        let mut parents: Vec<Oid> = self.head.into_iter().collect();
        parents.extend_from_slice(others);
        self.commit_with_parents(message, time, time, &parents)
    }

    /// Moves the head to `commit` and reloads the snapshot from its tree.
    pub fn checkout(&mut self, commit: Oid) -> &mut Self {
        let tree = self
            .repo
            .find_commit(commit)
            .expect("checkout: unknown commit")
            .tree()
            .expect("tree");
        let mut files = BTreeMap::new();
        tree.walk(git2::TreeWalkMode::PreOrder, |root, entry| {
            if entry.kind() == Some(git2::ObjectType::Blob) {
                let path = format!("{}{}", root, entry.name().unwrap_or_default());
                let blob = self.repo.find_blob(entry.id()).expect("blob");
                files.insert(
                    path,
                    FileState {
                        content: String::from_utf8_lossy(blob.content()).into_owned(),
                        executable: entry.filemode() == EXECUTABLE as i32,
                    },
                );
            }
            git2::TreeWalkResult::Ok
        })
        .expect("walk tree");
        drop(tree);
        self.files = files;
        self.head = Some(commit);
        self
    }

    fn commit_with_parents(&mut self, message: &str, author_time: i64, committer_time: i64, parents: &[Oid]) -> Oid {
        let tree_id = self.write_tree();
        let tree = self.repo.find_tree(tree_id).expect("tree");
        let author =
            Signature::new("Fixture Author", "author@example.org", &Time::new(author_time, 0)).expect("signature");
        let committer = Signature::new(
            "Fixture Committer",
            "committer@example.org",
            &Time::new(committer_time, 0),
        )
        .expect("signature");
        let parent_commits: Vec<git2::Commit<'_>> = parents
            .iter()
            .map(|p| self.repo.find_commit(*p).expect("parent"))
            .collect();
        let parent_refs: Vec<&git2::Commit<'_>> = parent_commits.iter().collect();
        let oid = self
            .repo
            .commit(None, &author, &committer, message, &tree, &parent_refs)
            .expect("commit");
        self.repo
            .reference("refs/heads/main", oid, true, "fixture")
            .expect("update ref");
        self.repo.set_head("refs/heads/main").expect("set HEAD");
        self.head = Some(oid);
        oid
    }

    fn write_tree(&self) -> Oid {
        let mut index = self.repo.index().expect("index");
        index.clear().expect("clear index");
        for (path, state) in &self.files {
            let entry = IndexEntry {
                ctime: IndexTime::new(0, 0),
                mtime: IndexTime::new(0, 0),
                dev: 0,
                ino: 0,
                mode: if state.executable { EXECUTABLE } else { REGULAR },
                uid: 0,
                gid: 0,
                file_size: state.content.len() as u32,
                id: Oid::ZERO_SHA1,
                flags: 0,
                flags_extended: 0,
                path: path.as_bytes().to_vec(),
            };
            index
                .add_frombuffer(&entry, state.content.as_bytes())
                .expect("add to index");
        }
        index.write_tree().expect("write tree")
    }
}

/// Joins lines with `\n` and a trailing newline.
pub fn join_lines<S: AsRef<str>>(lines: &[S]) -> String {
    let mut out = String::new();
    for line in lines {
        out.push_str(line.as_ref());
        out.push('\n');
    }
    out
}
