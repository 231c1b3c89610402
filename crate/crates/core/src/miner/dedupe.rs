use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MessageAnalysis, RejectReason, Verdict};

/// Fork relationships between repositories.
///
/// JSON form: `{"forks": {"<fork>": "<upstream>", ...}, "main": {"<sha>": "<repo>", ...}}`.
/// `main` pins the main repository for a specific commit and takes
/// precedence over the fork graph.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForkIndex {
    #[serde(default)]
    pub forks: BTreeMap<String, String>,
    #[serde(default)]
    pub main: BTreeMap<String, String>,
}

impl ForkIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_fork(&mut self, fork: &str, upstream: &str) {
        self.forks.insert(fork.to_string(), upstream.to_string());
    }

    pub fn set_main(&mut self, commit: &str, repo: &str) {
        self.main.insert(commit.to_ascii_lowercase(), repo.to_string());
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    /// Upstream chain of `repo`, nearest first.
    fn upstreams(&self, repo: &str) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        let mut cur = repo;
        while let Some(up) = self.forks.get(cur) {
            if up == repo || out.contains(&up.as_str()) {
                break;
            }
            out.push(up);
            cur = up;
        }
        out
    }

    /// The main repository among `repos` for `commit`, if one is designated.
    pub fn main_of<'a>(&self, commit: &str, repos: &BTreeSet<&'a str>) -> Option<&'a str> {
        if let Some(m) = self.main.get(&commit.to_ascii_lowercase()) {
            return repos.iter().copied().find(|r| *r == m);
        }
        // repositories in the group that are not forks of another member
        let tops: Vec<&'a str> = repos
            .iter()
            .copied()
            .filter(|r| !self.upstreams(r).iter().any(|u| repos.contains(u)))
            .collect();
        match tops.as_slice() {
            [only] => Some(only),
            _ => None,
        }
    }
}

/// Collapses accepted records sharing a commit hash into one.
///
/// Rejected records pass through untouched. Among accepted duplicates the
/// main repository's record is kept and the others become
/// `Rejected(Duplicate)` with `duplicate_of` set. With no designated main,
/// the lexicographically first repository is kept with `duplicate_warning`.
/// Output order follows input order.
pub fn dedupe(records: Vec<MessageAnalysis>, forks: &ForkIndex) -> Vec<MessageAnalysis> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if r.is_accepted() {
            groups.entry(r.commit.to_ascii_lowercase()).or_default().push(i);
        }
    }
    let mut records = records;
    for (commit, members) in groups {
        if members.len() < 2 {
            continue;
        }
        let repos: BTreeSet<&str> = members.iter().map(|&i| records[i].repo.as_str()).collect();
        let designated = forks.main_of(&commit, &repos).map(str::to_string);
        let warn = designated.is_none() && repos.len() > 1;
        let keep_repo = designated.unwrap_or_else(|| repos.iter().next().expect("nonempty").to_string());
        let keep = *members
            .iter()
            .find(|&&i| records[i].repo == keep_repo)
            .expect("kept repo is a member");
        for &i in &members {
            if i == keep {
                records[i].duplicate_warning = warn;
            } else {
                records[i].verdict = Verdict::Rejected(RejectReason::Duplicate);
                records[i].duplicate_of = Some(keep_repo.clone());
            }
        }
    }
    records
}
