//! Developer-informed oracle datasets.
//!
//! Canonical storage is one JSON document per dataset:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "provenance": "free text",
//!   "entries": [
//!     {
//!       "repo": {"name": "owner/project", "clone": "optional/path"},
//!       "fix_commit": "<sha>",
//!       "bug_inducing_commits": ["<sha>", ...],
//!       "issues": [{"url": "https://...", "opened_at": "2020-01-31T12:00:00Z"}],
//!       "languages": ["C", "Python"]
//!     }
//!   ],
//!   "counts": {"C": {"repos": 1, "commits": 1, "issues": 0}}
//! }
//! ```
//!
//! `counts` is optional on input and checked against the entries when given.
//! A relative `clone` path is resolved against the clones root; without one
//! the clone is expected at `<clones root>/<owner>/<project>`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::lang::LanguageId;
use crate::repo::{CommitId, RepoError, RepoSnapshot};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ViolationKind {
    #[error("invalid commit id {0:?}")]
    InvalidCommit(String),
    #[error("no bug-inducing commits")]
    EmptyTrueBics,
    #[error("fix commit {0} is listed among its own bug-inducing commits")]
    FixAmongBics(String),
    #[error("fix commit {commit} already listed for {repo} at entry {first}")]
    DuplicateFix { repo: String, commit: String, first: usize },
    #[error("issue {url:?}: unparseable opening date {value:?}")]
    BadIssueDate { url: String, value: String },
    #[error("unknown language {0:?}")]
    UnknownLanguage(String),
    #[error("empty repository name")]
    EmptyRepo,
    #[error("counts for {language}: declared {declared}, computed {computed}")]
    CountMismatch {
        language: String,
        declared: String,
        computed: String,
    },
    #[error("commit {0} not found in clone")]
    Unresolvable(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Zero-based entry index; `None` for dataset-level problems.
    pub entry: Option<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.entry {
            Some(i) => write!(f, "entry {i}: {}", self.kind),
            None => write!(f, "dataset: {}", self.kind),
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("unsupported schema version {0} (expected {SCHEMA_VERSION})")]
    Version(u32),
    #[error("{} validation error(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RepoRef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clone: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(with = "iso_utc")]
    pub opened_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub repo: RepoRef,
    pub fix_commit: CommitId,
    #[serde(rename = "bug_inducing_commits")]
    pub true_bics: BTreeSet<CommitId>,
    #[serde(default)]
    pub issues: Vec<Issue>,
    #[serde(default)]
    pub languages: BTreeSet<LanguageId>,
}

impl OracleEntry {
    pub fn issue_dates(&self) -> Vec<DateTime<Utc>> {
        self.issues.iter().map(|i| i.opened_at).collect()
    }

    /// Local clone location under `clones_root`.
    pub fn clone_path(&self, clones_root: &Path) -> PathBuf {
        match &self.repo.clone {
            Some(p) if p.is_absolute() => p.clone(),
            Some(p) => clones_root.join(p),
            None => clones_root.join(&self.repo.name),
        }
    }

    /// Copy with every commit expanded to its full hash in `repo`.
    pub fn resolved(&self, repo: &RepoSnapshot) -> Result<OracleEntry, RepoError> {
        let mut out = self.clone();
        out.fix_commit = repo.resolve(self.fix_commit.as_str())?;
        out.true_bics = self
            .true_bics
            .iter()
            .map(|c| repo.resolve(c.as_str()))
            .collect::<Result<_, _>>()?;
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageCounts {
    pub repos: usize,
    pub commits: usize,
    pub issues: usize,
}

impl fmt::Display for LanguageCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} repos / {} commits / {} issues",
            self.repos, self.commits, self.issues
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleDataset {
    pub schema_version: u32,
    #[serde(default)]
    pub provenance: String,
    pub entries: Vec<OracleEntry>,
}

impl OracleDataset {
    pub fn new(provenance: impl Into<String>, entries: Vec<OracleEntry>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            provenance: provenance.into(),
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Per-language counts plus a `Total` row. Entries with several
    /// languages count once under each.
    pub fn counts(&self) -> BTreeMap<String, LanguageCounts> {
        let mut repos: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
        let mut out: BTreeMap<String, LanguageCounts> = BTreeMap::new();
        for e in &self.entries {
            let keys = e
                .languages
                .iter()
                .map(|l| l.name().to_string())
                .chain(std::iter::once("Total".to_string()));
            for key in keys {
                let c = out.entry(key.clone()).or_default();
                c.commits += 1;
                if !e.issues.is_empty() {
                    c.issues += 1;
                }
                repos.entry(key).or_default().insert(&e.repo.name);
            }
        }
        for (k, r) in repos {
            out.get_mut(&k).expect("counted").repos = r.len();
        }
        out
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen: BTreeMap<&str, Vec<(&CommitId, usize)>> = BTreeMap::new();
        for (i, e) in self.entries.iter().enumerate() {
            let mut push = |kind| out.push(Violation { entry: Some(i), kind });
            if e.repo.name.trim().is_empty() {
                push(ViolationKind::EmptyRepo);
            }
            if e.true_bics.is_empty() {
                push(ViolationKind::EmptyTrueBics);
            }
            if e.true_bics.iter().any(|b| b.abbreviates(&e.fix_commit)) {
                push(ViolationKind::FixAmongBics(e.fix_commit.to_string()));
            }
            let prior = seen.entry(e.repo.name.as_str()).or_default();
            if let Some((_, first)) = prior.iter().find(|(c, _)| c.abbreviates(&e.fix_commit)) {
                push(ViolationKind::DuplicateFix {
                    repo: e.repo.name.clone(),
                    commit: e.fix_commit.to_string(),
                    first: *first,
                });
            }
            prior.push((&e.fix_commit, i));
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self, OracleError> {
        let raw: Value = serde_json::from_str(text).map_err(|e| OracleError::Schema(e.to_string()))?;
        let version = raw
            .get("schema_version")
            .and_then(Value::as_u64)
            .ok_or_else(|| OracleError::Schema("missing integer field `schema_version`".into()))?;
        if version != SCHEMA_VERSION as u64 {
            return Err(OracleError::Version(version as u32));
        }
        let provenance = raw
            .get("provenance")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        let entries = raw
            .get("entries")
            .and_then(Value::as_array)
            .ok_or_else(|| OracleError::Schema("missing array field `entries`".into()))?;
        let mut violations = Vec::new();
        let mut parsed = Vec::with_capacity(entries.len());
        for (i, v) in entries.iter().enumerate() {
            match RawEntry::deserialize(v) {
                Ok(raw) => {
                    if let Some(e) = raw.convert(i, &mut violations) {
                        parsed.push(e);
                    }
                }
                Err(e) => return Err(OracleError::Schema(format!("entry {i}: {e}"))),
            }
        }
        let ds = OracleDataset::new(provenance, parsed);
        if violations.is_empty() {
            violations.extend(ds.validate());
        }
        if let Some(declared) = raw.get("counts").filter(|c| !c.is_null()) {
            let declared: BTreeMap<String, LanguageCounts> =
                serde_json::from_value(declared.clone()).map_err(|e| OracleError::Schema(format!("counts: {e}")))?;
            let computed = ds.counts();
            for (lang, d) in &declared {
                let c = computed.get(lang).copied().unwrap_or_default();
                if *d != c {
                    violations.push(Violation {
                        entry: None,
                        kind: ViolationKind::CountMismatch {
                            language: lang.clone(),
                            declared: d.to_string(),
                            computed: c.to_string(),
                        },
                    });
                }
            }
        }
        if violations.is_empty() {
            Ok(ds)
        } else {
            Err(OracleError::Invalid(violations))
        }
    }

    /// Canonical JSON with computed counts, entries in stored order.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            schema_version: u32,
            provenance: &'a str,
            entries: &'a [OracleEntry],
            counts: BTreeMap<String, LanguageCounts>,
        }
        let mut s = serde_json::to_string_pretty(&Out {
            schema_version: self.schema_version,
            provenance: &self.provenance,
            entries: &self.entries,
            counts: self.counts(),
        })
        .expect("dataset serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), OracleError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| OracleError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Checks that every commit resolves in its clone, for clones present
    /// under `clones_root`. Entries whose clone is absent are skipped.
    pub fn verify_clones(&self, clones_root: &Path) -> Vec<Violation> {
        let mut out = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            let Ok(repo) = RepoSnapshot::open(e.clone_path(clones_root)) else {
                continue;
            };
            for c in std::iter::once(&e.fix_commit).chain(&e.true_bics) {
                if repo.resolve(c.as_str()).is_err() {
                    out.push(Violation {
                        entry: Some(i),
                        kind: ViolationKind::Unresolvable(c.to_string()),
                    });
                }
            }
        }
        out
    }
}

pub fn load_oracle(path: impl AsRef<Path>) -> Result<OracleDataset, OracleError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| OracleError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    OracleDataset::from_json(&text)
}

/// Entries with at least one issue.
pub fn subset_issues(ds: &OracleDataset) -> OracleDataset {
    filtered(ds, |e| !e.issues.is_empty(), "issues")
}

/// Entries whose languages include `lang`.
pub fn subset_language(ds: &OracleDataset, lang: LanguageId) -> OracleDataset {
    filtered(ds, |e| e.languages.contains(&lang), lang.name())
}

fn filtered(ds: &OracleDataset, keep: impl Fn(&OracleEntry) -> bool, label: &str) -> OracleDataset {
    let provenance = if ds.provenance.is_empty() {
        format!("subset: {label}")
    } else {
        format!("{} | subset: {label}", ds.provenance)
    };
    OracleDataset::new(provenance, ds.entries.iter().filter(|e| keep(e)).cloned().collect())
}

#[derive(Deserialize)]
struct RawEntry {
    repo: RepoRef,
    fix_commit: String,
    bug_inducing_commits: Vec<String>,
    #[serde(default)]
    issues: Vec<RawIssue>,
    #[serde(default)]
    languages: Vec<String>,
}

#[derive(Deserialize)]
struct RawIssue {
    #[serde(default)]
    url: Option<String>,
    opened_at: String,
}

impl RawEntry {
    fn convert(self, i: usize, out: &mut Vec<Violation>) -> Option<OracleEntry> {
        let before = out.len();
        let mut push = |kind| out.push(Violation { entry: Some(i), kind });
        let commit = |s: &str, push: &mut dyn FnMut(ViolationKind)| {
            let s = s.trim().to_ascii_lowercase();
            CommitId::parse(&s)
                .map_err(|_| push(ViolationKind::InvalidCommit(s)))
                .ok()
        };
        let fix = commit(&self.fix_commit, &mut push);
        let bics: BTreeSet<CommitId> = self
            .bug_inducing_commits
            .iter()
            .filter_map(|b| commit(b, &mut push))
            .collect();
        let mut issues = Vec::new();
        for raw in self.issues {
            match parse_iso_utc(&raw.opened_at) {
                Some(opened_at) => issues.push(Issue {
                    url: raw.url,
                    opened_at,
                }),
                None => push(ViolationKind::BadIssueDate {
                    url: raw.url.unwrap_or_default(),
                    value: raw.opened_at,
                }),
            }
        }
        let mut languages = BTreeSet::new();
        for l in &self.languages {
            match l.parse::<LanguageId>() {
                Ok(id) => {
                    languages.insert(id);
                }
                Err(_) => push(ViolationKind::UnknownLanguage(l.clone())),
            }
        }
        if out.len() != before {
            return None;
        }
        Some(OracleEntry {
            repo: self.repo,
            fix_commit: fix?,
            true_bics: bics,
            issues,
            languages,
        })
    }
}

/// ISO-8601 timestamp with an explicit offset, converted to UTC.
pub fn parse_iso_utc(s: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s.trim())
        .ok()
        .map(|d| d.with_timezone(&Utc))
}

/// Lenient variant for imported data: also accepts zone-less date-times and
/// bare dates, read as UTC.
pub fn parse_lenient_utc(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    parse_iso_utc(s)
        .or_else(|| {
            [
                "%Y-%m-%dT%H:%M:%S",
                "%Y-%m-%d %H:%M:%S",
                "%Y-%m-%dT%H:%M:%S%.f",
                "%Y-%m-%d %H:%M:%S%.f",
            ]
            .iter()
            .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
            .map(|n| n.and_utc())
        })
        .or_else(|| {
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
                .map(|n| n.and_utc())
        })
}

pub fn format_iso_utc(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

mod iso_utc {
    use chrono::{DateTime, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_iso_utc(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_iso_utc(&s).ok_or_else(|| serde::de::Error::custom(format!("bad ISO-8601 date {s:?}")))
    }
}

pub mod import {
    //! Adapter for the published replication-package layout: a JSON array
    //! (or an object with a `data`/`entries`/`commits` array) of flat
    //! records. Field aliases:
    //!
    //! | canonical              | accepted                                                   |
    //! |------------------------|------------------------------------------------------------|
    //! | repo name              | `repo_name`, `repository`, `repo`, `project`               |
    //! | fix commit             | `fix_commit_hash`, `fix_commit`, `commit_hash`, `sha`      |
    //! | bug-inducing commits   | `bug_commit_hash`, `inducing_commit_hash`, `bug_inducing_commits`, `bics` (list or single string) |
    //! | languages              | `language`, `languages` (list or single string)            |
    //! | issue urls             | `issue_urls`, `issues` (list of strings or objects)        |
    //! | issue opening date     | `earliest_issue_date`, `issue_date`, `opened_at`           |
    //!
    //! Language names outside the supported set are imported as `Others`.
    //! When several URLs share one date field, every issue gets that date.
    //! A record with a date but no URL yields one URL-less issue. Unknown
    //! fields are ignored and reported in the returned field census.

    use std::collections::{BTreeMap, BTreeSet};

    use serde_json::{Map, Value};

    use super::{
        parse_lenient_utc, LanguageId, OracleDataset, OracleEntry, OracleError, RawEntry, RawIssue, RepoRef, Violation,
    };

    const REPO: &[&str] = &["repo_name", "repository", "repo", "project"];
    const FIX: &[&str] = &["fix_commit_hash", "fix_commit", "commit_hash", "sha"];
    const BICS: &[&str] = &[
        "bug_commit_hash",
        "inducing_commit_hash",
        "bug_inducing_commits",
        "bics",
    ];
    const LANGS: &[&str] = &["language", "languages"];
    const ISSUE_URLS: &[&str] = &["issue_urls", "issues"];
    const ISSUE_DATE: &[&str] = &["earliest_issue_date", "issue_date", "opened_at"];

    #[derive(Debug, Default)]
    pub struct ImportReport {
        pub records: usize,
        /// Fields present in the input that the adapter did not use, with counts.
        pub ignored_fields: BTreeMap<String, usize>,
        /// Language names outside the supported set, imported as `Others`.
        pub other_languages: BTreeMap<String, usize>,
    }

    fn pick<'a>(obj: &'a Map<String, Value>, names: &[&str]) -> Option<&'a Value> {
        names.iter().find_map(|n| obj.get(*n)).filter(|v| !v.is_null())
    }

    fn strings(v: Option<&Value>) -> Vec<String> {
        match v {
            Some(Value::String(s)) => vec![s.clone()],
            Some(Value::Array(a)) => a
                .iter()
                .filter_map(|x| match x {
                    Value::String(s) => Some(s.clone()),
                    Value::Object(o) => o.get("url").and_then(Value::as_str).map(String::from),
                    _ => None,
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    fn issue_objects(v: Option<&Value>) -> Vec<(Option<String>, String)> {
        match v {
            Some(Value::Array(a)) => a
                .iter()
                .filter_map(|x| x.as_object())
                .filter_map(|o| {
                    let date = pick(o, ISSUE_DATE)?.as_str()?.to_string();
                    Some((o.get("url").and_then(Value::as_str).map(String::from), date))
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn import_replication(text: &str, provenance: &str) -> Result<(OracleDataset, ImportReport), OracleError> {
        let root: Value = serde_json::from_str(text).map_err(|e| OracleError::Schema(e.to_string()))?;
        let records = match &root {
            Value::Array(a) => a.clone(),
            Value::Object(o) => ["data", "entries", "commits"]
                .iter()
                .find_map(|k| o.get(*k).and_then(Value::as_array))
                .cloned()
                .ok_or_else(|| OracleError::Schema("no record array found".into()))?,
            _ => return Err(OracleError::Schema("expected a JSON array of records".into())),
        };
        let known: BTreeSet<&str> = [REPO, FIX, BICS, LANGS, ISSUE_URLS, ISSUE_DATE]
            .concat()
            .into_iter()
            .collect();
        let mut report = ImportReport {
            records: records.len(),
            ..Default::default()
        };
        let mut violations: Vec<Violation> = Vec::new();
        let mut entries: Vec<OracleEntry> = Vec::new();
        for (i, rec) in records.iter().enumerate() {
            let obj = rec
                .as_object()
                .ok_or_else(|| OracleError::Schema(format!("record {i} is not an object")))?;
            for k in obj.keys() {
                if !known.contains(k.as_str()) {
                    *report.ignored_fields.entry(k.clone()).or_insert(0) += 1;
                }
            }
            let repo = pick(obj, REPO)
                .and_then(Value::as_str)
                .ok_or_else(|| OracleError::Schema(format!("record {i}: no repository name")))?;
            let fix = pick(obj, FIX)
                .and_then(Value::as_str)
                .ok_or_else(|| OracleError::Schema(format!("record {i}: no fix commit")))?;
            let mut issues: Vec<RawIssue> = issue_objects(pick(obj, ISSUE_URLS))
                .into_iter()
                .map(|(url, opened_at)| RawIssue { url, opened_at })
                .collect();
            if issues.is_empty() {
                if let Some(date) = pick(obj, ISSUE_DATE).and_then(Value::as_str) {
                    let normalized = parse_lenient_utc(date)
                        .map(|d| super::format_iso_utc(&d))
                        .unwrap_or_else(|| date.to_string());
                    let urls = strings(pick(obj, ISSUE_URLS));
                    if urls.is_empty() {
                        issues.push(RawIssue {
                            url: None,
                            opened_at: normalized,
                        });
                    } else {
                        issues.extend(urls.into_iter().map(|u| RawIssue {
                            url: Some(u),
                            opened_at: normalized.clone(),
                        }));
                    }
                }
            } else {
                for issue in &mut issues {
                    if let Some(d) = parse_lenient_utc(&issue.opened_at) {
                        issue.opened_at = super::format_iso_utc(&d);
                    }
                }
            }
            let raw = RawEntry {
                repo: RepoRef {
                    name: repo.to_string(),
                    clone: None,
                },
                fix_commit: fix.to_string(),
                bug_inducing_commits: strings(pick(obj, BICS)),
                issues,
                languages: strings(pick(obj, LANGS))
                    .into_iter()
                    .map(|l| {
                        if l.parse::<LanguageId>().is_ok() {
                            l
                        } else {
                            *report.other_languages.entry(l).or_insert(0) += 1;
                            "Others".to_string()
                        }
                    })
                    .collect(),
            };
            if let Some(e) = raw.convert(i, &mut violations) {
                entries.push(e);
            }
        }
        let ds = OracleDataset::new(provenance, entries);
        if violations.is_empty() {
            violations.extend(ds.validate());
        }
        if violations.is_empty() {
            Ok((ds, report))
        } else {
            Err(OracleError::Invalid(violations))
        }
    }
}
