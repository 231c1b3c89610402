//! Configurable SZZ pipeline: fix-line extraction, origin tracing, candidate
//! filtering and selection.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{self, LanguageMap, LineClass};
use crate::repo::{CommitId, CommitMeta, RepoError, RepoSnapshot};

mod refactoring;
mod trace;

pub use refactoring::RefactoringRanges;

pub const DEFAULT_DEPTH_LIMIT: u32 = 10;

/// Gap between the last true bug-inducing commit and a simulated issue.
pub const BEST_CASE_DELTA_SECS: i64 = 60;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Repo(#[from] RepoError),
    #[error("fix commit {0} has no parent")]
    RootFix(CommitId),
    #[error("refactoring filter requested but no refactoring ranges were supplied")]
    MissingRefactorings,
    #[error("refactoring ranges, record {record}: {message}")]
    RefactoringFormat { record: usize, message: String },
    #[error("refactoring range for {file} at {commit} reaches line {line} of {len}")]
    RefactoringOutOfBounds {
        commit: CommitId,
        file: String,
        line: u32,
        len: u32,
    },
    #[error("cannot simulate an issue date without bug-inducing commits")]
    EmptyTrueBics,
    #[error("unknown preset {0:?} (expected one of B, AG, MA, L, R, RA-lite)")]
    UnknownPreset(String),
    #[error("internal: {0}")]
    Internal(String),
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FixLineFilter {
    DropComments,
    DropBlank,
    DropCosmeticLines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TraceMode {
    PlainBlame,
    SkipCosmeticCommits { depth_limit: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BicFilter {
    DropMetaChanges,
    DropAfterIssueDate,
    DropRefactoredLines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Selection {
    All,
    Largest,
    Latest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantConfig {
    pub fix_line_filter: BTreeSet<FixLineFilter>,
    pub trace: TraceMode,
    pub bic_filters: BTreeSet<BicFilter>,
    pub selection: Selection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "B")]
    B,
    #[serde(rename = "AG")]
    Ag,
    #[serde(rename = "MA")]
    Ma,
    #[serde(rename = "L")]
    L,
    #[serde(rename = "R")]
    R,
    #[serde(rename = "RA-lite")]
    RaLite,
}

impl Preset {
    pub const ALL: [Preset; 6] = [Preset::B, Preset::Ag, Preset::Ma, Preset::L, Preset::R, Preset::RaLite];

    pub fn name(self) -> &'static str {
        match self {
            Preset::B => "B",
            Preset::Ag => "AG",
            Preset::Ma => "MA",
            Preset::L => "L",
            Preset::R => "R",
            Preset::RaLite => "RA-lite",
        }
    }

    pub fn config(self) -> VariantConfig {
        let ag = VariantConfig {
            fix_line_filter: BTreeSet::from([
                FixLineFilter::DropComments,
                FixLineFilter::DropBlank,
                FixLineFilter::DropCosmeticLines,
            ]),
            trace: TraceMode::SkipCosmeticCommits {
                depth_limit: DEFAULT_DEPTH_LIMIT,
            },
            bic_filters: BTreeSet::new(),
            selection: Selection::All,
        };
        let mut ma = ag.clone();
        ma.bic_filters.insert(BicFilter::DropMetaChanges);
        match self {
            Preset::B => VariantConfig {
                fix_line_filter: BTreeSet::new(),
                trace: TraceMode::PlainBlame,
                bic_filters: BTreeSet::new(),
                selection: Selection::All,
            },
            Preset::Ag => ag,
            Preset::Ma => ma,
            Preset::L => VariantConfig {
                selection: Selection::Largest,
                ..ma
            },
            Preset::R => VariantConfig {
                selection: Selection::Latest,
                ..ma
            },
            Preset::RaLite => {
                ma.bic_filters.insert(BicFilter::DropRefactoredLines);
                ma
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let key = key.strip_suffix("-szz").unwrap_or(&key);
        Ok(match key {
            "b" => Preset::B,
            "ag" => Preset::Ag,
            "ma" => Preset::Ma,
            "l" => Preset::L,
            "r" => Preset::R,
            "ra-lite" | "ralite" | "ra" => Preset::RaLite,
            _ => return Err(EngineError::UnknownPreset(s.to_string())),
        })
    }
}

/// A pre-image line removed or modified by the fix.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FixLine {
    pub file: String,
    /// 1-based line number at the fix's first parent.
    pub line_no: u32,
    pub text: String,
    pub class: LineClass,
    /// Removed only as part of a whitespace-only rewrite.
    pub cosmetic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixContext {
    pub fix_commit: CommitId,
    pub parent: CommitId,
    pub fix_lines: Vec<FixLine>,
    pub issue_dates: Vec<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TracedLine {
    pub fix_line: FixLine,
    /// Position of the line in the candidate commit's post-image.
    pub origin_file: String,
    pub origin_line: u32,
    /// Number of cosmetic commits skipped to reach the candidate.
    pub depth: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BicCandidate {
    pub commit: CommitId,
    pub supporting_lines: Vec<TracedLine>,
    pub trace_depth: u32,
    pub committer_time: DateTime<Utc>,
    /// The depth limit was reached while still on a cosmetic commit.
    pub unresolved_cosmetic: bool,
}

/// Per-repository engine state: language table plus memoised commit facts.
///
/// Safe to share between threads; caches are internally locked.
pub struct Session<'r> {
    repo: &'r RepoSnapshot,
    languages: LanguageMap,
    cosmetic: Mutex<HashMap<CommitId, bool>>,
    meta: Mutex<HashMap<CommitId, CommitMeta>>,
    meta_change: Mutex<HashMap<CommitId, bool>>,
}

impl<'r> Session<'r> {
    pub fn new(repo: &'r RepoSnapshot) -> Self {
        Self::with_languages(repo, LanguageMap::default())
    }

    pub fn with_languages(repo: &'r RepoSnapshot, languages: LanguageMap) -> Self {
        Self {
            repo,
            languages,
            cosmetic: Mutex::default(),
            meta: Mutex::default(),
            meta_change: Mutex::default(),
        }
    }

    pub fn repo(&self) -> &'r RepoSnapshot {
        self.repo
    }

    pub fn commit_meta(&self, commit: &CommitId) -> Result<CommitMeta> {
        if let Some(m) = self.meta.lock().expect("cache lock").get(commit) {
            return Ok(m.clone());
        }
        let meta = self.repo.commit_meta(commit)?;
        self.meta
            .lock()
            .expect("cache lock")
            .insert(commit.clone(), meta.clone());
        Ok(meta)
    }

    pub fn is_cosmetic(&self, commit: &CommitId) -> Result<bool> {
        if let Some(v) = self.cosmetic.lock().expect("cache lock").get(commit) {
            return Ok(*v);
        }
        let v = lang::is_cosmetic_commit(self.repo, commit)?;
        self.cosmetic.lock().expect("cache lock").insert(commit.clone(), v);
        Ok(v)
    }

    /// Merges, and commits whose first-parent diff carries no text change.
    pub fn is_meta_change(&self, commit: &CommitId) -> Result<bool> {
        if let Some(v) = self.meta_change.lock().expect("cache lock").get(commit) {
            return Ok(*v);
        }
        let v =
            self.commit_meta(commit)?.is_merge() || self.repo.diff_first_parent(commit)?.iter().all(|h| h.is_empty());
        self.meta_change.lock().expect("cache lock").insert(commit.clone(), v);
        Ok(v)
    }

    pub fn extract_fix_lines(
        &self,
        fix_commit: &CommitId,
        config: &VariantConfig,
        issue_dates: &[DateTime<Utc>],
    ) -> Result<FixContext> {
        let meta = self.commit_meta(fix_commit)?;
        let parent = meta
            .parents
            .first()
            .cloned()
            .ok_or_else(|| EngineError::RootFix(fix_commit.clone()))?;
        let hunks = self.repo.diff_against_parent(fix_commit, &parent)?;

        let mut classes: HashMap<String, Vec<LineClass>> = HashMap::new();
        let mut fix_lines = Vec::new();
        for hunk in &hunks {
            let Some(file) = &hunk.file_pre else { continue };
            if hunk.removed.is_empty() {
                continue;
            }
            if !classes.contains_key(file) {
                let content = self.repo.file_content(&parent, file)?.unwrap_or_default();
                let lang = self.languages.language_of(file);
                classes.insert(file.clone(), lang::classify_lines(&content, lang));
            }
            let file_classes = &classes[file];
            let removed_text: Vec<&str> = hunk.removed.iter().map(|(_, t)| t.as_str()).collect();
            let added_text: Vec<&str> = hunk.added.iter().map(|(_, t)| t.as_str()).collect();
            let cosmetic = lang::cosmetic_removed_lines(&removed_text, &added_text);
            for ((line_no, text), cosmetic) in hunk.removed.iter().zip(cosmetic) {
                let class = if text.trim().is_empty() {
                    LineClass::Blank
                } else {
                    file_classes
                        .get(*line_no as usize - 1)
                        .copied()
                        .unwrap_or(LineClass::Code)
                };
                let keep = !(config.fix_line_filter.contains(&FixLineFilter::DropComments)
                    && class == LineClass::Comment
                    || config.fix_line_filter.contains(&FixLineFilter::DropBlank) && class == LineClass::Blank
                    || config.fix_line_filter.contains(&FixLineFilter::DropCosmeticLines) && cosmetic);
                if keep {
                    fix_lines.push(FixLine {
                        file: file.clone(),
                        line_no: *line_no,
                        text: text.clone(),
                        class,
                        cosmetic,
                    });
                }
            }
        }
        fix_lines.sort();
        fix_lines.dedup();
        Ok(FixContext {
            fix_commit: fix_commit.clone(),
            parent,
            fix_lines,
            issue_dates: issue_dates.to_vec(),
        })
    }

    pub fn trace_candidates(&self, ctx: &FixContext, config: &VariantConfig) -> Result<Vec<BicCandidate>> {
        let hits = trace::blame_lines(self, &ctx.parent, &ctx.fix_lines)?;
        let mut grouped: BTreeMap<CommitId, (Vec<TracedLine>, bool)> = BTreeMap::new();
        for (line, hit) in hits {
            let hit = match config.trace {
                TraceMode::PlainBlame => hit,
                TraceMode::SkipCosmeticCommits { depth_limit } => trace::skip_cosmetic(self, hit, depth_limit)?,
            };
            let entry = grouped.entry(hit.commit.clone()).or_default();
            entry.0.push(trace::traced(line, &hit));
            entry.1 |= hit.unresolved_cosmetic;
        }
        grouped
            .into_iter()
            .map(|(commit, (supporting_lines, unresolved_cosmetic))| {
                let committer_time = self.commit_meta(&commit)?.committer_time;
                Ok(BicCandidate {
                    trace_depth: supporting_lines.iter().map(|l| l.depth).max().unwrap_or(0),
                    commit,
                    supporting_lines,
                    committer_time,
                    unresolved_cosmetic,
                })
            })
            .collect()
    }

    pub fn filter_candidates(
        &self,
        candidates: Vec<BicCandidate>,
        ctx: &FixContext,
        config: &VariantConfig,
        refactorings: Option<&RefactoringRanges>,
    ) -> Result<Vec<BicCandidate>> {
        let refactorings = if config.bic_filters.contains(&BicFilter::DropRefactoredLines) {
            Some(refactorings.ok_or(EngineError::MissingRefactorings)?)
        } else {
            None
        };
        let cutoff = if config.bic_filters.contains(&BicFilter::DropAfterIssueDate) {
            ctx.issue_dates.iter().min().copied()
        } else {
            None
        };
        let mut out = Vec::with_capacity(candidates.len());
        for mut c in candidates {
            if config.bic_filters.contains(&BicFilter::DropMetaChanges) && self.is_meta_change(&c.commit)? {
                continue;
            }
            if cutoff.is_some_and(|t| c.committer_time > t) {
                continue;
            }
            if let Some(ranges) = refactorings {
                c.supporting_lines
                    .retain(|l| !ranges.covers(&c.commit, &l.origin_file, l.origin_line));
                if c.supporting_lines.is_empty() {
                    continue;
                }
                c.trace_depth = c.supporting_lines.iter().map(|l| l.depth).max().unwrap_or(0);
            }
            out.push(c);
        }
        Ok(out)
    }

    /// Runs an arbitrary configuration end to end.
    pub fn run_config(
        &self,
        fix_commit: &CommitId,
        config: &VariantConfig,
        issue_dates: &[DateTime<Utc>],
        refactorings: Option<&RefactoringRanges>,
    ) -> Result<VariantRun> {
        let ctx = self.extract_fix_lines(fix_commit, config, issue_dates)?;
        let candidates = self.trace_candidates(&ctx, config)?;
        let filtered = self.filter_candidates(candidates, &ctx, config, refactorings)?;
        let selected = select(filtered, config.selection);
        Ok(VariantRun {
            fix_commit: ctx.fix_commit,
            fix_line_count: ctx.fix_lines.len(),
            candidates: selected,
            dropped_after_issue_date: Vec::new(),
        })
    }

    /// Runs a named preset. A non-empty `issue_dates` removes, from the
    /// returned set, every commit made after the earliest issue date.
    pub fn run_preset(
        &self,
        fix_commit: &CommitId,
        preset: Preset,
        issue_dates: &[DateTime<Utc>],
        refactorings: Option<&RefactoringRanges>,
    ) -> Result<VariantRun> {
        let mut run = self.run_config(fix_commit, &preset.config(), &[], refactorings)?;
        if let Some(cutoff) = issue_dates.iter().min() {
            let (kept, dropped): (Vec<_>, Vec<_>) =
                run.candidates.into_iter().partition(|c| c.committer_time <= *cutoff);
            run.candidates = kept;
            run.dropped_after_issue_date = dropped.into_iter().map(|c| c.commit).collect();
        }
        Ok(run)
    }

    pub fn run_variant(
        &self,
        fix_commit: &CommitId,
        preset: Preset,
        issue_dates: &[DateTime<Utc>],
        refactorings: Option<&RefactoringRanges>,
    ) -> Result<BTreeSet<CommitId>> {
        Ok(self
            .run_preset(fix_commit, preset, issue_dates, refactorings)?
            .commits())
    }
}

/// Output of one variant on one fix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantRun {
    pub fix_commit: CommitId,
    pub fix_line_count: usize,
    pub candidates: Vec<BicCandidate>,
    pub dropped_after_issue_date: Vec<CommitId>,
}

impl VariantRun {
    pub fn commits(&self) -> BTreeSet<CommitId> {
        self.candidates.iter().map(|c| c.commit.clone()).collect()
    }
}

/// Reduces candidates according to `selection`.
///
/// Largest ranks by supporting-line count, Latest by committer time; ties
/// fall to the later committer time, then to the lexicographically smaller
/// full hash.
pub fn select(mut candidates: Vec<BicCandidate>, selection: Selection) -> Vec<BicCandidate> {
    let by_time_then_hash = |a: &BicCandidate, b: &BicCandidate| {
        b.committer_time
            .cmp(&a.committer_time)
            .then_with(|| a.commit.cmp(&b.commit))
    };
    match selection {
        Selection::All => candidates,
        Selection::Largest => {
            candidates.sort_by(|a, b| {
                b.supporting_lines
                    .len()
                    .cmp(&a.supporting_lines.len())
                    .then_with(|| by_time_then_hash(a, b))
            });
            candidates.truncate(1);
            candidates
        }
        Selection::Latest => {
            candidates.sort_by(by_time_then_hash);
            candidates.truncate(1);
            candidates
        }
    }
}

/// Latest committer time among `true_bics`, plus [`BEST_CASE_DELTA_SECS`].
pub fn simulate_best_case_issue_date(repo: &RepoSnapshot, true_bics: &BTreeSet<CommitId>) -> Result<DateTime<Utc>> {
    let mut latest: Option<DateTime<Utc>> = None;
    for bic in true_bics {
        let t = repo.commit_meta(bic)?.committer_time;
        latest = Some(latest.map_or(t, |l| l.max(t)));
    }
    latest
        .map(|t| t + Duration::seconds(BEST_CASE_DELTA_SECS))
        .ok_or(EngineError::EmptyTrueBics)
}

/// One-shot convenience wrapper around [`Session::run_variant`].
pub fn run_variant(
    repo: &RepoSnapshot,
    fix_commit: &CommitId,
    preset: Preset,
    issue_dates: &[DateTime<Utc>],
    refactorings: Option<&RefactoringRanges>,
) -> Result<BTreeSet<CommitId>> {
    Session::new(repo).run_variant(fix_commit, preset, issue_dates, refactorings)
}
