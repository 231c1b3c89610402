//! Batch orchestration: mining, detection over a dataset, evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use log::{info, warn};
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{simulate_best_case_issue_date, BicCandidate, EngineError, Preset, RefactoringRanges, Session};
use crate::eval::{self, DetectionRun, EvalError, EvalReport, Regime, RunEntry};
use crate::lang::LanguageMap;
use crate::miner::{self, EventError, ForkIndex, MineOptions, MiningOutcome, ParseError, ParseIndex};
use crate::oracle::{OracleDataset, OracleEntry};
use crate::repo::RepoSnapshot;

/// Flag on issue-date runs for entries processed without a date filter.
pub const FLAG_NO_ISSUE_DATE: &str = "no-issue-date";
pub const FLAG_UNRESOLVED_COSMETIC: &str = "unresolved-cosmetic";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no presets requested")]
    NoPresets,
    #[error("no repository of the dataset has a clone under {0}")]
    NoClones(PathBuf),
    #[error("preset RA-lite needs refactoring ranges")]
    MissingRefactorings,
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Events(#[from] EventError),
    #[error(transparent)]
    Parses(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("no run files in {0}")]
    NoRuns(PathBuf),
    #[error("failed to start worker pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path, e: impl ToString) -> PipelineError {
    PipelineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone)]
pub struct DetectOptions {
    pub clones_root: PathBuf,
    pub presets: Vec<Preset>,
    pub regimes: Vec<Regime>,
    /// Worker threads; repositories are processed one per worker.
    pub workers: usize,
    pub refactorings: Option<RefactoringRanges>,
    pub languages: LanguageMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skip {
    pub repo: String,
    pub fix_commit: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct DetectOutcome {
    /// One run per preset × regime, sorted by (regime, preset order).
    pub runs: Vec<DetectionRun>,
    pub processed: usize,
    pub skipped: Vec<Skip>,
}

/// Per-entry result of one preset before regime filtering.
struct Traced {
    candidates: Vec<BicCandidate>,
}

enum EntryResult {
    Done {
        traced: BTreeMap<Preset, Traced>,
        best_case: Option<DateTime<Utc>>,
    },
    Skipped(String),
}

fn cutoff(
    regime: Regime,
    entry: &OracleEntry,
    best_case: Option<DateTime<Utc>>,
) -> (Option<DateTime<Utc>>, Vec<String>) {
    match regime {
        Regime::None => (None, Vec::new()),
        Regime::IssueDate => match entry.issue_dates().into_iter().min() {
            Some(d) => (Some(d), Vec::new()),
            None => (None, vec![FLAG_NO_ISSUE_DATE.to_string()]),
        },
        Regime::BestCaseDate => (best_case, Vec::new()),
    }
}

fn process_entry(session: &Session, entry: &OracleEntry, opts: &DetectOptions) -> EntryResult {
    let fix = match session.repo().resolve(entry.fix_commit.as_str()) {
        Ok(f) => f,
        Err(e) => return EntryResult::Skipped(format!("fix commit: {e}")),
    };
    let mut traced = BTreeMap::new();
    for &preset in &opts.presets {
        match session.run_preset(&fix, preset, &[], opts.refactorings.as_ref()) {
            Ok(run) => {
                traced.insert(
                    preset,
                    Traced {
                        candidates: run.candidates,
                    },
                );
            }
            Err(e) => return EntryResult::Skipped(format!("{preset}: {e}")),
        }
    }
    let best_case = if opts.regimes.contains(&Regime::BestCaseDate) {
        let bics: Result<BTreeSet<_>, _> = entry
            .true_bics
            .iter()
            .map(|b| session.repo().resolve(b.as_str()))
            .collect();
        match bics
            .map_err(EngineError::from)
            .and_then(|b| simulate_best_case_issue_date(session.repo(), &b))
        {
            Ok(d) => Some(d),
            Err(e) => return EntryResult::Skipped(format!("best-case date: {e}")),
        }
    } else {
        None
    };
    EntryResult::Done { traced, best_case }
}

/// Runs every preset on every dataset entry and applies each regime.
pub fn detect(ds: &OracleDataset, opts: &DetectOptions) -> Result<DetectOutcome, PipelineError> {
    if opts.presets.is_empty() {
        return Err(PipelineError::NoPresets);
    }
    if opts.presets.contains(&Preset::RaLite) && opts.refactorings.is_none() {
        return Err(PipelineError::MissingRefactorings);
    }
    let mut by_repo: BTreeMap<PathBuf, Vec<usize>> = BTreeMap::new();
    for (i, e) in ds.entries.iter().enumerate() {
        by_repo.entry(e.clone_path(&opts.clones_root)).or_default().push(i);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    let groups: Vec<(PathBuf, Vec<usize>)> = by_repo.into_iter().collect();
    let results: Vec<(usize, EntryResult)> = pool.install(|| {
        groups
            .par_iter()
            .flat_map_iter(|(path, idx)| {
                let repo = RepoSnapshot::open(path);
                let out: Vec<(usize, EntryResult)> = match repo {
                    Err(e) => idx
                        .iter()
                        .map(|&i| (i, EntryResult::Skipped(format!("clone unavailable: {e}"))))
                        .collect(),
                    Ok(repo) => {
                        info!("{}: {} entries", path.display(), idx.len());
                        let session = Session::with_languages(&repo, opts.languages.clone());
                        idx.iter()
                            .map(|&i| (i, process_entry(&session, &ds.entries[i], opts)))
                            .collect()
                    }
                };
                out
            })
            .collect()
    });
    let results: BTreeMap<usize, EntryResult> = results.into_iter().collect();

    let skipped: Vec<Skip> = results
        .iter()
        .filter_map(|(&i, r)| match r {
            EntryResult::Skipped(reason) => Some(Skip {
                repo: ds.entries[i].repo.name.clone(),
                fix_commit: ds.entries[i].fix_commit.to_string(),
                reason: reason.clone(),
            }),
            EntryResult::Done { .. } => None,
        })
        .collect();
    for s in &skipped {
        warn!("skipped {}@{}: {}", s.repo, s.fix_commit, s.reason);
    }
    if !ds.entries.is_empty()
        && skipped.len() == ds.entries.len()
        && skipped.iter().all(|s| s.reason.starts_with("clone unavailable"))
    {
        return Err(PipelineError::NoClones(opts.clones_root.clone()));
    }

    let mut runs = Vec::new();
    for &regime in &opts.regimes {
        for &preset in &opts.presets {
            let entries = ds
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let mut re = RunEntry {
                        repo: e.repo.name.clone(),
                        fix_commit: e.fix_commit.clone(),
                        identified: BTreeSet::new(),
                        skipped: None,
                        flags: Vec::new(),
                    };
                    match &results[&i] {
                        EntryResult::Skipped(reason) => re.skipped = Some(reason.clone()),
                        EntryResult::Done { traced, best_case } => {
                            let (limit, flags) = cutoff(regime, e, *best_case);
                            let cands = &traced[&preset].candidates;
                            re.identified = cands
                                .iter()
                                .filter(|c| limit.is_none_or(|t| c.committer_time <= t))
                                .map(|c| c.commit.clone())
                                .collect();
                            re.flags = flags;
                            if cands.iter().any(|c| c.unresolved_cosmetic) {
                                re.flags.push(FLAG_UNRESOLVED_COSMETIC.to_string());
                            }
                        }
                    }
                    re
                })
                .collect();
            runs.push(DetectionRun::new(preset.name(), regime, entries));
        }
    }
    Ok(DetectOutcome {
        runs,
        processed: ds.entries.len() - skipped.len(),
        skipped,
    })
}

/// Writes each run to `<dir>/<preset>__<regime>.json`.
pub fn write_runs(runs: &[DetectionRun], dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    runs.iter()
        .map(|r| {
            let path = dir.join(r.file_name());
            std::fs::write(&path, r.to_json()).map_err(|e| io_err(&path, e))?;
            Ok(path)
        })
        .collect()
}

/// Loads every `*.json` run file in `dir`, in file-name order.
pub fn read_runs(dir: &Path) -> Result<Vec<DetectionRun>, PipelineError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(PipelineError::NoRuns(dir.to_path_buf()));
    }
    paths
        .iter()
        .map(|p| DetectionRun::load(p).map_err(PipelineError::from))
        .collect()
}

pub fn evaluate_runs(
    runs: &[DetectionRun],
    ds: &OracleDataset,
    out_dir: &Path,
    outlier_threshold: Option<usize>,
) -> Result<EvalReport, PipelineError> {
    let report = eval::evaluate(runs, &eval::truth_of(ds), outlier_threshold)?;
    eval::emit_report(&report, out_dir)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EventFormat {
    #[default]
    Native,
    GhArchive,
}

#[derive(Debug, Clone, Default)]
pub struct MineInputs {
    pub events: PathBuf,
    pub format: EventFormat,
    pub parses: Option<PathBuf>,
    pub forks: Option<PathBuf>,
    pub proximity: bool,
}

pub fn mine(inputs: &MineInputs) -> Result<MiningOutcome, PipelineError> {
    let open = |p: &Path| {
        std::fs::File::open(p)
            .map(std::io::BufReader::new)
            .map_err(|e| io_err(p, e))
    };
    let reader = open(&inputs.events)?;
    let events = match inputs.format {
        EventFormat::Native => miner::read_events(reader)?,
        EventFormat::GhArchive => miner::read_gharchive(reader)?,
    };
    let parses = match &inputs.parses {
        Some(p) => Some(ParseIndex::read(open(p)?)?),
        None => None,
    };
    let forks = match &inputs.forks {
        Some(p) => ForkIndex::load(p).map_err(|e| io_err(p, e))?,
        None => ForkIndex::new(),
    };
    let opts = MineOptions {
        proximity: inputs.proximity,
        forks,
    };
    Ok(miner::mine_stream(&events, parses.as_ref(), &opts))
}
