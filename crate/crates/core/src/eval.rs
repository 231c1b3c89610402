//! Scoring detection runs against an oracle.
//!
//! True positives are `(repo, fix, commit)` triples, so equal hashes in
//! different repositories never collide. Pooled metrics work on the union of
//! those triples; macro metrics average per-entry values.
//!
//! Empty-set conventions: precision is 0 when nothing was identified, F1 is 0
//! when precision and recall are both 0, overlap of two empty sets is 1 and
//! an exclusive fraction with an empty denominator is 0.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::OracleDataset;
use crate::repo::CommitId;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("oracle has no bug-inducing commits in scope")]
    EmptyOracle,
    #[error("run {variant}/{regime} does not match the oracle: {missing} oracle entries missing, {unexpected} unknown entries (first: {example})")]
    Coverage {
        variant: String,
        regime: String,
        missing: usize,
        unexpected: usize,
        example: String,
    },
    #[error("exclusive-correct needs at least two runs")]
    SingleRun,
    #[error("runs compared on different entry sets: {0} vs {1}")]
    ScopeMismatch(String, String),
    #[error("outlier threshold must be at least 1")]
    BadThreshold,
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: malformed report: {message}")]
    Format { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    None,
    IssueDate,
    BestCaseDate,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::None, Regime::IssueDate, Regime::BestCaseDate];

    pub fn name(self) -> &'static str {
        match self {
            Regime::None => "none",
            Regime::IssueDate => "issue-date",
            Regime::BestCaseDate => "best-case-date",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Regime::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown regime {s:?} (expected none, issue-date or best-case-date)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntryKey {
    pub repo: String,
    pub fix_commit: CommitId,
}

impl fmt::Display for EntryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.repo, self.fix_commit)
    }
}

/// Ground truth keyed by entry.
pub type Truth = BTreeMap<EntryKey, BTreeSet<CommitId>>;

pub fn truth_of(ds: &OracleDataset) -> Truth {
    ds.entries
        .iter()
        .map(|e| {
            (
                EntryKey {
                    repo: e.repo.name.clone(),
                    fix_commit: e.fix_commit.clone(),
                },
                e.true_bics.clone(),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunEntry {
    pub repo: String,
    pub fix_commit: CommitId,
    pub identified: BTreeSet<CommitId>,
    /// Why the entry was not evaluated (missing clone, outlier, error).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl RunEntry {
    pub fn key(&self) -> EntryKey {
        EntryKey {
            repo: self.repo.clone(),
            fix_commit: self.fix_commit.clone(),
        }
    }
}

/// Output of one variant under one regime over a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionRun {
    pub variant: String,
    pub regime: Regime,
    /// Sorted by (repo, fix commit).
    pub entries: Vec<RunEntry>,
}

impl DetectionRun {
    pub fn new(variant: impl Into<String>, regime: Regime, mut entries: Vec<RunEntry>) -> Self {
        entries.sort_by(|a, b| (&a.repo, &a.fix_commit).cmp(&(&b.repo, &b.fix_commit)));
        Self {
            variant: variant.into(),
            regime,
            entries,
        }
    }

    pub fn from_sets(variant: &str, regime: Regime, sets: &BTreeMap<EntryKey, BTreeSet<CommitId>>) -> Self {
        Self::new(
            variant,
            regime,
            sets.iter()
                .map(|(k, v)| RunEntry {
                    repo: k.repo.clone(),
                    fix_commit: k.fix_commit.clone(),
                    identified: v.clone(),
                    skipped: None,
                    flags: Vec::new(),
                })
                .collect(),
        )
    }

    /// Evaluated entries with their identified sets.
    pub fn scope(&self) -> BTreeMap<EntryKey, &BTreeSet<CommitId>> {
        self.entries
            .iter()
            .filter(|e| e.skipped.is_none())
            .map(|e| (e.key(), &e.identified))
            .collect()
    }

    pub fn skipped(&self) -> impl Iterator<Item = &RunEntry> {
        self.entries.iter().filter(|e| e.skipped.is_some())
    }

    pub fn file_name(&self) -> String {
        format!("{}__{}.json", self.variant, self.regime)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("run serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| EvalError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

type Triple = (EntryKey, CommitId);

/// Identified hashes, with abbreviations of a true BIC replaced by that BIC.
fn canonical(truth: &BTreeSet<CommitId>, identified: &BTreeSet<CommitId>) -> BTreeSet<CommitId> {
    identified
        .iter()
        .map(|c| truth.iter().find(|b| b.abbreviates(c)).unwrap_or(c).clone())
        .collect()
}

fn check_coverage(run: &DetectionRun, truth: &Truth) -> Result<(), EvalError> {
    let run_keys: BTreeSet<EntryKey> = run.entries.iter().map(RunEntry::key).collect();
    let missing: Vec<&EntryKey> = truth.keys().filter(|k| !run_keys.contains(*k)).collect();
    let unexpected: Vec<&EntryKey> = run_keys.iter().filter(|k| !truth.contains_key(*k)).collect();
    if missing.is_empty() && unexpected.is_empty() {
        return Ok(());
    }
    Err(EvalError::Coverage {
        variant: run.variant.clone(),
        regime: run.regime.to_string(),
        missing: missing.len(),
        unexpected: unexpected.len(),
        example: missing
            .first()
            .or(unexpected.first())
            .map(|k| k.to_string())
            .unwrap_or_default(),
    })
}

struct Scored {
    correct: BTreeSet<Triple>,
    identified: BTreeSet<Triple>,
    per_entry: Vec<(usize, usize, usize)>,
}

fn score(run: &DetectionRun, truth: &Truth) -> Result<Scored, EvalError> {
    check_coverage(run, truth)?;
    let mut correct = BTreeSet::new();
    let mut identified = BTreeSet::new();
    let mut per_entry = Vec::new();
    for (key, ids) in run.scope() {
        let t = &truth[&key];
        let ids = canonical(t, ids);
        per_entry.push((t.len(), ids.len(), ids.intersection(t).count()));
        correct.extend(t.iter().map(|c| (key.clone(), c.clone())));
        identified.extend(ids.into_iter().map(|c| (key.clone(), c)));
    }
    if correct.is_empty() {
        return Err(EvalError::EmptyOracle);
    }
    Ok(Scored {
        correct,
        identified,
        per_entry,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_counts(tp: usize, correct: usize, identified: usize) -> Self {
        let recall = if correct == 0 { 0.0 } else { tp as f64 / correct as f64 };
        let precision = if identified == 0 {
            0.0
        } else {
            tp as f64 / identified as f64
        };
        let f1 = if recall + precision == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics { recall, precision, f1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub variant: String,
    pub regime: Regime,
    pub entries: usize,
    pub excluded: usize,
    pub correct: usize,
    pub identified: usize,
    pub true_positives: usize,
    pub pooled: Metrics,
    pub macro_avg: Metrics,
}

/// Pooled recall, precision and F1.
pub fn pooled_metrics(run: &DetectionRun, truth: &Truth) -> Result<Metrics, EvalError> {
    Ok(metrics_row(run, truth)?.pooled)
}

pub fn metrics_row(run: &DetectionRun, truth: &Truth) -> Result<MetricsRow, EvalError> {
    let s = score(run, truth)?;
    let tp = s.correct.intersection(&s.identified).count();
    let n = s.per_entry.len() as f64;
    let per: Vec<Metrics> = s
        .per_entry
        .iter()
        .map(|&(c, i, t)| Metrics::from_counts(t, c, i))
        .collect();
    let mean = |f: fn(&Metrics) -> f64| per.iter().map(f).sum::<f64>() / n;
    Ok(MetricsRow {
        variant: run.variant.clone(),
        regime: run.regime,
        entries: s.per_entry.len(),
        excluded: run.skipped().count(),
        correct: s.correct.len(),
        identified: s.identified.len(),
        true_positives: tp,
        pooled: Metrics::from_counts(tp, s.correct.len(), s.identified.len()),
        macro_avg: Metrics {
            recall: mean(|m| m.recall),
            precision: mean(|m| m.precision),
            f1: mean(|m| m.f1),
        },
    })
}

/// correct ∩ identified for one run.
pub fn true_positives(run: &DetectionRun, truth: &Truth) -> Result<BTreeSet<Triple>, EvalError> {
    let s = score(run, truth)?;
    Ok(s.correct.intersection(&s.identified).cloned().collect())
}

fn jaccard(a: &BTreeSet<Triple>, b: &BTreeSet<Triple>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        1.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

fn same_scope(a: &DetectionRun, b: &DetectionRun) -> Result<(), EvalError> {
    let ka: BTreeSet<EntryKey> = a.scope().into_keys().collect();
    let kb: BTreeSet<EntryKey> = b.scope().into_keys().collect();
    if ka == kb {
        Ok(())
    } else {
        Err(EvalError::ScopeMismatch(
            format!("{}/{}", a.variant, a.regime),
            format!("{}/{}", b.variant, b.regime),
        ))
    }
}

/// |TP_i ∩ TP_j| / |TP_i ∪ TP_j|.
pub fn overlap(a: &DetectionRun, b: &DetectionRun, truth: &Truth) -> Result<f64, EvalError> {
    same_scope(a, b)?;
    Ok(jaccard(&true_positives(a, truth)?, &true_positives(b, truth)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusive {
    pub variant: String,
    pub count: usize,
    pub denominator: usize,
    pub fraction: f64,
}

fn exclusive_from(tps: &[BTreeSet<Triple>], i: usize) -> (usize, usize) {
    let others: BTreeSet<&Triple> = tps
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .flat_map(|(_, s)| s.iter())
        .collect();
    let count = tps[i].iter().filter(|t| !others.contains(t)).count();
    let denominator = tps[i]
        .iter()
        .chain(others.iter().copied())
        .collect::<BTreeSet<_>>()
        .len();
    (count, denominator)
}

/// Correct BICs found by `runs[index]` and by no other run.
pub fn exclusive_correct(index: usize, runs: &[DetectionRun], truth: &Truth) -> Result<Exclusive, EvalError> {
    if runs.len() < 2 {
        return Err(EvalError::SingleRun);
    }
    for r in runs {
        same_scope(&runs[0], r)?;
    }
    let tps: Vec<BTreeSet<Triple>> = runs
        .iter()
        .map(|r| true_positives(r, truth))
        .collect::<Result<_, _>>()?;
    let (count, denominator) = exclusive_from(&tps, index);
    Ok(Exclusive {
        variant: runs[index].variant.clone(),
        count,
        denominator,
        fraction: if denominator == 0 {
            0.0
        } else {
            count as f64 / denominator as f64
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outlier {
    pub variant: String,
    pub regime: Regime,
    pub repo: String,
    pub fix_commit: CommitId,
    pub identified: usize,
    pub true_positives: usize,
}

/// Marks entries with more than `threshold` identified commits as skipped.
pub fn outlier_filter(
    run: &DetectionRun,
    threshold: usize,
    truth: &Truth,
) -> Result<(DetectionRun, Vec<Outlier>), EvalError> {
    if threshold == 0 {
        return Err(EvalError::BadThreshold);
    }
    let mut out = run.clone();
    let mut diags = Vec::new();
    for e in out.entries.iter_mut().filter(|e| e.skipped.is_none()) {
        if e.identified.len() > threshold {
            let tp = truth
                .get(&e.key())
                .map(|t| canonical(t, &e.identified).intersection(t).count())
                .unwrap_or(0);
            diags.push(Outlier {
                variant: run.variant.clone(),
                regime: run.regime,
                repo: e.repo.clone(),
                fix_commit: e.fix_commit.clone(),
                identified: e.identified.len(),
                true_positives: tp,
            });
            e.skipped = Some(format!("outlier: {} identified > {threshold}", e.identified.len()));
        }
    }
    Ok((out, diags))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    pub regime: Regime,
    pub variants: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: Vec<MetricsRow>,
    pub overlap: Vec<OverlapMatrix>,
    /// Per regime; empty for regimes with a single variant.
    pub exclusive: BTreeMap<Regime, Vec<Exclusive>>,
    pub outlier_threshold: Option<usize>,
    pub outliers: Vec<Outlier>,
}

/// Scores every run; runs are grouped by regime for the pairwise tables.
/// With an outlier threshold, outliers leave the metrics rows only; overlap
/// and exclusive tables always compare the unfiltered runs.
pub fn evaluate(
    runs: &[DetectionRun],
    truth: &Truth,
    outlier_threshold: Option<usize>,
) -> Result<EvalReport, EvalError> {
    let mut runs: Vec<DetectionRun> = runs.to_vec();
    runs.sort_by(|a, b| (a.regime, &a.variant).cmp(&(b.regime, &b.variant)));
    let mut scored = runs.clone();
    let mut outliers = Vec::new();
    if let Some(t) = outlier_threshold {
        for r in scored.iter_mut() {
            let (filtered, diags) = outlier_filter(r, t, truth)?;
            *r = filtered;
            outliers.extend(diags);
        }
    }
    let metrics: Vec<MetricsRow> = scored
        .par_iter()
        .map(|r| metrics_row(r, truth))
        .collect::<Result<_, _>>()?;
    let tps: Vec<BTreeSet<Triple>> = runs
        .par_iter()
        .map(|r| true_positives(r, truth))
        .collect::<Result<_, _>>()?;

    let mut overlap_tables = Vec::new();
    let mut exclusive = BTreeMap::new();
    let regimes: BTreeSet<Regime> = runs.iter().map(|r| r.regime).collect();
    for regime in regimes {
        let idx: Vec<usize> = (0..runs.len()).filter(|&i| runs[i].regime == regime).collect();
        for &i in &idx {
            same_scope(&runs[idx[0]], &runs[i])?;
        }
        let values: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| jaccard(&tps[i], &tps[j])).collect())
            .collect();
        overlap_tables.push(OverlapMatrix {
            regime,
            variants: idx.iter().map(|&i| runs[i].variant.clone()).collect(),
            values,
        });
        let group: Vec<BTreeSet<Triple>> = idx.iter().map(|&i| tps[i].clone()).collect();
        let rows = if group.len() >= 2 {
            (0..group.len())
                .map(|k| {
                    let (count, denominator) = exclusive_from(&group, k);
                    Exclusive {
                        variant: runs[idx[k]].variant.clone(),
                        count,
                        denominator,
                        fraction: if denominator == 0 {
                            0.0
                        } else {
                            count as f64 / denominator as f64
                        },
                    }
                })
                .collect()
        } else {
            Vec::new()
        };
        exclusive.insert(regime, rows);
    }
    Ok(EvalReport {
        metrics,
        overlap: overlap_tables,
        exclusive,
        outlier_threshold,
        outliers,
    })
}

// ---------------------------------------------------------------------------
// Report files

pub const METRICS_FILE: &str = "metrics.tsv";
pub const EXCLUSIVE_FILE: &str = "exclusive.tsv";
pub const OUTLIERS_FILE: &str = "outliers.tsv";
pub const SUMMARY_FILE: &str = "summary.txt";

pub const METRICS_COLUMNS: [&str; 13] = [
    "variant",
    "regime",
    "entries",
    "excluded",
    "correct",
    "identified",
    "true_positives",
    "recall",
    "precision",
    "f1",
    "macro_recall",
    "macro_precision",
    "macro_f1",
];

pub fn overlap_file(regime: Regime) -> String {
    format!("overlap_{regime}.tsv")
}

fn tsv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, EvalError> {
    csv::WriterBuilder::new()
        .delimiter(b'\t')
        .from_path(path)
        .map_err(|e| EvalError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

fn io_err(path: &Path) -> impl Fn(csv::Error) -> EvalError + '_ {
    move |e| EvalError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Writes the report tables into `dir`; floats use shortest round-trip form.
pub fn emit_report(report: &EvalReport, dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    std::fs::create_dir_all(dir).map_err(|e| EvalError::Io {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut written = Vec::new();

    let path = dir.join(METRICS_FILE);
    let mut w = tsv_writer(&path)?;
    w.write_record(METRICS_COLUMNS).map_err(io_err(&path))?;
    for m in &report.metrics {
        w.write_record([
            m.variant.clone(),
            m.regime.to_string(),
            m.entries.to_string(),
            m.excluded.to_string(),
            m.correct.to_string(),
            m.identified.to_string(),
            m.true_positives.to_string(),
            m.pooled.recall.to_string(),
            m.pooled.precision.to_string(),
            m.pooled.f1.to_string(),
            m.macro_avg.recall.to_string(),
            m.macro_avg.precision.to_string(),
            m.macro_avg.f1.to_string(),
        ])
        .map_err(io_err(&path))?;
    }
    w.flush().map_err(|e| io_err(&path)(e.into()))?;
    written.push(path);

    for table in &report.overlap {
        let path = dir.join(overlap_file(table.regime));
        let mut w = tsv_writer(&path)?;
        let header: Vec<&str> = std::iter::once("variant")
            .chain(table.variants.iter().map(String::as_str))
            .collect();
        w.write_record(&header).map_err(io_err(&path))?;
        for (v, row) in table.variants.iter().zip(&table.values) {
            let rec: Vec<String> = std::iter::once(v.clone())
                .chain(row.iter().map(f64::to_string))
                .collect();
            w.write_record(&rec).map_err(io_err(&path))?;
        }
        w.flush().map_err(|e| io_err(&path)(e.into()))?;
        written.push(path);
    }

    let path = dir.join(EXCLUSIVE_FILE);
    let mut w = tsv_writer(&path)?;
    w.write_record(["regime", "variant", "count", "denominator", "fraction"])
        .map_err(io_err(&path))?;
    for (regime, rows) in &report.exclusive {
        for x in rows {
            w.write_record([
                regime.to_string(),
                x.variant.clone(),
                x.count.to_string(),
                x.denominator.to_string(),
                x.fraction.to_string(),
            ])
            .map_err(io_err(&path))?;
        }
    }
    w.flush().map_err(|e| io_err(&path)(e.into()))?;
    written.push(path);

    if report.outlier_threshold.is_some() {
        let path = dir.join(OUTLIERS_FILE);
        let mut w = tsv_writer(&path)?;
        w.write_record([
            "regime",
            "variant",
            "repo",
            "fix_commit",
            "identified",
            "true_positives",
        ])
        .map_err(io_err(&path))?;
        for o in &report.outliers {
            w.write_record([
                o.regime.to_string(),
                o.variant.clone(),
                o.repo.clone(),
                o.fix_commit.to_string(),
                o.identified.to_string(),
                o.true_positives.to_string(),
            ])
            .map_err(io_err(&path))?;
        }
        w.flush().map_err(|e| io_err(&path)(e.into()))?;
        written.push(path);
    }

    let path = dir.join(SUMMARY_FILE);
    std::fs::write(&path, summary(report)).map_err(|e| EvalError::Io {
        path: path.clone(),
        message: e.to_string(),
    })?;
    written.push(path);
    Ok(written)
}

pub fn summary(report: &EvalReport) -> String {
    let mut s = Vec::new();
    let _ = writeln!(s, "Pooled metrics (macro averages in brackets)");
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<10} {:<15} {:>7} {:>9} {:>9} {:>9}",
        "variant", "regime", "entries", "recall", "precision", "f1"
    );
    for m in &report.metrics {
        let _ = writeln!(
            s,
            "{:<10} {:<15} {:>7} {:>9.3} {:>9.3} {:>9.3}   [{:.3} {:.3} {:.3}]",
            m.variant,
            m.regime,
            m.entries,
            m.pooled.recall,
            m.pooled.precision,
            m.pooled.f1,
            m.macro_avg.recall,
            m.macro_avg.precision,
            m.macro_avg.f1
        );
        if m.excluded > 0 {
            let _ = writeln!(s, "{:<10} {:<15} {} entries excluded", "", "", m.excluded);
        }
    }
    for (regime, rows) in &report.exclusive {
        if rows.is_empty() {
            continue;
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "Exclusively correct ({regime})");
        for x in rows {
            let _ = writeln!(s, "  {:<10} {}/{}", x.variant, x.count, x.denominator);
        }
    }
    if let Some(t) = report.outlier_threshold {
        let _ = writeln!(s);
        let _ = writeln!(s, "Outliers (more than {t} identified): {}", report.outliers.len());
        for o in &report.outliers {
            let _ = writeln!(
                s,
                "  {:<10} {:<15} {}@{} identified {} correct {}",
                o.variant,
                o.regime,
                o.repo,
                o.fix_commit.short(),
                o.identified,
                o.true_positives
            );
        }
    }
    String::from_utf8(s).expect("utf-8")
}

/// Tables read back from an emitted report directory.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedReport {
    pub metrics: Vec<MetricsRow>,
    pub overlap: Vec<OverlapMatrix>,
    pub exclusive: BTreeMap<Regime, Vec<Exclusive>>,
}

fn tsv_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), EvalError> {
    let mut r = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .from_path(path)
        .map_err(io_err(path))?;
    let header = r.headers().map_err(io_err(path))?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()
        .map_err(io_err(path))?;
    Ok((header, rows))
}

pub fn load_report(dir: &Path) -> Result<LoadedReport, EvalError> {
    let bad = |path: &Path, message: String| EvalError::Format {
        path: path.to_path_buf(),
        message,
    };
    let num = |path: &Path, s: &str| -> Result<f64, EvalError> {
        s.parse().map_err(|_| bad(path, format!("bad number {s:?}")))
    };
    let int = |path: &Path, s: &str| -> Result<usize, EvalError> {
        s.parse().map_err(|_| bad(path, format!("bad count {s:?}")))
    };
    let regime = |path: &Path, s: &str| -> Result<Regime, EvalError> { s.parse().map_err(|e: String| bad(path, e)) };

    let path = dir.join(METRICS_FILE);
    let (header, rows) = tsv_rows(&path)?;
    if header != METRICS_COLUMNS {
        return Err(bad(&path, "unexpected columns".into()));
    }
    let mut metrics = Vec::new();
    for r in rows {
        metrics.push(MetricsRow {
            variant: r[0].clone(),
            regime: regime(&path, &r[1])?,
            entries: int(&path, &r[2])?,
            excluded: int(&path, &r[3])?,
            correct: int(&path, &r[4])?,
            identified: int(&path, &r[5])?,
            true_positives: int(&path, &r[6])?,
            pooled: Metrics {
                recall: num(&path, &r[7])?,
                precision: num(&path, &r[8])?,
                f1: num(&path, &r[9])?,
            },
            macro_avg: Metrics {
                recall: num(&path, &r[10])?,
                precision: num(&path, &r[11])?,
                f1: num(&path, &r[12])?,
            },
        });
    }

    let mut overlap = Vec::new();
    for reg in Regime::ALL {
        let path = dir.join(overlap_file(reg));
        if !path.exists() {
            continue;
        }
        let (header, rows) = tsv_rows(&path)?;
        let variants: Vec<String> = header.into_iter().skip(1).collect();
        let mut values = Vec::new();
        for (k, r) in rows.iter().enumerate() {
            if r.first() != variants.get(k) {
                return Err(bad(&path, format!("row {k} label does not match header")));
            }
            values.push(r[1..].iter().map(|s| num(&path, s)).collect::<Result<Vec<_>, _>>()?);
        }
        overlap.push(OverlapMatrix {
            regime: reg,
            variants,
            values,
        });
    }

    let path = dir.join(EXCLUSIVE_FILE);
    let (_, rows) = tsv_rows(&path)?;
    let mut exclusive: BTreeMap<Regime, Vec<Exclusive>> = BTreeMap::new();
    for o in &overlap {
        exclusive.entry(o.regime).or_default();
    }
    for r in rows {
        exclusive.entry(regime(&path, &r[0])?).or_default().push(Exclusive {
            variant: r[1].clone(),
            count: int(&path, &r[2])?,
            denominator: int(&path, &r[3])?,
            fraction: num(&path, &r[4])?,
        });
    }
    Ok(LoadedReport {
        metrics,
        overlap,
        exclusive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(r: &str, f: &str) -> EntryKey {
        EntryKey {
            repo: r.into(),
            fix_commit: CommitId::parse(f).unwrap(),
        }
    }

    fn ids(xs: &[&str]) -> BTreeSet<CommitId> {
        xs.iter().map(|x| CommitId::parse(x).unwrap()).collect()
    }

    #[test]
    fn half_and_half() {
        let truth: Truth = BTreeMap::from([(key("r", "f00000"), ids(&["aaaaaa", "cccccc"]))]);
        let run = DetectionRun::from_sets(
            "B",
            Regime::None,
            &BTreeMap::from([(key("r", "f00000"), ids(&["aaaaaa", "bbbbbb"]))]),
        );
        let m = pooled_metrics(&run, &truth).unwrap();
        assert_eq!((m.recall, m.precision, m.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn abbreviations_match_the_true_bic() {
        let truth: Truth = BTreeMap::from([(key("r", "f00000"), ids(&["aaaaaa1234"]))]);
        let run = DetectionRun::from_sets(
            "B",
            Regime::None,
            &BTreeMap::from([(key("r", "f00000"), ids(&["aaaaaa1"]))]),
        );
        assert_eq!(pooled_metrics(&run, &truth).unwrap().recall, 1.0);
    }

    #[test]
    fn regime_names() {
        for r in Regime::ALL {
            assert_eq!(r.name().parse::<Regime>().unwrap(), r);
        }
        assert!("later".parse::<Regime>().is_err());
    }
}
