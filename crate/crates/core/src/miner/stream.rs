use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::repo::is_commit_hash;

use super::{
    analyze_message, analyze_proximity, dedupe, prefilter, tally, CommitEvent, ForkIndex, MessageAnalysis, ParseIndex,
    Prefilter, RejectReason,
};

#[derive(Debug, Clone, Default)]
pub struct MineOptions {
    /// Fall back to proximity analysis when a message has no parse.
    pub proximity: bool,
    pub forks: ForkIndex,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub events: usize,
    pub passed_prefilter: usize,
    pub accepted_before_dedupe: usize,
    pub accepted: usize,
    /// Messages analysed in proximity mode.
    pub degraded: usize,
    pub duplicate_warnings: usize,
    /// Record counts per verdict label.
    pub verdicts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default)]
pub struct MiningOutcome {
    /// One record per input event, in input order.
    pub records: Vec<MessageAnalysis>,
    pub report: RunReport,
}

impl MiningOutcome {
    pub fn accepted(&self) -> impl Iterator<Item = &MessageAnalysis> {
        self.records.iter().filter(|r| r.is_accepted())
    }

    /// Newline-delimited JSON, one record per line.
    pub fn write_ndjson<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn analyze_event(ev: &CommitEvent, parses: Option<&ParseIndex>, proximity: bool) -> MessageAnalysis {
    let sha = ev.sha.to_ascii_lowercase();
    if ev.repo_full_name.trim().is_empty() || !is_commit_hash(&sha) {
        return MessageAnalysis::rejected(&ev.repo_full_name, &ev.sha, RejectReason::InvalidRecord);
    }
    let trees = parses.and_then(|p| p.get(&sha));
    if trees.is_none() && proximity && prefilter(&ev.message) == Prefilter::Pass {
        return analyze_proximity(&ev.repo_full_name, &sha, &ev.message);
    }
    analyze_message(&ev.repo_full_name, &sha, &ev.message, trees)
}

/// Pre-filter, heuristics and fork de-duplication over a batch of events.
pub fn mine_stream(events: &[CommitEvent], parses: Option<&ParseIndex>, opts: &MineOptions) -> MiningOutcome {
    let analysed: Vec<MessageAnalysis> = events
        .par_iter()
        .map(|ev| analyze_event(ev, parses, opts.proximity))
        .collect();
    let passed_prefilter = events
        .iter()
        .zip(&analysed)
        .filter(|(ev, a)| {
            a.verdict != super::Verdict::Rejected(RejectReason::InvalidRecord)
                && prefilter(&ev.message) == Prefilter::Pass
        })
        .count();
    let accepted_before_dedupe = analysed.iter().filter(|a| a.is_accepted()).count();
    let records = dedupe(analysed, &opts.forks);
    let report = RunReport {
        events: events.len(),
        passed_prefilter,
        accepted_before_dedupe,
        accepted: records.iter().filter(|r| r.is_accepted()).count(),
        degraded: records
            .iter()
            .filter(|r| r.mode == Some(super::AnalysisMode::Proximity))
            .count(),
        duplicate_warnings: records.iter().filter(|r| r.duplicate_warning).count(),
        verdicts: tally(&records),
    };
    MiningOutcome { records, report }
}
