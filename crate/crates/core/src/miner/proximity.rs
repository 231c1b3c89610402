//! Degraded analysis for messages with no dependency parse.
//!
//! Lower fidelity than the tree heuristics: word order stands in for
//! dependency structure. For each hash, the six words before it form the
//! window. A revert word in the window fails H1. When the window contains an
//! "introduce" word, the fix and bug words must be in the window and the H2
//! stop-words must not; otherwise the H3 stop-word list applies to the window.

use crate::repo::{is_commit_hash, CommitId};

use super::{
    finish, matches_stopword, AnalysisMode, H1Failure, HashVerdict, MessageAnalysis, Rule, SentenceAnalysis, BUG_WORDS,
    FIX_WORDS, H2_STOPWORDS, H3_STOPWORDS,
};

pub const WINDOW: usize = 6;

fn split_sentences(message: &str) -> Vec<&str> {
    message
        .split(['.', '!', '?', '\n'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

fn sentence_words(sentence: &str) -> Vec<&str> {
    sentence
        .split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|w| !w.is_empty())
        .collect()
}

fn has_prefix(window: &[&str], words: &[&str]) -> bool {
    window.iter().any(|w| {
        let w = w.to_lowercase();
        words.iter().any(|p| w.starts_with(super::stem(p)))
    })
}

fn has_stop(window: &[&str], stops: &[&str]) -> bool {
    window.iter().any(|w| stops.iter().any(|s| matches_stopword(w, s)))
}

fn analyze_sentence(sentence: &str) -> SentenceAnalysis {
    let ws = sentence_words(sentence);
    let positions: Vec<usize> = (0..ws.len()).filter(|&i| is_commit_hash(ws[i])).collect();
    let mut hashes: Vec<CommitId> = Vec::new();
    for &p in &positions {
        let h = CommitId::parse(ws[p]).expect("checked hash");
        if !hashes.contains(&h) {
            hashes.push(h);
        }
    }
    let window = |p: usize| &ws[p.saturating_sub(WINDOW)..p];
    let h1 = if positions.is_empty() {
        Err(H1Failure::NoHash)
    } else if positions[0] == 0 {
        Err(H1Failure::StartsWithHash)
    } else if positions.iter().any(|&p| has_prefix(window(p), &["revert"])) {
        Err(H1Failure::Revert)
    } else {
        Ok(())
    };
    let mut verdicts: Vec<HashVerdict> = Vec::new();
    if h1.is_ok() {
        for &p in &positions {
            let w = window(p);
            let words_ok = has_prefix(w, &FIX_WORDS) && has_prefix(w, &BUG_WORDS);
            let rule = if has_prefix(w, &["introduce"]) {
                (words_ok && !has_stop(w, &H2_STOPWORDS)).then_some(Rule::H2)
            } else {
                (words_ok && !has_stop(w, &H3_STOPWORDS)).then_some(Rule::H3)
            };
            let hash = CommitId::parse(ws[p]).expect("checked hash");
            match verdicts.iter_mut().find(|v| v.hash == hash) {
                Some(v) => v.rule = v.rule.or(rule),
                None => verdicts.push(HashVerdict { hash, rule }),
            }
        }
    }
    SentenceAnalysis {
        text: sentence.to_string(),
        hashes,
        h1,
        verdicts,
        tree: None,
    }
}

/// Proximity-mode analysis of a message that already passed the pre-filter.
pub fn analyze_proximity(repo: &str, commit: &str, message: &str) -> MessageAnalysis {
    let sentences = split_sentences(message).into_iter().map(analyze_sentence).collect();
    finish(repo, commit, sentences, AnalysisMode::Proximity)
}
