//! Mining bug-fixing commits whose messages name the bug-inducing commit.
//!
//! A message passes the word pre-filter, is split into sentences with
//! dependency trees (read from precomputed parses), and each hash mention is
//! checked by H1 and then H2 or H3. Accepted records are de-duplicated across
//! forks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::repo::CommitId;

mod conll;
mod dedupe;
mod events;
mod proximity;
mod stream;

pub use conll::{write_conll, ParseError, ParseIndex, SentenceTree, Token};
pub use dedupe::{dedupe, ForkIndex};
pub use events::{read_events, read_gharchive, write_events, CommitEvent, EventError};
pub use proximity::analyze_proximity;
pub use stream::{mine_stream, MineOptions, MiningOutcome, RunReport};

pub const FIX_WORDS: [&str; 2] = ["fix", "solve"];
pub const BUG_WORDS: [&str; 5] = ["bug", "issue", "problem", "error", "misfeature"];
pub const H2_STOPWORDS: [&str; 2] = ["attempt", "test"];
pub const H3_STOPWORDS: [&str; 10] = [
    "was", "been", "seem", "solved", "fixed", "try", "trie", "by", "attempt", "test",
];
pub const EXCLUSION_WORD: &str = "merge";

/// Stem used for prefix matching of a lexicon word: `solve` → `solv`,
/// `introduce` → `introduc`, so that `solving` and `introducing` match.
fn stem(word: &str) -> &str {
    word.strip_suffix('e').filter(|s| s.len() >= 3).unwrap_or(word)
}

/// Lexicon match on a token: by lemma, or by surface-form prefix.
pub fn matches_word(form: &str, lemma: &str, word: &str) -> bool {
    let form = form.to_lowercase();
    let lemma = lemma.to_lowercase();
    lemma == word || form.starts_with(stem(word))
}

/// Stop-word match. Stop-words are surface forms (`fixed`, `solved` must not
/// collide with the lemma of the fix words), so only the surface form is
/// consulted: exact for short words, prefix for words of four or more
/// letters (`trie` → `tried`, `tries`; `test` → `tests`).
pub fn matches_stopword(form: &str, stop: &str) -> bool {
    let form = form.to_lowercase();
    if stop.len() >= 4 {
        form.starts_with(stop)
    } else {
        form == stop
    }
}

fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
}

/// Outcome of the word pre-filter, in the order the checks are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prefilter {
    Pass,
    Merge,
    NoFixWord,
    NoBugWord,
}

pub fn prefilter(message: &str) -> Prefilter {
    let ws: Vec<String> = words(message).collect();
    if ws.iter().any(|w| w.starts_with(EXCLUSION_WORD)) {
        return Prefilter::Merge;
    }
    if !ws.iter().any(|w| FIX_WORDS.iter().any(|f| w.starts_with(stem(f)))) {
        return Prefilter::NoFixWord;
    }
    if !ws.iter().any(|w| BUG_WORDS.iter().any(|b| w.starts_with(b))) {
        return Prefilter::NoBugWord;
    }
    Prefilter::Pass
}

/// True iff the message has a fix word and a bug word and never says "merge".
pub fn word_prefilter(message: &str) -> bool {
    prefilter(message) == Prefilter::Pass
}

/// Word-bounded runs of 6–40 lowercase hex digits, in order of appearance.
pub fn extract_hashes(text: &str) -> Vec<CommitId> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|w| crate::repo::is_commit_hash(w))
        .filter_map(|w| CommitId::parse(w).ok())
        .collect()
}

fn is_hash_token(form: &str) -> bool {
    crate::repo::is_commit_hash(form)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    H2,
    H3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum H1Failure {
    NoHash,
    StartsWithHash,
    Revert,
}

/// H1 on one sentence.
pub fn h1_filter(tree: &SentenceTree) -> Result<(), H1Failure> {
    let hash_tokens: Vec<usize> = tree
        .tokens
        .iter()
        .filter(|t| is_hash_token(&t.form))
        .map(|t| t.index)
        .collect();
    if hash_tokens.is_empty() && extract_hashes(&tree.text).is_empty() {
        return Err(H1Failure::NoHash);
    }
    let starts_with_hash = tree.tokens.first().is_some_and(|t| is_hash_token(&t.form))
        || words(&tree.text)
            .next()
            .is_some_and(|w| crate::repo::is_commit_hash(&w));
    if starts_with_hash {
        return Err(H1Failure::StartsWithHash);
    }
    let reverted = hash_tokens.iter().any(|&h| {
        tree.ancestors(h)
            .iter()
            .any(|&a| matches_word(&tree.token(a).form, &tree.token(a).lemma, "revert"))
    });
    if reverted {
        return Err(H1Failure::Revert);
    }
    Ok(())
}

fn any_word(tree: &SentenceTree, idx: &[usize], lexicon: &[&str]) -> bool {
    idx.iter().any(|&i| {
        let t = tree.token(i);
        lexicon.iter().any(|w| matches_word(&t.form, &t.lemma, w))
    })
}

fn any_stop(tree: &SentenceTree, idx: &[usize], stops: &[&str]) -> bool {
    idx.iter()
        .any(|&i| stops.iter().any(|s| matches_stopword(&tree.token(i).form, s)))
}

pub fn has_introduce_ancestor(tree: &SentenceTree, hash_token: usize) -> bool {
    any_word(tree, &tree.ancestors(hash_token), &["introduce"])
}

/// H2 for the hash at token `hash_token`.
pub fn h2_filter(tree: &SentenceTree, hash_token: usize) -> bool {
    let anc = tree.ancestors(hash_token);
    let children = tree.children(hash_token);
    if !any_word(tree, &anc, &["introduce"]) {
        return false;
    }
    let fix_anc = any_word(tree, &anc, &FIX_WORDS);
    let bug_anc = any_word(tree, &anc, &BUG_WORDS);
    let fix_child = any_word(tree, &children, &FIX_WORDS);
    let bug_child = any_word(tree, &children, &BUG_WORDS);
    let words_present = (fix_anc || fix_child) && (bug_anc || bug_child) && (fix_anc || bug_anc);
    words_present && !any_stop(tree, &anc, &H2_STOPWORDS)
}

/// H3 for the hash at token `hash_token`.
pub fn h3_filter(tree: &SentenceTree, hash_token: usize) -> bool {
    let anc = tree.ancestors(hash_token);
    if !(any_word(tree, &anc, &FIX_WORDS) && any_word(tree, &anc, &BUG_WORDS)) {
        return false;
    }
    if any_stop(tree, &anc, &H3_STOPWORDS) {
        return false;
    }
    let fix_tokens: Vec<usize> = anc
        .iter()
        .copied()
        .filter(|&i| {
            let t = tree.token(i);
            FIX_WORDS.iter().any(|w| matches_word(&t.form, &t.lemma, w))
        })
        .collect();
    fix_tokens.iter().all(|&f| {
        let mut deps = tree.ancestors(f);
        deps.extend(tree.children(f));
        !any_stop(tree, &deps, &H3_STOPWORDS)
    })
}

/// H2 when "introduce" governs the hash, H3 otherwise.
pub fn h2_or_h3(tree: &SentenceTree, hash_token: usize) -> Option<Rule> {
    if has_introduce_ancestor(tree, hash_token) {
        h2_filter(tree, hash_token).then_some(Rule::H2)
    } else {
        h3_filter(tree, hash_token).then_some(Rule::H3)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashVerdict {
    pub hash: CommitId,
    /// Rule that accepted the hash; `None` when it failed H2/H3.
    pub rule: Option<Rule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceAnalysis {
    pub text: String,
    /// H(s_i): every hash mentioned in the sentence.
    pub hashes: Vec<CommitId>,
    pub h1: Result<(), H1Failure>,
    pub verdicts: Vec<HashVerdict>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tree: Option<SentenceTree>,
}

impl SentenceAnalysis {
    pub fn accepted_hashes(&self) -> impl Iterator<Item = &CommitId> {
        self.verdicts.iter().filter(|v| v.rule.is_some()).map(|v| &v.hash)
    }
}

/// Applies H1 and H2/H3 to one parsed sentence.
pub fn analyze_sentence(tree: &SentenceTree) -> SentenceAnalysis {
    let mut hashes: Vec<CommitId> = tree
        .tokens
        .iter()
        .filter(|t| is_hash_token(&t.form))
        .filter_map(|t| CommitId::parse(&t.form).ok())
        .collect();
    for h in extract_hashes(&tree.text) {
        if !hashes.contains(&h) {
            hashes.push(h);
        }
    }
    let h1 = h1_filter(tree);
    let verdicts = if h1.is_ok() {
        hashes
            .iter()
            .map(|h| {
                let token = tree.tokens.iter().find(|t| t.form == h.as_str()).map(|t| t.index);
                HashVerdict {
                    hash: h.clone(),
                    rule: token.and_then(|i| h2_or_h3(tree, i)),
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    SentenceAnalysis {
        text: tree.text.clone(),
        hashes,
        h1,
        verdicts,
        tree: Some(tree.clone()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    InvalidRecord,
    MergeMessage,
    NoFixWord,
    NoBugWord,
    ParseUnavailable,
    NoHash,
    H1,
    H2H3,
    Duplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "verdict", content = "reason")]
pub enum Verdict {
    Accepted,
    Rejected(RejectReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalysisMode {
    DependencyTree,
    Proximity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageAnalysis {
    pub repo: String,
    pub commit: String,
    #[serde(flatten)]
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mode: Option<AnalysisMode>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub sentences: Vec<SentenceAnalysis>,
    /// Hashes named as bug-inducing by the accepting sentences.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub bug_inducing: Vec<CommitId>,
    /// Repository whose record was kept for the same commit.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub duplicate_of: Option<String>,
    /// Kept although its hash was duplicated with no designated main repository.
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub duplicate_warning: bool,
}

impl MessageAnalysis {
    pub fn rejected(repo: &str, commit: &str, reason: RejectReason) -> Self {
        Self {
            repo: repo.to_string(),
            commit: commit.to_string(),
            verdict: Verdict::Rejected(reason),
            mode: None,
            sentences: Vec::new(),
            bug_inducing: Vec::new(),
            duplicate_of: None,
            duplicate_warning: false,
        }
    }

    pub fn is_accepted(&self) -> bool {
        self.verdict == Verdict::Accepted
    }
}

/// Full analysis of one message given its sentence trees.
pub fn analyze_message(repo: &str, commit: &str, message: &str, trees: Option<&[SentenceTree]>) -> MessageAnalysis {
    match prefilter(message) {
        Prefilter::Pass => {}
        Prefilter::Merge => return MessageAnalysis::rejected(repo, commit, RejectReason::MergeMessage),
        Prefilter::NoFixWord => return MessageAnalysis::rejected(repo, commit, RejectReason::NoFixWord),
        Prefilter::NoBugWord => return MessageAnalysis::rejected(repo, commit, RejectReason::NoBugWord),
    }
    let Some(trees) = trees else {
        return MessageAnalysis::rejected(repo, commit, RejectReason::ParseUnavailable);
    };
    let sentences: Vec<SentenceAnalysis> = trees.iter().map(analyze_sentence).collect();
    finish(repo, commit, sentences, AnalysisMode::DependencyTree)
}

pub(crate) fn finish(
    repo: &str,
    commit: &str,
    sentences: Vec<SentenceAnalysis>,
    mode: AnalysisMode,
) -> MessageAnalysis {
    let mut bug_inducing: Vec<CommitId> = Vec::new();
    for s in &sentences {
        for h in s.accepted_hashes() {
            if !bug_inducing.contains(h) {
                bug_inducing.push(h.clone());
            }
        }
    }
    let verdict = if !bug_inducing.is_empty() {
        Verdict::Accepted
    } else if sentences.iter().all(|s| s.hashes.is_empty()) {
        Verdict::Rejected(RejectReason::NoHash)
    } else if sentences.iter().all(|s| s.h1.is_err()) {
        Verdict::Rejected(RejectReason::H1)
    } else {
        Verdict::Rejected(RejectReason::H2H3)
    };
    MessageAnalysis {
        repo: repo.to_string(),
        commit: commit.to_string(),
        verdict,
        mode: Some(mode),
        sentences,
        bug_inducing,
        duplicate_of: None,
        duplicate_warning: false,
    }
}

/// Verdict counts keyed by a stable label.
pub fn tally<'a>(analyses: impl IntoIterator<Item = &'a MessageAnalysis>) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for a in analyses {
        let key = match a.verdict {
            Verdict::Accepted => "accepted".to_string(),
            Verdict::Rejected(r) => serde_json::to_value(r)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
        };
        *out.entry(key).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefilter_examples() {
        assert!(word_prefilter("fix crash bug in parser"));
        assert!(!word_prefilter("merge branch fixing a bug"));
        assert!(!word_prefilter("refactor tests"));
        assert!(word_prefilter("Solved the ISSUE"));
        assert!(word_prefilter("fixes errors"));
        assert_eq!(prefilter("Merged PR"), Prefilter::Merge);
        assert_eq!(prefilter("bug report"), Prefilter::NoFixWord);
        assert_eq!(prefilter("fixup"), Prefilter::NoBugWord);
    }

    #[test]
    fn hash_extraction() {
        assert_eq!(
            extract_hashes("introduced by 2508e12"),
            vec![CommitId::parse("2508e12").unwrap()]
        );
        assert_eq!(extract_hashes("see deadbeefcafe and 0123456789abcdef").len(), 2);
        assert!(extract_hashes("cafe").is_empty());
        assert!(extract_hashes("x2508e12 2508e12y 2508E12 v_2508e12").is_empty());
        assert_eq!(extract_hashes("(2508e12).").len(), 1);
        assert!(extract_hashes(&"a".repeat(41)).is_empty());
    }

    #[test]
    fn lexicon_matching() {
        assert!(matches_word("fixes", "fix", "fix"));
        assert!(matches_word("Solving", "_", "solve"));
        assert!(matches_word("introducing", "introduce", "introduce"));
        assert!(matches_word("bugs", "bug", "bug"));
        assert!(!matches_word("debug", "debug", "bug"));
        assert!(matches_stopword("tried", "trie"));
        assert!(matches_stopword("Tests", "test"));
        assert!(matches_stopword("by", "by"));
        assert!(!matches_stopword("bypass", "by"));
        assert!(!matches_stopword("fixes", "fixed"));
    }

    fn tree(text: &str, rows: Vec<(&str, &str, usize, &str)>) -> SentenceTree {
        SentenceTree::from_rows(text, rows).unwrap()
    }

    #[test]
    fn h1_examples() {
        let starts = tree(
            "2508e12 fixed the build",
            vec![
                ("2508e12", "2508e12", 2, "nsubj"),
                ("fixed", "fix", 0, "ROOT"),
                ("the", "the", 4, "det"),
                ("build", "build", 2, "dobj"),
            ],
        );
        assert_eq!(h1_filter(&starts), Err(H1Failure::StartsWithHash));
        let revert = tree(
            "revert 2508e12 due to crashes",
            vec![
                ("revert", "revert", 0, "ROOT"),
                ("2508e12", "2508e12", 1, "dobj"),
                ("due", "due", 1, "prep"),
                ("to", "to", 3, "pcomp"),
                ("crashes", "crash", 3, "pobj"),
            ],
        );
        assert_eq!(h1_filter(&revert), Err(H1Failure::Revert));
        let none = tree(
            "fix the bug",
            vec![
                ("fix", "fix", 0, "ROOT"),
                ("the", "the", 3, "det"),
                ("bug", "bug", 1, "dobj"),
            ],
        );
        assert_eq!(h1_filter(&none), Err(H1Failure::NoHash));
    }

    #[test]
    fn h3_examples() {
        // solve the error caused in a1b2c3d4
        let ok = tree(
            "solve the error caused in a1b2c3d4",
            vec![
                ("solve", "solve", 0, "ROOT"),
                ("the", "the", 3, "det"),
                ("error", "error", 1, "dobj"),
                ("caused", "cause", 3, "acl"),
                ("in", "in", 4, "prep"),
                ("a1b2c3d4", "a1b2c3d4", 5, "pobj"),
            ],
        );
        assert!(h3_filter(&ok, 6));
        assert_eq!(analyze_sentence(&ok).accepted_hashes().count(), 1);
        // bug was fixed in 1234abcd
        let was = tree(
            "bug was fixed in 1234abcd",
            vec![
                ("bug", "bug", 3, "nsubjpass"),
                ("was", "be", 3, "auxpass"),
                ("fixed", "fix", 0, "ROOT"),
                ("in", "in", 3, "prep"),
                ("1234abcd", "1234abcd", 4, "pobj"),
            ],
        );
        assert!(!h3_filter(&was, 5));
    }
}
