//! Whitespace-insensitive change detection.
//!
//! Two texts are cosmetically equal when their token streams match. Tokens are
//! word runs, same-line quoted literals (kept verbatim, whitespace included),
//! multi-character operators and single punctuation characters. Whitespace
//! between tokens is ignored, so `x=1;` and `x = 1;` compare equal while
//! `a b` and `ab` do not.

use std::collections::BTreeSet;

use crate::repo::{CommitId, RepoSnapshot, Result};

const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "===", "!==", "**=", "...", "<=>", "//=", "??=", "->", "=>", "::", "++", "--", "&&",
    "||", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "**", "//", "/*", "*/",
    "?.", "??", "..",
];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

pub fn tokenize(text: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut iter = text.char_indices().peekable();
    while let Some(&(start, c)) = iter.peek() {
        if c.is_whitespace() {
            iter.next();
            continue;
        }
        if is_word_char(c) {
            let mut end = start;
            while let Some(&(i, ch)) = iter.peek() {
                if !is_word_char(ch) {
                    break;
                }
                end = i + ch.len_utf8();
                iter.next();
            }
            tokens.push(&text[start..end]);
            continue;
        }
        if matches!(c, '"' | '\'' | '`') {
            if let Some(end) = closing_quote(text, start, c) {
                tokens.push(&text[start..end]);
                while iter.peek().is_some_and(|&(i, _)| i < end) {
                    iter.next();
                }
                continue;
            }
        }
        if let Some(op) = OPERATORS.iter().find(|op| bytes[start..].starts_with(op.as_bytes())) {
            tokens.push(&text[start..start + op.len()]);
            for _ in 0..op.len() {
                iter.next();
            }
            continue;
        }
        tokens.push(&text[start..start + c.len_utf8()]);
        iter.next();
    }
    tokens
}

/// Byte offset just past the quote closing the literal opened at `start`,
/// provided it closes on the same line.
fn closing_quote(text: &str, start: usize, quote: char) -> Option<usize> {
    let mut escaped = false;
    for (i, c) in text[start + 1..].char_indices() {
        if c == '\n' {
            return None;
        }
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == quote {
            return Some(start + 1 + i + c.len_utf8());
        }
    }
    None
}

pub fn same_tokens(a: &str, b: &str) -> bool {
    tokenize(a) == tokenize(b)
}

/// True when `before` and `after` differ at most in whitespace.
///
/// An empty string on exactly one side is an addition or removal, never
/// cosmetic.
pub fn is_cosmetic_change(before: &str, after: &str) -> bool {
    if before.is_empty() != after.is_empty() {
        return false;
    }
    same_tokens(before, after)
}

/// For the removed lines of one hunk, whether each one disappeared only
/// cosmetically.
///
/// If the whole hunk is token-equal every removed line is cosmetic (this
/// covers joins, splits and moved braces). Otherwise a removed line is
/// cosmetic when it pairs, in an order-preserving alignment, with an added
/// line carrying the same tokens. Lines without tokens count as cosmetic.
pub fn cosmetic_removed_lines<R, A>(removed: &[R], added: &[A]) -> Vec<bool>
where
    R: AsRef<str>,
    A: AsRef<str>,
{
    let joined = |lines: &[&str]| lines.join("\n");
    let r: Vec<&str> = removed.iter().map(AsRef::as_ref).collect();
    let a: Vec<&str> = added.iter().map(AsRef::as_ref).collect();
    if !added.is_empty() && same_tokens(&joined(&r), &joined(&a)) {
        return vec![true; removed.len()];
    }
    let r_tok: Vec<Vec<&str>> = r.iter().map(|l| tokenize(l)).collect();
    let a_tok: Vec<Vec<&str>> = a.iter().map(|l| tokenize(l)).collect();
    let r_idx: Vec<usize> = (0..r.len()).filter(|&i| !r_tok[i].is_empty()).collect();
    let a_idx: Vec<usize> = (0..a.len()).filter(|&j| !a_tok[j].is_empty()).collect();

    let n = r_idx.len();
    let m = a_idx.len();
    let mut table = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            table[i][j] = if r_tok[r_idx[i]] == a_tok[a_idx[j]] {
                table[i + 1][j + 1] + 1
            } else {
                table[i + 1][j].max(table[i][j + 1])
            };
        }
    }
    let mut out: Vec<bool> = r_tok.iter().map(|t| t.is_empty()).collect();
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if r_tok[r_idx[i]] == a_tok[a_idx[j]] {
            out[r_idx[i]] = true;
            i += 1;
            j += 1;
        } else if table[i + 1][j] >= table[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Whether `commit` changes nothing but whitespace relative to its first
/// parent.
///
/// Every touched file must exist on both sides with token-equal full
/// contents. Root commits, commits adding or deleting files, binary changes
/// and commits with no diff at all are not cosmetic.
pub fn is_cosmetic_commit(repo: &RepoSnapshot, commit: &CommitId) -> Result<bool> {
    let Some(parent) = repo.first_parent(commit)? else {
        return Ok(false);
    };
    let hunks = repo.diff_against_parent(commit, &parent)?;
    if hunks.is_empty() {
        return Ok(false);
    }
    let mut pairs = BTreeSet::new();
    for hunk in &hunks {
        match (&hunk.file_pre, &hunk.file_post) {
            (Some(pre), Some(post)) if !hunk.binary => {
                pairs.insert((pre.clone(), post.clone()));
            }
            _ => return Ok(false),
        }
    }
    for (pre, post) in pairs {
        let before = repo.file_content(&parent, &pre)?.unwrap_or_default();
        let after = repo.file_content(commit, &post)?.unwrap_or_default();
        if !same_tokens(&before, &after) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens() {
        assert_eq!(tokenize("x=1;"), vec!["x", "=", "1", ";"]);
        assert_eq!(tokenize("a >>= \"s  t\" // c"), vec!["a", ">>=", "\"s  t\"", "//", "c"]);
        assert_eq!(tokenize("'unterminated"), vec!["'", "unterminated"]);
    }

    #[test]
    fn whitespace_only_changes() {
        assert!(is_cosmetic_change("x=1;", "x = 1;"));
        assert!(is_cosmetic_change("\tfoo(a,b);", "    foo( a, b );"));
        assert!(is_cosmetic_change("", ""));
        assert!(!is_cosmetic_change("", "   "));
        assert!(!is_cosmetic_change("a b", "ab"));
        assert!(!is_cosmetic_change("s = \"a b\";", "s = \"a  b\";"));
        assert!(!is_cosmetic_change("x = 1;", "x = 2;"));
        assert!(!is_cosmetic_change("a + +b", "a ++b"));
    }

    #[test]
    fn moved_brace_is_cosmetic_at_hunk_level() {
        let removed = ["if (x) {"];
        let added = ["if (x)", "{"];
        assert_eq!(cosmetic_removed_lines(&removed, &added), vec![true]);
    }

    #[test]
    fn mixed_hunk_aligns_lines() {
        let removed = ["int a=1;", "int b = 2;", "", "int c = 3;"];
        let added = ["int a = 1;", "int b = 20;", "int c=3;"];
        assert_eq!(cosmetic_removed_lines(&removed, &added), vec![true, false, true, true]);
    }

    #[test]
    fn pure_deletion_is_not_cosmetic() {
        let removed = ["int a = 1;"];
        let added: [&str; 0] = [];
        assert_eq!(cosmetic_removed_lines(&removed, &added), vec![false]);
    }
}
