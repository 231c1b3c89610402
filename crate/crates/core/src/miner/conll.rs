//! Dependency trees in a CoNLL-style columnar format.
//!
//! One token per line, sentences separated by blank lines. Two layouts are
//! accepted:
//!
//! * five columns: `index form lemma head relation`
//! * CoNLL-U (ten columns): `ID FORM LEMMA UPOS XPOS FEATS HEAD DEPREL DEPS MISC`
//!
//! Columns are tab-separated; lines without tabs are split on whitespace.
//! Multiword ranges (`3-4`) and empty nodes (`5.1`) are skipped. Comment lines
//! `# commit = <sha>` start a new message group and `# text = ...` sets the
//! sentence text; other comments are ignored. Heads use 0 for the root.

use std::collections::HashMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("sentence {text:?}: {message}")]
    InvalidTree { text: String, message: String },
    #[error("reading parses: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    /// Index of the governing token; 0 for the root.
    pub head: usize,
    pub rel: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceTree {
    pub text: String,
    pub tokens: Vec<Token>,
}

impl SentenceTree {
    /// Builds and validates a tree from `(form, lemma, head, rel)` rows.
    pub fn from_rows<S: Into<String>>(text: S, rows: Vec<(&str, &str, usize, &str)>) -> Result<Self, ParseError> {
        let tokens = rows
            .into_iter()
            .enumerate()
            .map(|(i, (form, lemma, head, rel))| Token {
                index: i + 1,
                form: form.to_string(),
                lemma: lemma.to_string(),
                head,
                rel: rel.to_string(),
            })
            .collect();
        let tree = SentenceTree {
            text: text.into(),
            tokens,
        };
        tree.validate()?;
        Ok(tree)
    }

    pub fn validate(&self) -> Result<(), ParseError> {
        let bad = |message: String| ParseError::InvalidTree {
            text: self.text.clone(),
            message,
        };
        let n = self.tokens.len();
        if n == 0 {
            return Err(bad("empty sentence".into()));
        }
        for (i, t) in self.tokens.iter().enumerate() {
            if t.index != i + 1 {
                return Err(bad(format!("token {} out of sequence", t.index)));
            }
            if t.head > n {
                return Err(bad(format!("token {} has head {} beyond {n}", t.index, t.head)));
            }
        }
        let roots = self.tokens.iter().filter(|t| self.is_root(t.index)).count();
        if roots != 1 {
            return Err(bad(format!("{roots} roots")));
        }
        for t in &self.tokens {
            let mut seen = 0;
            let mut cur = t.index;
            while let Some(p) = self.parent(cur) {
                seen += 1;
                if seen > n {
                    return Err(bad(format!("cycle through token {}", t.index)));
                }
                cur = p;
            }
        }
        Ok(())
    }

    pub fn token(&self, index: usize) -> &Token {
        &self.tokens[index - 1]
    }

    fn is_root(&self, index: usize) -> bool {
        let h = self.token(index).head;
        h == 0 || h == index
    }

    pub fn parent(&self, index: usize) -> Option<usize> {
        (!self.is_root(index)).then(|| self.token(index).head)
    }

    /// Governors of `index`, nearest first.
    pub fn ancestors(&self, index: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = index;
        while let Some(p) = self.parent(cur) {
            if out.contains(&p) || out.len() > self.tokens.len() {
                break;
            }
            out.push(p);
            cur = p;
        }
        out
    }

    /// Direct dependents of `index`.
    pub fn children(&self, index: usize) -> Vec<usize> {
        self.tokens
            .iter()
            .filter(|t| t.index != index && t.head == index)
            .map(|t| t.index)
            .collect()
    }

    pub fn forms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.form.as_str()).collect()
    }
}

/// Sentence trees grouped by commit hash.
#[derive(Debug, Clone, Default)]
pub struct ParseIndex {
    by_commit: HashMap<String, Vec<SentenceTree>>,
}

impl ParseIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, commit: &str, sentences: Vec<SentenceTree>) {
        self.by_commit
            .entry(commit.to_ascii_lowercase())
            .or_default()
            .extend(sentences);
    }

    pub fn get(&self, commit: &str) -> Option<&[SentenceTree]> {
        self.by_commit.get(&commit.to_ascii_lowercase()).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.by_commit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_commit.is_empty()
    }

    pub fn parse_str(text: &str) -> Result<Self, ParseError> {
        Self::read(text.as_bytes())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, ParseError> {
        let mut index = ParseIndex::new();
        let mut commit: Option<String> = None;
        let mut text = String::new();
        let mut rows: Vec<Token> = Vec::new();

        let mut flush = |commit: &Option<String>, text: &mut String, rows: &mut Vec<Token>, line: usize| {
            if rows.is_empty() {
                text.clear();
                return Ok(());
            }
            let Some(c) = commit else {
                return Err(ParseError::Syntax {
                    line,
                    message: "sentence before any `# commit =` header".into(),
                });
            };
            let sentence_text = if text.is_empty() {
                rows.iter().map(|t| t.form.as_str()).collect::<Vec<_>>().join(" ")
            } else {
                std::mem::take(text)
            };
            let tree = SentenceTree {
                text: sentence_text,
                tokens: std::mem::take(rows),
            };
            tree.validate()?;
            index.insert(c, vec![tree]);
            text.clear();
            Ok(())
        };

        let mut line_no = 0;
        for line in reader.lines() {
            line_no += 1;
            let line = line.map_err(|e| ParseError::Io(e.to_string()))?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                flush(&commit, &mut text, &mut rows, line_no)?;
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                let comment = comment.trim();
                if let Some((key, value)) = comment.split_once('=') {
                    match key.trim() {
                        "commit" | "sha" => {
                            flush(&commit, &mut text, &mut rows, line_no)?;
                            commit = Some(value.trim().to_string());
                        }
                        "text" => text = value.trim().to_string(),
                        _ => {}
                    }
                }
                continue;
            }
            let cols: Vec<&str> = if line.contains('\t') {
                line.split('\t').collect()
            } else {
                line.split_whitespace().collect()
            };
            let (id, form, lemma, head, rel) = match cols.len() {
                5 => (cols[0], cols[1], cols[2], cols[3], cols[4]),
                n if n >= 8 => (cols[0], cols[1], cols[2], cols[6], cols[7]),
                n => {
                    return Err(ParseError::Syntax {
                        line: line_no,
                        message: format!("expected 5 or 10 columns, found {n}"),
                    })
                }
            };
            if id.contains('-') || id.contains('.') {
                continue;
            }
            let num = |s: &str, what: &str| {
                s.parse::<usize>().map_err(|_| ParseError::Syntax {
                    line: line_no,
                    message: format!("bad {what} {s:?}"),
                })
            };
            let index = num(id, "index")?;
            let head = num(head, "head")?;
            let lemma = if lemma == "_" { form } else { lemma };
            rows.push(Token {
                index,
                form: form.to_string(),
                lemma: lemma.to_string(),
                head,
                rel: rel.to_string(),
            });
        }
        flush(&commit, &mut text, &mut rows, line_no + 1)?;
        Ok(index)
    }
}

/// Renders trees in the five-column layout understood by [`ParseIndex::read`].
pub fn write_conll(commit: &str, sentences: &[SentenceTree]) -> String {
    let mut out = format!("# commit = {commit}\n");
    for s in sentences {
        out.push_str(&format!("# text = {}\n", s.text));
        for t in &s.tokens {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                t.index, t.form, t.lemma, t.head, t.rel
            ));
        }
        out.push('\n');
    }
    out
}
