//! Seeded random histories with known bug-introduction points.
//!
//! Every line of the generated C file is a statement built from a token
//! list, rendered in one of two whitespace styles. A "reformat" commit only
//! flips styles, so it is cosmetic; an "edit" commit replaces the tokens of
//! some lines and becomes their semantic origin. Fix commits edit code lines
//! and record, as ground truth, the semantic origins of the lines they touch.

use std::collections::BTreeSet;
use std::path::Path;

use git2::Oid;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{join_lines, ScriptedRepo};

#[derive(Debug, Clone)]
struct Line {
    tokens: Vec<String>,
    spaced: bool,
    comment: bool,
    /// Index into `RandomHistory::commits` of the last non-cosmetic change.
    semantic_origin: usize,
}

impl Line {
    fn render(&self) -> String {
        if self.comment {
            return format!("// {}", self.tokens.join(" "));
        }
        if self.spaced {
            format!("    {};", self.tokens.join(" "))
        } else {
            format!("  {};", compact(&self.tokens))
        }
    }
}

/// Joins tokens without whitespace except between two word tokens.
fn compact(tokens: &[String]) -> String {
    let mut out = String::new();
    for token in tokens {
        let word_start = token.chars().next().is_some_and(|c| c.is_alphanumeric() || c == '_');
        let word_end = out.chars().last().is_some_and(|c| c.is_alphanumeric() || c == '_');
        if word_start && word_end {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}

#[derive(Debug, Clone)]
pub struct PlantedFix {
    pub fix: Oid,
    pub true_bics: BTreeSet<Oid>,
    /// 1-based line numbers (pre-image) the fix rewrote.
    pub touched_lines: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Initial,
    Edit,
    Reformat,
    Comment,
    SideBranch,
    Merge,
    Fix,
}

pub struct RandomHistory {
    pub repo: ScriptedRepo,
    /// Every commit in creation order, with what produced it.
    pub commits: Vec<(Oid, StepKind, i64)>,
    pub fixes: Vec<PlantedFix>,
}

pub const FILE: &str = "src/main.c";

struct Generator {
    rng: ChaCha8Rng,
    lines: Vec<Line>,
    fresh: usize,
    time: i64,
}

impl Generator {
    fn fresh_tokens(&mut self) -> Vec<String> {
        self.fresh += 1;
        let ops = ["+", "-", "*", "^"];
        let op = ops[self.rng.gen_range(0..ops.len())];
        vec![
            "int".to_string(),
            format!("v{}", self.fresh),
            "=".to_string(),
            format!("f{}(a)", self.rng.gen_range(0..50)),
            op.to_string(),
            format!("{}", self.rng.gen_range(1..1000)),
        ]
    }

    fn render(&self) -> String {
        let rendered: Vec<String> = self.lines.iter().map(Line::render).collect();
        join_lines(&rendered)
    }

    fn tick(&mut self) -> i64 {
        // gaps straddle the 60 s best-case delta on purpose
        self.time += self.rng.gen_range(20..4_000);
        self.time
    }

    fn code_lines(&self) -> Vec<usize> {
        (0..self.lines.len()).filter(|i| !self.lines[*i].comment).collect()
    }
}

/// Builds a random history at `dir` from `seed`.
pub fn generate(dir: impl AsRef<Path>, seed: u64) -> RandomHistory {
    let mut repo = ScriptedRepo::init(dir);
    let mut gen = Generator {
        rng: ChaCha8Rng::seed_from_u64(seed),
        lines: Vec::new(),
        fresh: 0,
        time: 1_500_000_000,
    };
    let mut commits: Vec<(Oid, StepKind, i64)> = Vec::new();
    let mut fixes = Vec::new();

    let initial_len = gen.rng.gen_range(8..20);
    for _ in 0..initial_len {
        let tokens = gen.fresh_tokens();
        let spaced = gen.rng.gen_bool(0.5);
        gen.lines.push(Line {
            tokens,
            spaced,
            comment: false,
            semantic_origin: 0,
        });
    }
    repo.write(FILE, &gen.render());
    let t = gen.tick();
    commits.push((repo.commit("initial import", t), StepKind::Initial, t));

    let steps = gen.rng.gen_range(4..12);
    for step in 0..steps {
        let roll = gen.rng.gen_range(0..100);
        let idx = commits.len();
        if roll < 40 {
            // semantic edit of 1..3 lines, sometimes inserting a new one
            let code = gen.code_lines();
            let n = gen.rng.gen_range(1..=3.min(code.len()));
            for &i in code.choose_multiple(&mut gen.rng, n) {
                let tokens = gen.fresh_tokens();
                gen.lines[i].tokens = tokens;
                gen.lines[i].semantic_origin = idx;
            }
            if gen.rng.gen_bool(0.3) {
                let at = gen.rng.gen_range(0..=gen.lines.len());
                let tokens = gen.fresh_tokens();
                gen.lines.insert(
                    at,
                    Line {
                        tokens,
                        spaced: true,
                        comment: false,
                        semantic_origin: idx,
                    },
                );
            }
            repo.write(FILE, &gen.render());
            let t = gen.tick();
            commits.push((repo.commit(&format!("edit step {step}"), t), StepKind::Edit, t));
        } else if roll < 60 {
            let code = gen.code_lines();
            let n = gen.rng.gen_range(1..=code.len());
            for &i in code.choose_multiple(&mut gen.rng, n) {
                gen.lines[i].spaced = !gen.lines[i].spaced;
            }
            repo.write(FILE, &gen.render());
            let t = gen.tick();
            commits.push((repo.commit("reformat", t), StepKind::Reformat, t));
        } else if roll < 72 {
            let at = gen.rng.gen_range(0..=gen.lines.len());
            gen.fresh += 1;
            let note = vec!["note".to_string(), format!("{}", gen.fresh)];
            gen.lines.insert(
                at,
                Line {
                    tokens: note,
                    spaced: false,
                    comment: true,
                    semantic_origin: idx,
                },
            );
            repo.write(FILE, &gen.render());
            let t = gen.tick();
            commits.push((repo.commit("document", t), StepKind::Comment, t));
        } else if roll < 85 {
            // side branch edits one line; main edits another; the merge
            // sometimes rewrites a third line (an "evil" merge)
            let base = repo.head().expect("head");
            let code = gen.code_lines();
            if code.len() < 3 {
                continue;
            }
            let picks: Vec<usize> = code.choose_multiple(&mut gen.rng, 3).copied().collect();
            let side_idx = commits.len();
            let side_tokens = gen.fresh_tokens();
            let mut side_lines = gen.lines.clone();
            side_lines[picks[0]].tokens = side_tokens;
            side_lines[picks[0]].semantic_origin = side_idx;
            let side_text = join_lines(&side_lines.iter().map(Line::render).collect::<Vec<_>>());
            repo.write(FILE, &side_text);
            let t = gen.tick();
            let side = repo.commit("side branch edit", t);
            commits.push((side, StepKind::SideBranch, t));

            repo.checkout(base);
            let main_idx = commits.len();
            let main_tokens = gen.fresh_tokens();
            gen.lines[picks[1]].tokens = main_tokens;
            gen.lines[picks[1]].semantic_origin = main_idx;
            repo.write(FILE, &gen.render());
            let t = gen.tick();
            commits.push((repo.commit("mainline edit", t), StepKind::Edit, t));

            let merge_idx = commits.len();
            gen.lines[picks[0]] = side_lines[picks[0]].clone();
            if gen.rng.gen_bool(0.6) {
                let evil = gen.fresh_tokens();
                gen.lines[picks[2]].tokens = evil;
                gen.lines[picks[2]].semantic_origin = merge_idx;
            }
            repo.write(FILE, &gen.render());
            let t = gen.tick();
            commits.push((repo.merge("Merge side branch", t, &[side]), StepKind::Merge, t));
        } else {
            let fix = plant_fix(&mut gen, &mut repo, &mut commits);
            fixes.push(fix);
        }
    }
    let fix = plant_fix(&mut gen, &mut repo, &mut commits);
    fixes.push(fix);

    RandomHistory { repo, commits, fixes }
}

fn plant_fix(gen: &mut Generator, repo: &mut ScriptedRepo, commits: &mut Vec<(Oid, StepKind, i64)>) -> PlantedFix {
    let idx = commits.len();
    let code = gen.code_lines();
    let n = gen.rng.gen_range(1..=3.min(code.len()));
    let mut picked: Vec<usize> = code.choose_multiple(&mut gen.rng, n).copied().collect();
    picked.sort_unstable();
    let origins: BTreeSet<usize> = picked.iter().map(|i| gen.lines[*i].semantic_origin).collect();
    for &i in &picked {
        let tokens = gen.fresh_tokens();
        gen.lines[i].tokens = tokens;
        gen.lines[i].semantic_origin = idx;
    }
    repo.write(FILE, &gen.render());
    let t = gen.tick();
    let fix = repo.commit("fix a bug", t);
    commits.push((fix, StepKind::Fix, t));
    PlantedFix {
        fix,
        true_bics: origins.into_iter().map(|o| commits[o].0).collect(),
        touched_lines: picked.into_iter().map(|i| i + 1).collect(),
    }
}
