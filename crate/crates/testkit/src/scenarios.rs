//! Hand-scripted histories with known bug-introduction points.
//!
//! Each builder returns the fix commit, the planted bug-inducing commit and
//! the set every preset is expected to report. Preset keys are the short
//! names `B`, `AG`, `MA`, `L`, `R`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use git2::Oid;

use crate::{join_lines, ScriptedRepo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScenarioKind {
    /// bug → unrelated noise → fix
    Plain,
    /// bug → whitespace-only reformat → fix
    CosmeticInterposed,
    /// bug on main, side branch, evil merge rewriting a second line → fix
    MergeMeta,
    /// fix that only adds a guard; the buggy line is untouched
    GuardAddition,
    /// bug → change → revert of that change → fix
    RevertHistory,
}

impl ScenarioKind {
    pub const SUITE: [ScenarioKind; 3] = [
        ScenarioKind::Plain,
        ScenarioKind::CosmeticInterposed,
        ScenarioKind::MergeMeta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Plain => "plain",
            ScenarioKind::CosmeticInterposed => "cosmetic-interposed",
            ScenarioKind::MergeMeta => "merge-meta",
            ScenarioKind::GuardAddition => "guard-addition",
            ScenarioKind::RevertHistory => "revert-history",
        }
    }
}

pub const PRESETS: [&str; 5] = ["B", "AG", "MA", "L", "R"];

pub struct Scenario {
    pub kind: ScenarioKind,
    pub name: String,
    pub repo: ScriptedRepo,
    /// Repository-relative path of the source file under test.
    pub file: String,
    pub fix: Oid,
    /// What a perfect algorithm would report.
    pub true_bics: BTreeSet<Oid>,
    /// Notable intermediate commits by role (`formatting`, `merge`, `revert`, ...).
    pub roles: BTreeMap<&'static str, Oid>,
    /// Expected output per preset short name.
    pub expected: BTreeMap<&'static str, BTreeSet<Oid>>,
}

impl Scenario {
    pub fn expected(&self, preset: &str) -> &BTreeSet<Oid> {
        &self.expected[preset]
    }
}

/// One language flavour for the scripted file.
#[derive(Debug, Clone, Copy)]
struct Flavour {
    file: &'static str,
    comment: &'static str,
    prefix: &'static str,
    suffix: &'static str,
    guard: &'static str,
}

const FLAVOURS: [Flavour; 4] = [
    Flavour {
        file: "src/core.c",
        comment: "// ",
        prefix: "int ",
        suffix: ";",
        guard: "if (a == NULL) return 0;",
    },
    Flavour {
        file: "src/main/java/Core.java",
        comment: "// ",
        prefix: "int ",
        suffix: ";",
        guard: "if (a == null) return 0;",
    },
    Flavour {
        file: "core/util.py",
        comment: "# ",
        prefix: "",
        suffix: "",
        guard: "if a is None: return 0",
    },
    Flavour {
        file: "lib/core.js",
        comment: "// ",
        prefix: "let ",
        suffix: ";",
        guard: "if (a === null) return 0;",
    },
];

impl Flavour {
    fn stmt(&self, var: usize, call: &str, arg: i64, spaced: bool) -> String {
        if spaced {
            format!("{}v{var} = {call}(a, {arg}){}", self.prefix, self.suffix)
        } else {
            format!("{}v{var}={call}(a,{arg}){}", self.prefix, self.suffix)
        }
    }

    fn initial(&self, n: usize) -> Vec<String> {
        let mut lines = vec![format!("{}module under test", self.comment)];
        lines.extend((1..=n).map(|i| self.stmt(i, &format!("f{i}"), i as i64, false)));
        lines
    }
}

const T0: i64 = 1_600_000_000;
const STEP: i64 = 3_600;

struct Clock(i64);

impl Clock {
    fn next(&mut self) -> i64 {
        self.0 += STEP;
        self.0
    }
}

fn all_presets(set: &BTreeSet<Oid>) -> BTreeMap<&'static str, BTreeSet<Oid>> {
    PRESETS.iter().map(|p| (*p, set.clone())).collect()
}

/// Builds scenario `kind` in `dir`; `variant` picks the language flavour and
/// the amount of unrelated noise.
pub fn build(kind: ScenarioKind, variant: usize, dir: impl AsRef<Path>) -> Scenario {
    let fl = FLAVOURS[variant % FLAVOURS.len()];
    let noise = variant % 3;
    let mut repo = ScriptedRepo::init(dir);
    let mut clock = Clock(T0 + variant as i64 * 17);
    let mut lines = fl.initial(8);
    let bug_line = 3 + variant % 4; // 1-based, below the header comment
    let file = fl.file.to_string();

    repo.write(&file, &join_lines(&lines));
    repo.write("README.txt", "scripted fixture\n");
    repo.commit("initial import", clock.next());

    let add_noise = |repo: &mut ScriptedRepo, clock: &mut Clock, tag: &str| {
        for k in 0..noise {
            let text = format!(
                "{}\nnote {tag} {k}\n",
                repo.content("README.txt").unwrap_or("").trim_end()
            );
            repo.write("README.txt", &text);
            repo.commit(&format!("docs: {tag} {k}"), clock.next());
        }
    };

    let var = bug_line - 1;
    lines[bug_line - 1] = fl.stmt(var, &format!("f{var}"), -1, false);
    repo.write(&file, &join_lines(&lines));
    let bic = repo.commit("tune parameters", clock.next());
    add_noise(&mut repo, &mut clock, "after bic");

    let mut roles = BTreeMap::new();
    let true_bics = BTreeSet::from([bic]);
    let (fix, expected) = match kind {
        ScenarioKind::Plain => {
            lines[bug_line - 1] = fl.stmt(var, &format!("f{var}"), var as i64, false);
            repo.write(&file, &join_lines(&lines));
            let fix = repo.commit("Fix wrong parameter", clock.next());
            (fix, all_presets(&true_bics))
        }
        ScenarioKind::CosmeticInterposed => {
            // respace every statement, leave the header comment alone
            let spaced: Vec<String> = std::iter::once(lines[0].clone())
                .chain(lines.iter().skip(1).map(|l| respace(l)))
                .collect();
            lines = spaced;
            repo.write(&file, &join_lines(&lines));
            let formatting = repo.commit("Apply code style", clock.next());
            roles.insert("formatting", formatting);
            add_noise(&mut repo, &mut clock, "after formatting");
            lines[bug_line - 1] = fl.stmt(var, &format!("f{var}"), var as i64, true);
            repo.write(&file, &join_lines(&lines));
            let fix = repo.commit("Fix wrong parameter", clock.next());
            let mut expected = all_presets(&true_bics);
            expected.insert("B", BTreeSet::from([formatting]));
            (fix, expected)
        }
        ScenarioKind::MergeMeta => {
            let base = repo.head().expect("head");
            let far = lines.len();
            let mut side_lines = lines.clone();
            side_lines[far - 1] = fl.stmt(far - 1, "side", 7, false);
            repo.write(&file, &join_lines(&side_lines));
            let side = repo.commit("side: rework tail", clock.next());
            roles.insert("side", side);
            repo.checkout(base);
            // evil merge: takes the side change and rewrites another line
            let evil_line = 2;
            lines[far - 1] = side_lines[far - 1].clone();
            lines[evil_line - 1] = fl.stmt(evil_line - 1, "merged", 0, false);
            repo.write(&file, &join_lines(&lines));
            let merge = repo.merge("Merge branch 'side'", clock.next(), &[side]);
            roles.insert("merge", merge);
            lines[bug_line - 1] = fl.stmt(var, &format!("f{var}"), var as i64, false);
            lines[evil_line - 1] = fl.stmt(evil_line - 1, &format!("f{}", evil_line - 1), 1, false);
            repo.write(&file, &join_lines(&lines));
            let fix = repo.commit("Fix parameters", clock.next());
            let with_merge = BTreeSet::from([bic, merge]);
            let mut expected = all_presets(&true_bics);
            expected.insert("B", with_merge.clone());
            expected.insert("AG", with_merge);
            (fix, expected)
        }
        ScenarioKind::GuardAddition => {
            lines.insert(bug_line - 1, fl.guard.to_string());
            repo.write(&file, &join_lines(&lines));
            let fix = repo.commit("Guard against missing input", clock.next());
            (fix, all_presets(&BTreeSet::new()))
        }
        ScenarioKind::RevertHistory => {
            let buggy = lines[bug_line - 1].clone();
            lines[bug_line - 1] = fl.stmt(var, "experimental", -1, false);
            repo.write(&file, &join_lines(&lines));
            let change = repo.commit("Try experimental path", clock.next());
            roles.insert("reverted", change);
            lines[bug_line - 1] = buggy;
            repo.write(&file, &join_lines(&lines));
            let revert = repo.commit(
                &format!("Revert \"Try experimental path\"\n\nThis reverts commit {change}."),
                clock.next(),
            );
            roles.insert("revert", revert);
            lines[bug_line - 1] = fl.stmt(var, &format!("f{var}"), var as i64, false);
            repo.write(&file, &join_lines(&lines));
            let fix = repo.commit("Fix wrong parameter", clock.next());
            (fix, all_presets(&BTreeSet::from([revert])))
        }
    };
    roles.insert("bic", bic);

    Scenario {
        kind,
        name: format!("{}-{}", kind.name(), variant),
        repo,
        file,
        fix,
        true_bics,
        roles,
        expected,
    }
}

/// Inserts spaces around `=` and after `,`.
fn respace(line: &str) -> String {
    let mut out = String::new();
    for c in line.chars() {
        match c {
            '=' => out.push_str(" = "),
            ',' => out.push_str(", "),
            c => out.push(c),
        }
    }
    out
}

/// The twelve-repository suite: four variants of each [`ScenarioKind::SUITE`]
/// kind, built under `root/<name>`.
pub fn suite(root: impl AsRef<Path>) -> Vec<Scenario> {
    let root = root.as_ref();
    ScenarioKind::SUITE
        .iter()
        .flat_map(|kind| (0..4).map(move |v| (*kind, v)))
        .map(|(kind, v)| build(kind, v, root.join(format!("{}-{v}", kind.name()))))
        .collect()
}
