#![allow(dead_code)]

use std::path::PathBuf;

use szz_core::lang::{LanguageId, LineClass};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Hand-labelled lexer fixtures: `(language, file name)`.
pub const LEXER_FIXTURES: &[(LanguageId, &str)] = &[
    (LanguageId::C, "c.txt"),
    (LanguageId::Cpp, "cpp.txt"),
    (LanguageId::CSharp, "csharp.txt"),
    (LanguageId::Java, "java.txt"),
    (LanguageId::JavaScript, "javascript.txt"),
    (LanguageId::Ruby, "ruby.txt"),
    (LanguageId::Php, "php.txt"),
    (LanguageId::Python, "python.txt"),
];

/// Splits a `L|source` fixture into the source text and its labels.
pub fn load_lexer_fixture(name: &str) -> (String, Vec<LineClass>) {
    let raw = std::fs::read_to_string(fixture_dir().join("lexer").join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    let mut source = String::new();
    let mut labels = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        let (label, text) = line
            .split_once('|')
            .unwrap_or_else(|| panic!("{name}:{}: missing label", i + 1));
        labels.push(match label {
            "C" => LineClass::Code,
            "K" => LineClass::Comment,
            "B" => LineClass::Blank,
            "M" => LineClass::MixedCodeComment,
            other => panic!("{name}:{}: bad label {other:?}", i + 1),
        });
        source.push_str(text);
        source.push('\n');
    }
    (source, labels)
}

/// Lines (1-based) where the classifier disagrees with the labels.
pub fn lexer_disagreements(language: LanguageId, name: &str) -> Vec<(usize, LineClass, LineClass)> {
    let (source, labels) = load_lexer_fixture(name);
    let got = szz_core::lang::classify_lines(&source, language);
    assert_eq!(got.len(), labels.len(), "{name}: line count");
    labels
        .iter()
        .zip(&got)
        .enumerate()
        .filter(|(_, (want, got))| want != got)
        .map(|(i, (want, got))| (i + 1, *want, *got))
        .collect()
}

/// The four quoted commit messages as events, with their hand-written parses.
pub fn quoted_sentences() -> (Vec<szz_core::miner::CommitEvent>, szz_core::miner::ParseIndex) {
    let dir = fixture_dir().join("miner");
    let events = std::fs::read(dir.join("quoted_sentences.ndjson")).expect("events fixture");
    let parses = std::fs::read(dir.join("quoted_sentences.conll")).expect("parse fixture");
    (
        szz_core::miner::read_events(events.as_slice()).expect("events"),
        szz_core::miner::ParseIndex::read(parses.as_slice()).expect("parses"),
    )
}

/// Random small evaluation instance: ground truth plus runs of several
/// variants drawn from a shared pool of commits per entry.
pub fn metric_instance(seed: u64) -> (szz_core::eval::Truth, Vec<szz_core::eval::DetectionRun>) {
    use rand::{Rng, SeedableRng};
    use szz_core::eval::{DetectionRun, EntryKey, Regime, Truth};
    use szz_core::repo::CommitId;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n_entries = rng.gen_range(1..=8);
    let n_variants = rng.gen_range(1..=5);
    let repos = ["a/one", "b/two", "c/three"];
    let mut truth = Truth::new();
    let mut pools = Vec::new();
    for i in 0..n_entries {
        let repo = repos[rng.gen_range(0..repos.len())];
        let key = EntryKey {
            repo: repo.to_string(),
            fix_commit: CommitId::parse(&format!("f{i:06x}")).unwrap(),
        };
        // commits shared across repos on purpose: hashes must not collide
        let pool: Vec<CommitId> = (0..6).map(|c| CommitId::parse(&format!("c{c:06x}")).unwrap()).collect();
        let k = rng.gen_range(1..=3);
        let bics = pool.iter().take(k).cloned().collect();
        truth.insert(key.clone(), bics);
        pools.push((key, pool));
    }
    let runs = (0..n_variants)
        .map(|v| {
            let sets = pools
                .iter()
                .map(|(key, pool)| {
                    let picked = pool.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect();
                    (key.clone(), picked)
                })
                .collect();
            DetectionRun::from_sets(&format!("V{v}"), Regime::None, &sets)
        })
        .collect();
    (truth, runs)
}

/// Exhaustive set algebra over plain string triples, independent of the
/// evaluator's types. Returns (recall, precision, f1) as exact fractions.
pub mod brute {
    use szz_core::eval::{DetectionRun, Truth};

    pub type Triple = (String, String, String);

    pub fn correct(truth: &Truth) -> Vec<Triple> {
        let mut out = Vec::new();
        for (k, bics) in truth {
            for b in bics {
                out.push((k.repo.clone(), k.fix_commit.to_string(), b.to_string()));
            }
        }
        out
    }

    pub fn identified(run: &DetectionRun) -> Vec<Triple> {
        let mut out = Vec::new();
        for e in &run.entries {
            for c in &e.identified {
                out.push((e.repo.clone(), e.fix_commit.to_string(), c.to_string()));
            }
        }
        out
    }

    pub fn tp(truth: &Truth, run: &DetectionRun) -> Vec<Triple> {
        let c = correct(truth);
        identified(run).into_iter().filter(|t| c.contains(t)).collect()
    }

    fn ratio(n: usize, d: usize) -> (usize, usize) {
        (n, d)
    }

    pub fn as_f64((n, d): (usize, usize)) -> f64 {
        if d == 0 {
            0.0
        } else {
            n as f64 / d as f64
        }
    }

    pub fn recall(truth: &Truth, run: &DetectionRun) -> (usize, usize) {
        ratio(tp(truth, run).len(), correct(truth).len())
    }

    pub fn precision(truth: &Truth, run: &DetectionRun) -> (usize, usize) {
        ratio(tp(truth, run).len(), identified(run).len())
    }

    /// F1 = 2·tp / (|correct| + |identified|), the harmonic mean in closed form.
    pub fn f1(truth: &Truth, run: &DetectionRun) -> (usize, usize) {
        let t = tp(truth, run).len();
        if t == 0 {
            return (0, 1);
        }
        ratio(2 * t, correct(truth).len() + identified(run).len())
    }

    fn union(a: &[Triple], b: &[Triple]) -> Vec<Triple> {
        let mut out = a.to_vec();
        for t in b {
            if !out.contains(t) {
                out.push(t.clone());
            }
        }
        out
    }

    pub fn overlap(truth: &Truth, a: &DetectionRun, b: &DetectionRun) -> (usize, usize) {
        let (ta, tb) = (tp(truth, a), tp(truth, b));
        let inter = ta.iter().filter(|t| tb.contains(t)).count();
        let u = union(&ta, &tb).len();
        if u == 0 {
            (1, 1)
        } else {
            (inter, u)
        }
    }

    pub fn exclusive(truth: &Truth, runs: &[DetectionRun], i: usize) -> (usize, usize) {
        let mine = tp(truth, &runs[i]);
        let mut others = Vec::new();
        for (j, r) in runs.iter().enumerate() {
            if j != i {
                others = union(&others, &tp(truth, r));
            }
        }
        let only = mine.iter().filter(|t| !others.contains(t)).count();
        (only, union(&mine, &others).len())
    }
}

/// Oracle dataset over scripted scenarios whose clones live under `root`.
/// Repository names are the scenario names, so `root` is the clones root.
pub fn scenario_dataset(scenarios: &[szz_testkit::scenarios::Scenario]) -> szz_core::oracle::OracleDataset {
    use szz_core::oracle::{OracleDataset, OracleEntry, RepoRef};
    use szz_core::repo::CommitId;

    let entries = scenarios
        .iter()
        .filter(|s| !s.true_bics.is_empty())
        .map(|s| OracleEntry {
            repo: RepoRef {
                name: s.name.clone(),
                clone: None,
            },
            fix_commit: CommitId::parse(&s.fix.to_string()).unwrap(),
            true_bics: s
                .true_bics
                .iter()
                .map(|b| CommitId::parse(&b.to_string()).unwrap())
                .collect(),
            issues: Vec::new(),
            languages: [szz_core::lang::LanguageId::from_path(&s.file)].into_iter().collect(),
        })
        .collect();
    OracleDataset::new("scripted scenarios", entries)
}

pub fn oid_set(set: &std::collections::BTreeSet<git2::Oid>) -> std::collections::BTreeSet<szz_core::repo::CommitId> {
    set.iter()
        .map(|o| szz_core::repo::CommitId::parse(&o.to_string()).unwrap())
        .collect()
}
