mod common;

use std::collections::BTreeSet;

use chrono::{Duration, TimeZone, Utc};

use szz_core::engine::{Preset, BEST_CASE_DELTA_SECS};
use szz_core::eval::{self, truth_of, Regime};
use szz_core::lang::LanguageMap;
use szz_core::oracle::Issue;
use szz_core::pipeline::{
    detect, evaluate_runs, mine, read_runs, write_runs, DetectOptions, MineInputs, PipelineError, FLAG_NO_ISSUE_DATE,
};
use szz_core::repo::RepoSnapshot;
use szz_testkit::scenarios::{self, ScenarioKind};

const FIVE: [Preset; 5] = [Preset::B, Preset::Ag, Preset::Ma, Preset::L, Preset::R];

fn options(root: &std::path::Path) -> DetectOptions {
    DetectOptions {
        clones_root: root.to_path_buf(),
        presets: FIVE.to_vec(),
        regimes: Regime::ALL.to_vec(),
        workers: 4,
        refactorings: None,
        languages: LanguageMap::default(),
    }
}

#[test]
fn three_scripted_repos_five_presets() {
    let root = tempfile::tempdir().unwrap();
    let suite: Vec<_> = ScenarioKind::SUITE
        .iter()
        .map(|k| scenarios::build(*k, 0, root.path().join(format!("{}-0", k.name()))))
        .collect();
    let ds = common::scenario_dataset(&suite);
    let mut opts = options(root.path());
    opts.regimes = vec![Regime::None];
    let out = detect(&ds, &opts).unwrap();
    assert_eq!(out.runs.len(), 5);
    assert!(out.skipped.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let files = write_runs(&out.runs, dir.path()).unwrap();
    assert_eq!(files.len(), 5);
    for run in &out.runs {
        assert_eq!(run.entries.len(), suite.len());
        for s in &suite {
            let entry = run.entries.iter().find(|e| e.repo == s.name).unwrap();
            assert_eq!(
                entry.identified,
                common::oid_set(s.expected(&run.variant)),
                "{} {}",
                run.variant,
                s.name
            );
        }
    }
    assert_eq!(read_runs(dir.path()).unwrap().len(), 5);
}

#[test]
fn issue_date_regime_filters_flags_and_best_case_keeps_truth() {
    let root = tempfile::tempdir().unwrap();
    let suite = scenarios::suite(root.path());
    let mut ds = common::scenario_dataset(&suite);
    // first entry: issue opened before anything was committed, so every candidate goes
    ds.entries[0].issues.push(Issue {
        url: None,
        opened_at: Utc.timestamp_opt(1_000, 0).unwrap(),
    });
    let out = detect(&ds, &options(root.path())).unwrap();
    assert_eq!(out.runs.len(), 15);
    let truth = truth_of(&ds);
    for run in &out.runs {
        let first = &run.entries.iter().find(|e| e.repo == ds.entries[0].repo.name).unwrap();
        match run.regime {
            Regime::IssueDate => {
                assert!(first.identified.is_empty());
                let unflagged = run
                    .entries
                    .iter()
                    .filter(|e| !e.flags.iter().any(|f| f == FLAG_NO_ISSUE_DATE))
                    .count();
                assert_eq!(unflagged, 1);
            }
            Regime::BestCaseDate => {
                let none = out
                    .runs
                    .iter()
                    .find(|r| r.regime == Regime::None && r.variant == run.variant)
                    .unwrap();
                for (b, n) in run.entries.iter().zip(&none.entries) {
                    assert!(b.identified.is_subset(&n.identified));
                    let t = &truth[&n.key()];
                    assert_eq!(
                        b.identified.intersection(t).count(),
                        n.identified.intersection(t).count()
                    );
                }
            }
            Regime::None => {}
        }
    }
}

#[test]
fn best_case_date_is_sixty_seconds_after_the_last_bic() {
    let root = tempfile::tempdir().unwrap();
    let s = scenarios::build(ScenarioKind::Plain, 1, root.path().join("plain-1"));
    let repo = RepoSnapshot::open(s.repo.path()).unwrap();
    let bics = common::oid_set(&s.true_bics);
    let t = repo.commit_meta(bics.first().unwrap()).unwrap().committer_time;
    let d = szz_core::engine::simulate_best_case_issue_date(&repo, &bics).unwrap();
    assert_eq!(d - t, Duration::seconds(BEST_CASE_DELTA_SECS));
}

#[test]
fn missing_clones_are_skipped_and_surfaced() {
    let root = tempfile::tempdir().unwrap();
    let s = scenarios::build(ScenarioKind::Plain, 0, root.path().join("plain-0"));
    let mut ds = common::scenario_dataset(std::slice::from_ref(&s));
    let mut ghost = ds.entries[0].clone();
    ghost.repo.name = "nowhere/missing".into();
    ds.entries.push(ghost);
    let out = detect(&ds, &options(root.path())).unwrap();
    assert_eq!(out.processed, 1);
    assert_eq!(out.skipped.len(), 1);
    assert!(out.skipped[0].reason.starts_with("clone unavailable"));
    for run in &out.runs {
        assert_eq!(run.skipped().count(), 1);
    }
    ds.entries.remove(0);
    assert!(matches!(
        detect(&ds, &options(root.path())),
        Err(PipelineError::NoClones(_))
    ));
}

#[test]
fn configuration_errors() {
    let root = tempfile::tempdir().unwrap();
    let ds = szz_core::oracle::OracleDataset::new("", vec![]);
    let mut opts = options(root.path());
    opts.presets.clear();
    assert!(matches!(detect(&ds, &opts), Err(PipelineError::NoPresets)));
    opts.presets = vec![Preset::RaLite];
    assert!(matches!(detect(&ds, &opts), Err(PipelineError::MissingRefactorings)));
}

#[test]
fn detection_is_deterministic_across_worker_counts() {
    let root = tempfile::tempdir().unwrap();
    let suite = scenarios::suite(root.path());
    let ds = common::scenario_dataset(&suite);
    let render = |workers: usize| {
        let mut opts = options(root.path());
        opts.workers = workers;
        detect(&ds, &opts)
            .unwrap()
            .runs
            .iter()
            .map(|r| r.to_json())
            .collect::<Vec<_>>()
    };
    assert_eq!(render(1), render(8));
    let variants: BTreeSet<String> = detect(&ds, &options(root.path()))
        .unwrap()
        .runs
        .iter()
        .map(|r| r.variant.clone())
        .collect();
    assert_eq!(variants.len(), 5);
}

#[test]
fn evaluate_runs_over_detected_suite() {
    let root = tempfile::tempdir().unwrap();
    let suite = scenarios::suite(root.path());
    let ds = common::scenario_dataset(&suite);
    let out = detect(&ds, &options(root.path())).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let report = evaluate_runs(&out.runs, &ds, a.path(), Some(20)).unwrap();
    evaluate_runs(&out.runs, &ds, b.path(), Some(20)).unwrap();
    assert_eq!(report.metrics.len(), 15);
    assert_eq!(report.overlap.len(), 3);
    for m in &report.overlap {
        assert_eq!(m.variants.len(), 5);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(m.values[i][j], m.values[j][i]);
            }
        }
    }
    let files = |d: &std::path::Path| {
        let mut v: Vec<_> = std::fs::read_dir(d).unwrap().map(|e| e.unwrap().path()).collect();
        v.sort();
        v.into_iter()
            .map(|p| (p.file_name().unwrap().to_owned(), std::fs::read(&p).unwrap()))
            .collect::<Vec<_>>()
    };
    assert_eq!(files(a.path()), files(b.path()));
    assert!(a.path().join(eval::OUTLIERS_FILE).exists());
    let loaded = eval::load_report(a.path()).unwrap();
    assert_eq!(loaded.metrics.len(), 15);
}

#[test]
fn mine_reads_fixture_files() {
    let dir = common::fixture_dir().join("miner");
    let inputs = MineInputs {
        events: dir.join("quoted_sentences.ndjson"),
        parses: Some(dir.join("quoted_sentences.conll")),
        ..MineInputs::default()
    };
    let out = mine(&inputs).unwrap();
    assert_eq!(out.report.events, 4);
    assert_eq!(out.accepted().count(), 1);

    let degraded = mine(&MineInputs {
        parses: None,
        proximity: true,
        ..inputs.clone()
    })
    .unwrap();
    assert_eq!(degraded.report.events, 4);
    assert!(degraded.report.degraded > 0);

    let missing = MineInputs {
        events: dir.join("absent.ndjson"),
        ..MineInputs::default()
    };
    assert!(matches!(mine(&missing), Err(PipelineError::Io { .. })));
}
