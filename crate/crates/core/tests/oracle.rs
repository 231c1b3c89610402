use std::collections::BTreeSet;

use chrono::{TimeZone, Utc};
use proptest::prelude::*;

use szz_core::lang::LanguageId;
use szz_core::oracle::{
    import::import_replication, load_oracle, subset_issues, subset_language, Issue, OracleDataset, OracleEntry,
    OracleError, RepoRef, ViolationKind,
};
use szz_core::repo::CommitId;
use szz_testkit::ScriptedRepo;

fn entry(repo: &str, fix: &str, bics: &[&str], issues: usize, langs: &[LanguageId]) -> OracleEntry {
    OracleEntry {
        repo: RepoRef {
            name: repo.into(),
            clone: None,
        },
        fix_commit: CommitId::parse(fix).unwrap(),
        true_bics: bics.iter().map(|b| CommitId::parse(b).unwrap()).collect(),
        issues: (0..issues)
            .map(|k| Issue {
                url: Some(format!("https://tracker.example/{repo}/{k}")),
                opened_at: Utc.timestamp_opt(1_500_000_000 + k as i64 * 86_400, 0).unwrap(),
            })
            .collect(),
        languages: langs.iter().copied().collect(),
    }
}

fn violations(json: &str) -> Vec<(Option<usize>, ViolationKind)> {
    match OracleDataset::from_json(json) {
        Err(OracleError::Invalid(v)) => v.into_iter().map(|v| (v.entry, v.kind)).collect(),
        other => panic!("expected validation failure, got {other:?}"),
    }
}

fn doc(entries: &str) -> String {
    format!(r#"{{"schema_version": 1, "provenance": "t", "entries": [{entries}]}}"#)
}

const OK: &str = r#"{"repo": {"name": "a/b"}, "fix_commit": "aaaaaaa", "bug_inducing_commits": ["bbbbbbb"]}"#;

#[test]
fn single_entry_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.json");
    std::fs::write(&path, doc(OK)).unwrap();
    let ds = load_oracle(&path).unwrap();
    assert_eq!(ds.len(), 1);
    assert!(ds.entries[0].issues.is_empty());
}

#[test]
fn empty_true_bics_is_reported_with_index() {
    let bad = r#"{"repo": {"name": "a/b"}, "fix_commit": "ccccccc", "bug_inducing_commits": []}"#;
    let v = violations(&doc(&format!("{OK}, {bad}")));
    assert_eq!(v, vec![(Some(1), ViolationKind::EmptyTrueBics)]);
}

#[test]
fn duplicate_fix_within_a_repo() {
    let dup = r#"{"repo": {"name": "a/b"}, "fix_commit": "aaaaaaa0", "bug_inducing_commits": ["ccccccc"]}"#;
    let v = violations(&doc(&format!("{OK}, {dup}")));
    assert!(matches!(v[0], (Some(1), ViolationKind::DuplicateFix { first: 0, .. })));
    // same hash in another repository is fine
    let other = r#"{"repo": {"name": "x/y"}, "fix_commit": "aaaaaaa", "bug_inducing_commits": ["ccccccc"]}"#;
    assert!(OracleDataset::from_json(&doc(&format!("{OK}, {other}"))).is_ok());
}

#[test]
fn fix_among_its_bics() {
    let bad = r#"{"repo": {"name": "a/b"}, "fix_commit": "ddddddd", "bug_inducing_commits": ["ddddddd"]}"#;
    assert_eq!(
        violations(&doc(bad))[0].1,
        ViolationKind::FixAmongBics("ddddddd".into())
    );
}

#[test]
fn bad_dates_commits_and_languages() {
    let bad = r#"{"repo": {"name": "a/b"}, "fix_commit": "XYZ", "bug_inducing_commits": ["bbbbbbb"],
        "issues": [{"url": "u", "opened_at": "last tuesday"}], "languages": ["Cobol"]}"#;
    let v = violations(&doc(bad));
    assert_eq!(v.len(), 3);
    assert!(v.iter().all(|(i, _)| *i == Some(0)));
    assert!(matches!(v[0].1, ViolationKind::InvalidCommit(_)));
    assert!(matches!(v[1].1, ViolationKind::BadIssueDate { .. }));
    assert!(matches!(v[2].1, ViolationKind::UnknownLanguage(_)));
}

#[test]
fn schema_and_version_errors() {
    assert!(matches!(OracleDataset::from_json("[]"), Err(OracleError::Schema(_))));
    assert!(matches!(
        OracleDataset::from_json(r#"{"schema_version": 2, "entries": []}"#),
        Err(OracleError::Version(2))
    ));
    assert!(matches!(
        OracleDataset::from_json(&doc(r#"{"repo": "a/b"}"#)),
        Err(OracleError::Schema(_))
    ));
}

#[test]
fn declared_counts_are_checked() {
    let good = r#"{"schema_version": 1, "entries": [], "counts": {"Total": {"repos": 0, "commits": 0, "issues": 0}}}"#;
    assert!(OracleDataset::from_json(good).is_ok());
    let bad = format!(
        r#"{{"schema_version": 1, "entries": [{OK}], "counts": {{"Total": {{"repos": 1, "commits": 2, "issues": 0}}}}}}"#
    );
    let v = violations(&bad);
    assert!(matches!(v[0], (None, ViolationKind::CountMismatch { .. })));
}

#[test]
fn counts_per_language() {
    let ds = OracleDataset::new(
        "t",
        vec![
            entry("a/b", "a00000a", &["b00000b"], 1, &[LanguageId::C, LanguageId::Python]),
            entry("a/b", "a00000c", &["b00000d"], 0, &[LanguageId::C]),
            entry("x/y", "a00000e", &["b00000f"], 2, &[LanguageId::Java]),
        ],
    );
    let c = ds.counts();
    assert_eq!((c["C"].repos, c["C"].commits, c["C"].issues), (1, 2, 1));
    assert_eq!((c["Total"].repos, c["Total"].commits, c["Total"].issues), (2, 3, 2));
    assert_eq!(c["Java"].issues, 1);
}

#[test]
fn subsets() {
    let ds = OracleDataset::new(
        "t",
        vec![
            entry("a/b", "a00000a", &["b00000b"], 1, &[LanguageId::Java]),
            entry("a/b", "a00000c", &["b00000d"], 0, &[LanguageId::C]),
        ],
    );
    assert_eq!(subset_issues(&ds).entries, vec![ds.entries[0].clone()]);
    assert_eq!(subset_language(&ds, LanguageId::C).entries, vec![ds.entries[1].clone()]);
    let empty = OracleDataset::new("", vec![]);
    assert!(subset_issues(&empty).is_empty());
    assert!(subset_language(&empty, LanguageId::Ruby).is_empty());
}

#[test]
fn replication_layout_import() {
    let text = r#"[
        {"id": 1, "repo_name": "apache/thrift", "fix_commit_hash": "A8A97BD", "bug_commit_hash": ["e58f75d"],
         "earliest_issue_date": "2018-01-02 03:04:05", "issue_urls": ["https://issues.example/THRIFT-1"],
         "language": ["C++", "Go"]},
        {"id": 2, "repo_name": "x/y", "fix_commit_hash": "1234567", "bug_commit_hash": "abcdef0", "language": "Python"}
    ]"#;
    let (ds, report) = import_replication(text, "replication package").unwrap();
    assert_eq!(ds.len(), 2);
    assert_eq!(report.ignored_fields["id"], 2);
    assert_eq!(report.other_languages["Go"], 1);
    let e = &ds.entries[0];
    assert_eq!(e.fix_commit.as_str(), "a8a97bd");
    assert_eq!(e.languages, BTreeSet::from([LanguageId::Cpp, LanguageId::Unsupported]));
    assert_eq!(
        e.issues[0].opened_at,
        Utc.with_ymd_and_hms(2018, 1, 2, 3, 4, 5).unwrap()
    );
    assert!(ds.entries[1].issues.is_empty());
    // canonical form re-loads
    assert_eq!(OracleDataset::from_json(&ds.to_json()).unwrap(), ds);
}

#[test]
fn clones_are_verified_when_present() {
    let root = tempfile::tempdir().unwrap();
    let mut repo = ScriptedRepo::init(root.path().join("a/b"));
    repo.write("f.c", "int x;\n");
    let bic = repo.commit("add", 1_000);
    repo.write("f.c", "int x = 0;\n");
    let fix = repo.commit("fix", 2_000);
    let good = entry("a/b", &fix.to_string()[..8], &[&bic.to_string()[..8]], 0, &[]);
    let bad = entry("a/b", "abcdef012", &["abcdef013"], 0, &[]);
    let absent = entry("gone/repo", "abcdef014", &["abcdef015"], 0, &[]);
    let ds = OracleDataset::new("t", vec![good.clone(), bad, absent]);
    let v = ds.verify_clones(root.path());
    assert_eq!(v.len(), 2);
    assert!(v.iter().all(|v| v.entry == Some(1)));
    let snap = szz_core::repo::RepoSnapshot::open(good.clone_path(root.path())).unwrap();
    let full = good.resolved(&snap).unwrap();
    assert_eq!(full.fix_commit.as_str(), fix.to_string());
    assert!(full.true_bics.iter().all(CommitId::is_full));
}

fn arb_entry() -> impl Strategy<Value = OracleEntry> {
    (
        prop::sample::select(vec!["a/b", "c/d", "e/f"]),
        "[0-9a-f]{7,40}",
        prop::collection::btree_set("[0-9a-f]{7,12}", 1..4),
        0usize..3,
        prop::collection::btree_set(prop::sample::select(LanguageId::SUPPORTED.to_vec()), 0..3),
        prop::option::of("[a-z]{1,8}"),
    )
        .prop_map(|(repo, fix, bics, issues, langs, clone)| {
            let bics: Vec<&str> = bics.iter().map(String::as_str).collect();
            let mut e = entry(repo, &fix, &bics, issues, &langs.into_iter().collect::<Vec<_>>());
            e.repo.clone = clone.map(Into::into);
            e
        })
}

fn arb_dataset() -> impl Strategy<Value = OracleDataset> {
    prop::collection::vec(arb_entry(), 0..12).prop_map(|entries| {
        let ds = OracleDataset::new("generated", entries);
        // keep only entries that would validate
        let bad: BTreeSet<usize> = ds.validate().into_iter().filter_map(|v| v.entry).collect();
        let entries = ds
            .entries
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !bad.contains(i))
            .map(|(_, e)| e)
            .collect::<Vec<_>>();
        let ds = OracleDataset::new("generated", entries);
        // a later duplicate may have been masked by an earlier invalid one
        let bad: BTreeSet<usize> = ds.validate().into_iter().filter_map(|v| v.entry).collect();
        OracleDataset::new(
            "generated",
            ds.entries
                .into_iter()
                .enumerate()
                .filter(|(i, _)| !bad.contains(i))
                .map(|(_, e)| e)
                .collect(),
        )
    })
}

proptest! {
    #[test]
    fn load_serialize_load_is_stable(ds in arb_dataset()) {
        prop_assume!(ds.validate().is_empty());
        let once = OracleDataset::from_json(&ds.to_json()).unwrap();
        prop_assert_eq!(&once, &ds);
        prop_assert_eq!(once.to_json(), ds.to_json());
    }

    #[test]
    fn subsets_are_order_preserving_filters(ds in arb_dataset(), lang in prop::sample::select(LanguageId::SUPPORTED.to_vec())) {
        for sub in [subset_issues(&ds), subset_language(&ds, lang)] {
            let mut it = ds.entries.iter();
            for e in &sub.entries {
                prop_assert!(it.any(|x| x == e));
            }
        }
        prop_assert!(subset_issues(&ds).entries.iter().all(|e| !e.issues.is_empty()));
        prop_assert!(subset_language(&ds, lang).entries.iter().all(|e| e.languages.contains(&lang)));
    }
}
