mod manifest;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use szz_core::engine::{Preset, RefactoringRanges};
use szz_core::eval;
use szz_core::lang::LanguageMap;
use szz_core::oracle::{self, import::import_replication};
use szz_core::pipeline::{self, DetectOptions, EventFormat, MineInputs, PipelineError};

use manifest::{parse_presets, parse_regimes, RunManifest};

/// Exit status when `--strict` is set and entries were skipped.
const EXIT_SKIPPED: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "szz",
    version,
    about = "Mine bug-fix oracles, run SZZ variants, evaluate them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify commit messages that name the commit that introduced a bug.
    Mine(MineArgs),
    /// Run SZZ presets over every entry of an oracle dataset.
    Detect(DetectArgs),
    /// Score detection runs against an oracle dataset.
    Evaluate(EvaluateArgs),
    /// Print a previously emitted evaluation report.
    Report(ReportArgs),
    /// Convert a replication-package export into the oracle schema.
    Import(ImportArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Native,
    Gharchive,
}

#[derive(Args, Debug)]
struct MineArgs {
    /// Only `parses` is read from the manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Commit events, one JSON object per line.
    #[arg(long)]
    events: PathBuf,
    #[arg(long, value_enum, default_value = "native")]
    format: Format,
    /// Dependency parses in CoNLL layout, keyed by commit hash.
    #[arg(long)]
    parses: Option<PathBuf>,
    /// JSON fork map used for de-duplication.
    #[arg(long)]
    forks: Option<PathBuf>,
    /// Use word proximity for messages without a parse.
    #[arg(long)]
    proximity: bool,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, env = "SZZ_CLONES_ROOT")]
    clones_root: Option<PathBuf>,
    /// Comma list, e.g. `B,AG,MA,L,R`.
    #[arg(long)]
    presets: Option<String>,
    /// none, issue-date, best-case-date or all; repeatable.
    #[arg(long)]
    regime: Vec<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// Refactoring ranges for RA-lite.
    #[arg(long)]
    refactorings: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Fail when any entry was skipped.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Directory of run files written by `detect`.
    #[arg(long)]
    runs: PathBuf,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Drop entries with more identified commits than this from the metrics.
    #[arg(long)]
    outlier_threshold: Option<usize>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Directory written by `evaluate`.
    dir: PathBuf,
}

#[derive(Args, Debug)]
struct ImportArgs {
    input: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value = "replication package")]
    provenance: String,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mine(a) => cmd_mine(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Report(a) => cmd_report(a),
        Command::Import(a) => cmd_import(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn cmd_mine(a: MineArgs) -> Result<ExitCode> {
    let parses = a.parses.or(load_manifest(a.manifest.as_deref())?.parses);
    if a.proximity && parses.is_none() {
        eprintln!("DEGRADED MODE: no dependency parses; messages are classified by word proximity.");
    }
    let inputs = MineInputs {
        events: a.events,
        format: match a.format {
            Format::Native => EventFormat::Native,
            Format::Gharchive => EventFormat::GhArchive,
        },
        parses,
        forks: a.forks,
        proximity: a.proximity,
    };
    let outcome = pipeline::mine(&inputs)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut w = create_file(&a.out.join("records.ndjson"))?;
    outcome.write_ndjson(&mut w)?;
    w.flush()?;
    let mut w = create_file(&a.out.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut w, &outcome.report)?;
    w.write_all(b"\n")?;
    w.flush()?;

    let r = &outcome.report;
    println!(
        "events {}  prefilter {}  accepted {}",
        r.events, r.passed_prefilter, r.accepted
    );
    if r.degraded > 0 {
        println!("proximity-mode messages {}", r.degraded);
    }
    if r.duplicate_warnings > 0 {
        println!("duplicate groups without a main repository {}", r.duplicate_warnings);
    }
    for (verdict, n) in &r.verdicts {
        println!("  {verdict:<20} {n}");
    }
    Ok(ExitCode::SUCCESS)
}

fn load_manifest(path: Option<&Path>) -> Result<RunManifest> {
    path.map(RunManifest::load).transpose().map(Option::unwrap_or_default)
}

fn cmd_detect(a: DetectArgs) -> Result<ExitCode> {
    let m = load_manifest(a.manifest.as_deref())?;
    let regime_names = if a.regime.is_empty() {
        m.regime_names()
    } else {
        a.regime.clone()
    };
    let Some(dataset) = a.dataset.or(m.dataset) else {
        bail!("no dataset given (--dataset or manifest `dataset`)");
    };
    let out = a.out.or(m.out_dir).unwrap_or_else(|| PathBuf::from("runs"));
    let presets = match &a.presets {
        Some(p) => parse_presets(&[p])?,
        None => parse_presets(&m.presets)?,
    };
    if presets.is_empty() {
        bail!("no presets given (--presets or manifest `presets`)");
    }
    let regimes = if regime_names.is_empty() {
        vec![eval::Regime::None]
    } else {
        parse_regimes(&regime_names)?
    };
    let refactorings = match a.refactorings.or(m.refactorings) {
        Some(p) => Some(RefactoringRanges::load(&p).with_context(|| format!("reading {}", p.display()))?),
        None if presets.contains(&Preset::RaLite) => bail!("preset RA-lite needs --refactorings"),
        None => None,
    };
    let ds = oracle::load_oracle(&dataset)?;
    let clones_root = a
        .clones_root
        .or(m.clones_root)
        .or_else(|| dataset.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    let workers = a
        .workers
        .or(m.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let opts = DetectOptions {
        clones_root,
        presets,
        regimes,
        workers,
        refactorings,
        languages: LanguageMap::default(),
    };
    info!(
        "{} entries, {} presets, {} regimes",
        ds.len(),
        opts.presets.len(),
        opts.regimes.len()
    );
    let outcome = match pipeline::detect(&ds, &opts) {
        Err(e @ PipelineError::NoClones(_)) => bail!(e),
        other => other?,
    };
    let files = pipeline::write_runs(&outcome.runs, &out)?;

    let mut w = create_file(&out.join("skipped.tsv"))?;
    writeln!(w, "repo\tfix_commit\treason")?;
    for s in &outcome.skipped {
        writeln!(
            w,
            "{}\t{}\t{}",
            s.repo,
            s.fix_commit,
            s.reason.replace(['\t', '\n'], " ")
        )?;
    }
    w.flush()?;

    println!(
        "processed {}  skipped {}  run files {} in {}",
        outcome.processed,
        outcome.skipped.len(),
        files.len(),
        out.display()
    );
    for s in &outcome.skipped {
        warn!("skipped {}@{}: {}", s.repo, s.fix_commit, s.reason);
    }
    if a.strict && !outcome.skipped.is_empty() {
        eprintln!("{} entries skipped (see skipped.tsv)", outcome.skipped.len());
        return Ok(ExitCode::from(EXIT_SKIPPED));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<ExitCode> {
    let m = load_manifest(a.manifest.as_deref())?;
    let Some(dataset) = a.dataset.or(m.dataset) else {
        bail!("no dataset given (--dataset or manifest `dataset`)");
    };
    let out = a
        .out
        .or(m.out_dir.map(|d| d.join("report")))
        .unwrap_or_else(|| PathBuf::from("report"));
    let ds = oracle::load_oracle(&dataset)?;
    let runs = pipeline::read_runs(&a.runs)?;
    let report = pipeline::evaluate_runs(&runs, &ds, &out, a.outlier_threshold.or(m.outlier_threshold))?;
    print!("{}", eval::summary(&report));
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(a: ReportArgs) -> Result<ExitCode> {
    let loaded = eval::load_report(&a.dir)?;
    let summary = a.dir.join(eval::SUMMARY_FILE);
    match std::fs::read_to_string(&summary) {
        Ok(text) => print!("{text}"),
        Err(_) => {
            for m in &loaded.metrics {
                println!(
                    "{} {} {:.3} {:.3} {:.3}",
                    m.variant, m.regime, m.pooled.recall, m.pooled.precision, m.pooled.f1
                );
            }
        }
    }
    for table in &loaded.overlap {
        println!();
        println!("Overlap of true positives ({})", table.regime);
        print!("{:<10}", "");
        for v in &table.variants {
            print!(" {v:>8}");
        }
        println!();
        for (v, row) in table.variants.iter().zip(&table.values) {
            print!("{v:<10}");
            for x in row {
                print!(" {x:>8.3}");
            }
            println!();
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_import(a: ImportArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let (ds, report) = import_replication(&text, &a.provenance)?;
    ds.save(&a.out)?;
    println!("imported {} records", report.records);
    for (field, n) in &report.ignored_fields {
        println!("  ignored field {field} ({n})");
    }
    for (lang, n) in &report.other_languages {
        println!("  counted as Others: {lang} ({n})");
    }
    Ok(ExitCode::SUCCESS)
}
