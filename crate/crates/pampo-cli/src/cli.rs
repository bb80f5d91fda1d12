//! Batch front end: extraction, evaluation, run comparison, corpus
//! statistics and frequency reports.
//!
//! Results go to stdout (or `--out`); warnings and errors go to stderr.
//! Exit codes: 0 success, 1 configuration or load errors, 2 data-level
//! failures (unreadable corpus files, dangling document ids, mismatched
//! dumps).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use pampo::corpus::{csv_field, CorpusLoad};
use pampo::tagging::TagProvider;
use pampo::{
    corpus_stats, default_bases, diff_stats, filter_gold_types, frequency_report,
    generate_candidates, load_corpus, load_gold, load_mentions, load_pattern_bases,
    ztest_from_summary, CandidateEntity, Document, EntityType, EvalMode, EvalReport,
    GoldAnnotation, Mention, NamedEntity, PatternBases,
};

pub const PATTERNS_ENV: &str = "PAMPO_PATTERNS";

#[derive(Parser)]
#[command(
    name = "pampo",
    version,
    about = "Two-phase rule-based named-entity extraction for Portuguese text"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract named entities from a corpus directory
    Extract(ExtractArgs),
    /// Score extraction against gold annotations
    Evaluate(EvaluateArgs),
    /// Compare two extraction dumps against the same gold
    Compare(CompareArgs),
    /// Corpus statistics (documents, words, gold counts)
    Stats(StatsArgs),
    /// Frequency report of candidate vs selected surfaces
    Freq(FreqArgs),
}

#[derive(Args)]
struct PipelineOpts {
    /// Pattern-base file (default: $PAMPO_PATTERNS, else built-in defaults)
    #[arg(long, value_name = "PATH")]
    patterns: Option<PathBuf>,
    /// Tagger: `builtin` or `pretagged=PATH`
    #[arg(long, default_value = "builtin", value_name = "CHOICE")]
    tagger: TaggerChoice,
    /// Worker threads for per-document processing
    #[arg(long, default_value_t = 1, value_name = "N")]
    workers: usize,
}

#[derive(Clone)]
enum TaggerChoice {
    Builtin,
    Pretagged(PathBuf),
}

impl FromStr for TaggerChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "builtin" {
            return Ok(TaggerChoice::Builtin);
        }
        if let Some(path) = s.strip_prefix("pretagged=") {
            if path.is_empty() {
                return Err("pretagged tagger needs a path: pretagged=PATH".into());
            }
            return Ok(TaggerChoice::Pretagged(PathBuf::from(path)));
        }
        Err(format!(
            "unknown tagger '{s}' (expected 'builtin' or 'pretagged=PATH')"
        ))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Jsonl,
    Csv,
    Tsv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Occurrence-level scoring, half credit for partial overlaps
    Occurrence,
    /// Unique-entity scoring, fractional content-token credit
    Unique,
}

impl From<ModeArg> for EvalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Occurrence => EvalMode::OccurrenceHalf,
            ModeArg::Unique => EvalMode::UniqueFractional,
        }
    }
}

#[derive(Args)]
struct ExtractArgs {
    /// Directory of UTF-8 .txt documents
    corpus_dir: PathBuf,
    #[command(flatten)]
    pipeline: PipelineOpts,
    /// Output format
    #[arg(long, value_enum, default_value_t = OutputFormat::Jsonl)]
    format: OutputFormat,
    /// Write results to a file instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    corpus_dir: PathBuf,
    /// Gold annotations (JSON-lines: {doc, start, end, surface, type})
    gold: PathBuf,
    #[command(flatten)]
    pipeline: PipelineOpts,
    /// Matching mode
    #[arg(long, value_enum, default_value_t = ModeArg::Unique)]
    mode: ModeArg,
    /// Gold types to exclude, comma separated (e.g. PER,MISC)
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    exclude_types: Vec<String>,
    /// Write the per-document breakdown as CSV to this path
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Our extraction dump (JSON-lines: {doc, surface, start?, end?})
    ours: PathBuf,
    /// The other extractor's dump, same format
    theirs: PathBuf,
    /// Gold annotations
    gold: PathBuf,
    /// Matching mode
    #[arg(long, value_enum, default_value_t = ModeArg::Unique)]
    mode: ModeArg,
    /// Gold types to exclude, comma separated
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    exclude_types: Vec<String>,
    /// Null-hypothesis means for the one-sided z-test, comma separated
    #[arg(
        long,
        value_name = "LIST",
        value_delimiter = ',',
        default_value = "0.25"
    )]
    mu0: Vec<f64>,
    /// Write per-document metric differences as CSV to this path
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    corpus_dir: PathBuf,
    /// Optional gold annotations for entity counts
    gold: Option<PathBuf>,
}

#[derive(Args)]
struct FreqArgs {
    corpus_dir: PathBuf,
    #[command(flatten)]
    pipeline: PipelineOpts,
    /// Keep only surfaces with at least this many candidate occurrences
    #[arg(long, default_value_t = 1, value_name = "N")]
    min_count: usize,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

/// Command failure with its exit code; message goes to stderr.
struct CmdError {
    code: u8,
    message: String,
}

fn config_err(message: impl Into<String>) -> CmdError {
    CmdError {
        code: 1,
        message: message.into(),
    }
}

fn data_err(message: impl Into<String>) -> CmdError {
    CmdError {
        code: 2,
        message: message.into(),
    }
}

type CmdResult = Result<(), CmdError>;

pub fn run(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Extract(args) => cmd_extract(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Freq(args) => cmd_freq(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn resolve_bases(flag: &Option<PathBuf>) -> Result<PatternBases, CmdError> {
    let path = flag
        .clone()
        .or_else(|| std::env::var_os(PATTERNS_ENV).map(PathBuf::from));
    match path {
        Some(p) => load_pattern_bases(&p).map_err(|e| config_err(e.to_string())),
        None => Ok(default_bases()),
    }
}

fn resolve_tagger(choice: &TaggerChoice) -> Result<Box<dyn TagProvider>, CmdError> {
    match choice {
        TaggerChoice::Builtin => Ok(Box::new(pampo::builtin_tagger())),
        TaggerChoice::Pretagged(path) => {
            let provider =
                pampo::pretagged_provider(path).map_err(|e| config_err(e.to_string()))?;
            for w in provider.warnings() {
                eprintln!("warning: {w}");
            }
            Ok(Box::new(provider))
        }
    }
}

fn load_documents(dir: &Path) -> Result<CorpusLoad, CmdError> {
    load_corpus(dir).map_err(|e| config_err(e.to_string()))
}

fn parse_excluded(types: &[String]) -> Result<BTreeSet<EntityType>, CmdError> {
    let mut out = BTreeSet::new();
    for t in types {
        let t = t.trim();
        if t.is_empty() {
            continue;
        }
        match EntityType::parse(t) {
            Some(ty) => {
                out.insert(ty);
            }
            None => return Err(config_err(format!("unknown entity type '{t}'"))),
        }
    }
    Ok(out)
}

/// Phase-1 candidates and Phase-2 survivors of one document.
type DocRun = (Vec<CandidateEntity>, Vec<NamedEntity>);

/// Run the pipeline over all documents with the configured worker count.
/// Document order (sorted by id) is preserved in the output.
fn run_pipeline(
    docs: &[Document],
    bases: &PatternBases,
    tagger: &dyn TagProvider,
    workers: usize,
) -> Result<Vec<DocRun>, CmdError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| config_err(format!("cannot build worker pool: {e}")))?;
    let results: Vec<Result<_, pampo::tagging::TagError>> = pool.install(|| {
        docs.par_iter()
            .map(|doc| {
                let candidates = generate_candidates(doc, bases);
                let entities = pampo::select_entities(doc, &candidates, bases, tagger)?;
                Ok((candidates, entities))
            })
            .collect()
    });
    results
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| config_err(e.to_string()))
}

fn write_output(out: &Option<PathBuf>, content: &str) -> CmdResult {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| config_err(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn report_failures(load: &CorpusLoad) -> CmdResult {
    if load.failures.is_empty() {
        return Ok(());
    }
    for f in &load.failures {
        eprintln!("warning: skipped {}: {}", f.path.display(), f.message);
    }
    let names: Vec<String> = load
        .failures
        .iter()
        .map(|f| f.path.display().to_string())
        .collect();
    Err(data_err(format!(
        "failed to load {} file(s): {}",
        names.len(),
        names.join(", ")
    )))
}

fn cmd_extract(args: ExtractArgs) -> CmdResult {
    let bases = resolve_bases(&args.pipeline.patterns)?;
    let tagger = resolve_tagger(&args.pipeline.tagger)?;
    let load = load_documents(&args.corpus_dir)?;
    let results = run_pipeline(
        &load.documents,
        &bases,
        tagger.as_ref(),
        args.pipeline.workers,
    )?;

    let mut content = String::new();
    match args.format {
        OutputFormat::Jsonl => {
            for (_, entities) in &results {
                for e in entities {
                    let line = serde_json::json!({
                        "doc": e.doc_id,
                        "surface": e.surface,
                        "start": e.start,
                        "end": e.end,
                        "sentence": e.sentence_index,
                    });
                    content.push_str(&line.to_string());
                    content.push('\n');
                }
            }
        }
        OutputFormat::Csv | OutputFormat::Tsv => {
            let sep = if matches!(args.format, OutputFormat::Csv) {
                ","
            } else {
                "\t"
            };
            content.push_str(&["doc", "surface", "start", "end", "sentence"].join(sep));
            content.push('\n');
            for (_, entities) in &results {
                for e in entities {
                    let fields = [
                        csv_field(&e.doc_id),
                        csv_field(&e.surface),
                        e.start.to_string(),
                        e.end.to_string(),
                        e.sentence_index.to_string(),
                    ];
                    content.push_str(&fields.join(sep));
                    content.push('\n');
                }
            }
        }
    }
    write_output(&args.out, &content)?;
    report_failures(&load)
}

fn check_gold_docs(gold: &[GoldAnnotation], docs: &[Document]) -> CmdResult {
    let ids: BTreeSet<&str> = docs.iter().map(|d| d.id.as_str()).collect();
    let mut dangling: Vec<&str> = gold
        .iter()
        .map(|g| g.doc.as_str())
        .filter(|d| !ids.contains(d))
        .collect();
    dangling.sort_unstable();
    dangling.dedup();
    if dangling.is_empty() {
        Ok(())
    } else {
        Err(data_err(format!(
            "gold references unknown documents: {}",
            dangling.join(", ")
        )))
    }
}

fn format_report(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("mode: {}\n", report.mode.name()));
    out.push_str(&format!("documents: {}\n", report.per_document.len()));
    out.push_str(&format!(
        "gold: {}  extracted: {}  credit: {:.3}\n",
        report.gold_total, report.extracted_total, report.credit_sum
    ));
    out.push_str(&format!(
        "recall: {:.3}{}  precision: {:.3}{}  F1: {:.3}\n",
        report.recall,
        if report.recall_undefined {
            " (undefined: no gold)"
        } else {
            ""
        },
        report.precision,
        if report.precision_undefined {
            " (undefined: no extractions)"
        } else {
            ""
        },
        report.f1
    ));
    if !report.per_type_recall.is_empty() {
        out.push_str("recall by type:\n");
        for (ty, r) in &report.per_type_recall {
            out.push_str(&format!("  {:<5} {:.3}\n", ty.name(), r));
        }
    }
    out
}

fn per_doc_csv(report: &EvalReport) -> String {
    let mut out = String::from("doc,gold_count,extracted_count,credit,recall,precision,f1\n");
    for d in &report.per_document {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            csv_field(&d.doc),
            d.gold_count,
            d.extracted_count,
            d.credit,
            d.recall,
            d.precision,
            d.f1
        ));
    }
    out
}

fn cmd_evaluate(args: EvaluateArgs) -> CmdResult {
    let bases = resolve_bases(&args.pipeline.patterns)?;
    let tagger = resolve_tagger(&args.pipeline.tagger)?;
    let excluded = parse_excluded(&args.exclude_types)?;
    let load = load_documents(&args.corpus_dir)?;
    let gold = load_gold(&args.gold).map_err(|e| config_err(e.to_string()))?;
    check_gold_docs(&gold, &load.documents)?;
    let gold = filter_gold_types(&gold, &excluded);

    let results = run_pipeline(
        &load.documents,
        &bases,
        tagger.as_ref(),
        args.pipeline.workers,
    )?;
    let mentions: Vec<Mention> = results
        .iter()
        .flat_map(|(_, entities)| entities.iter().map(Mention::from))
        .collect();
    let report = pampo::eval::score(&mentions, &gold, args.mode.into())
        .map_err(|e| config_err(e.to_string()))?;

    print!("{}", format_report(&report));
    if let Some(path) = &args.out {
        write_output(&Some(path.clone()), &per_doc_csv(&report))?;
    }
    report_failures(&load)
}

fn cmd_compare(args: CompareArgs) -> CmdResult {
    let ours = load_mentions(&args.ours).map_err(|e| config_err(e.to_string()))?;
    let theirs = load_mentions(&args.theirs).map_err(|e| config_err(e.to_string()))?;
    let gold = load_gold(&args.gold).map_err(|e| config_err(e.to_string()))?;
    let excluded = parse_excluded(&args.exclude_types)?;
    let gold = filter_gold_types(&gold, &excluded);
    let mode: EvalMode = args.mode.into();

    let gold_docs: BTreeSet<&str> = gold.iter().map(|g| g.doc.as_str()).collect();
    for (name, dump) in [("first", &ours), ("second", &theirs)] {
        let extra: BTreeSet<&str> = dump
            .iter()
            .map(|m| m.doc.as_str())
            .filter(|d| !gold_docs.contains(d))
            .collect();
        if !extra.is_empty() {
            return Err(data_err(format!(
                "{name} dump references documents outside the gold set: {}",
                extra.into_iter().collect::<Vec<_>>().join(", ")
            )));
        }
    }

    // per-document metrics over the gold's document set
    let doc_metrics = |dump: &[Mention]| -> Result<Vec<(String, f64, f64, f64)>, CmdError> {
        let mut rows = Vec::new();
        for doc in &gold_docs {
            let e_doc: Vec<Mention> = dump.iter().filter(|m| &m.doc == doc).cloned().collect();
            let g_doc: Vec<GoldAnnotation> =
                gold.iter().filter(|g| &g.doc == doc).cloned().collect();
            let report =
                pampo::eval::score(&e_doc, &g_doc, mode).map_err(|e| config_err(e.to_string()))?;
            rows.push((doc.to_string(), report.recall, report.precision, report.f1));
        }
        Ok(rows)
    };
    let ours_rows = doc_metrics(&ours)?;
    let theirs_rows = doc_metrics(&theirs)?;

    let metric = |rows: &[(String, f64, f64, f64)], pick: usize| -> Vec<(String, f64)> {
        rows.iter()
            .map(|(d, r, p, f)| (d.clone(), [*r, *p, *f][pick]))
            .collect()
    };

    let mut out = String::new();
    out.push_str(&format!("documents: {}\n", gold_docs.len()));
    out.push_str(&format!("mode: {}\n\n", mode.name()));
    out.push_str(&format!(
        "{:<10} {:>8} {:>8} {:>8} {:>10} {:>10}\n",
        "metric", "diff>0", "diff=0", "diff<0", "mean", "sd"
    ));

    let mut all_stats = Vec::new();
    for (name, pick) in [("recall", 0), ("precision", 1), ("f1", 2)] {
        let stats = diff_stats(&metric(&ours_rows, pick), &metric(&theirs_rows, pick))
            .map_err(|e| data_err(e.to_string()))?;
        out.push_str(&format!(
            "{:<10} {:>8} {:>8} {:>8} {:>10.3} {:>10.3}\n",
            name,
            stats.count_positive,
            stats.count_zero,
            stats.count_negative,
            stats.mean,
            stats.sd
        ));
        all_stats.push((name, stats));
    }

    out.push_str("\nz-tests (H1: mean difference > mu0):\n");
    out.push_str(&format!(
        "{:<10} {:>8} {:>10} {:>12}\n",
        "metric", "mu0", "z", "p"
    ));
    for (name, stats) in &all_stats {
        for mu0 in &args.mu0 {
            let n = stats.diffs.len();
            match ztest_from_summary(stats.mean, stats.sd, n, *mu0) {
                Ok(t) => out.push_str(&format!(
                    "{:<10} {:>8.3} {:>10.3} {:>12.3e}\n",
                    name, mu0, t.z, t.p_value
                )),
                Err(e) => out.push_str(&format!("{:<10} {:>8.3} not applicable: {e}\n", name, mu0)),
            }
        }
    }
    print!("{out}");

    if let Some(path) = &args.out {
        let mut csv = String::from("doc,recall_diff,precision_diff,f1_diff\n");
        let by_doc: std::collections::BTreeMap<&str, [f64; 3]> = all_stats[0]
            .1
            .diffs
            .iter()
            .zip(&all_stats[1].1.diffs)
            .zip(&all_stats[2].1.diffs)
            .map(|(((d, r), (_, p)), (_, f))| (d.as_str(), [*r, *p, *f]))
            .collect();
        for (doc, [r, p, f]) in by_doc {
            csv.push_str(&format!("{},{},{},{}\n", csv_field(doc), r, p, f));
        }
        write_output(&Some(path.clone()), &csv)?;
    }
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> CmdResult {
    let load = load_documents(&args.corpus_dir)?;
    let gold = match &args.gold {
        Some(path) => load_gold(path).map_err(|e| config_err(e.to_string()))?,
        None => Vec::new(),
    };
    let stats = corpus_stats(&load.documents, &gold).map_err(|e| data_err(e.to_string()))?;

    let mut out = String::new();
    out.push_str(&format!("documents: {}\n", stats.documents));
    out.push_str(&format!(
        "words per document: min {}  max {}  mean {:.1}\n",
        stats.words_min, stats.words_max, stats.words_mean
    ));
    out.push_str(&format!("gold entities: {}\n", stats.entities_total));
    for (ty, count) in &stats.entities_by_type {
        out.push_str(&format!("  {:<5} {}\n", ty.name(), count));
    }
    print!("{out}");
    report_failures(&load)
}

fn cmd_freq(args: FreqArgs) -> CmdResult {
    let bases = resolve_bases(&args.pipeline.patterns)?;
    let tagger = resolve_tagger(&args.pipeline.tagger)?;
    let load = load_documents(&args.corpus_dir)?;
    let results = run_pipeline(
        &load.documents,
        &bases,
        tagger.as_ref(),
        args.pipeline.workers,
    )?;

    let candidates: Vec<CandidateEntity> = results
        .iter()
        .flat_map(|(c, _)| c.iter().cloned())
        .collect();
    let entities: Vec<NamedEntity> = results
        .iter()
        .flat_map(|(_, e)| e.iter().cloned())
        .collect();
    let report = frequency_report(&candidates, &entities, args.min_count);
    write_output(&args.out, &report.to_csv())?;
    report_failures(&load)
}
