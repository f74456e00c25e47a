//! Command line front end for the factuality engine.
//!
//! Subcommands cover the full workflow: compile a TSV edge list into a binary
//! index (`build-index`), score a single response (`score`) or a JSONL batch
//! (`batch`), benchmark against labeled claims (`mfv`), perturb a graph
//! (`perturb`), reject low-scoring responses (`rta`), and histogram the
//! relations behind the weakest claims (`typology`).
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 provider error.
//! Diagnostics go to stderr; results go to files or stdout.
//!
//! Secrets and endpoints come from the environment, never from flags:
//! `FAITH_LLM_ENDPOINT` and `FAITH_LLM_API_KEY` configure the chat extractor,
//! `FAITH_RESOLVER_ENDPOINT` enables the external entity resolver.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use faith_core::evidence::PathCaps;
use faith_core::extract::provider::HttpChatProvider;
use faith_core::extract::rules::PatternTable;
use faith_core::extract::{ExtractionConfig, Strategy};
use faith_core::graph::index_io::{load_index, save_index};
use faith_core::graph::loader::{load_edge_list, load_embedding_table};
use faith_core::graph::{BuildParams, StatOverrides};
use faith_core::harness::batch::{
    load_references, load_responses, run_batch, summary_tsv, BaselineSelection,
};
use faith_core::harness::perturb::{perturb_kg, PerturbMode};
use faith_core::harness::{apply_rta, load_labeled_claims, mfv_benchmark, rta_threshold};
use faith_core::pipeline::{evaluate_response, Extractor, JudgeOptions};
use faith_core::report::{
    error_typology, render_text, to_canonical_json, ResponseReport, DEFAULT_LOWEST_K,
};
use faith_core::resolve::{ExternalResolver, HttpResolver, NoExternal, DEFAULT_EXTERNAL_CUTOFF};
use faith_core::{FaithError, Result};

const ENV_LLM_API_KEY: &str = "FAITH_LLM_API_KEY";
const ENV_LLM_ENDPOINT: &str = "FAITH_LLM_ENDPOINT";
const ENV_RESOLVER_ENDPOINT: &str = "FAITH_RESOLVER_ENDPOINT";

#[derive(Parser)]
#[command(
    name = "faith",
    version,
    about = "Reference-free factuality scoring over a knowledge graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a TSV edge list into a binary graph index.
    BuildIndex(BuildIndexArgs),
    /// Score one response text against an index.
    Score(ScoreArgs),
    /// Score a JSONL batch of responses and write per-response reports.
    Batch(BatchArgs),
    /// Benchmark scoring against labeled true/false claims.
    Mfv(MfvArgs),
    /// Apply a seeded random structural perturbation to an index.
    Perturb(PerturbArgs),
    /// Split batch reports into kept/rejected by aggregate-score percentile.
    Rta(RtaArgs),
    /// Histogram evidence relations among each report's weakest claims.
    Typology(TypologyArgs),
}

#[derive(Args)]
struct BuildIndexArgs {
    /// Edge list TSV: subject_id, subject_label, relation, object_id, object_label.
    #[arg(long)]
    kg: PathBuf,
    /// Skip the first line of the edge list.
    #[arg(long)]
    has_header: bool,
    /// Synonym TSV: alias, node_id.
    #[arg(long)]
    synonyms: Option<PathBuf>,
    /// Label embedding TSV: label, then one column per vector component.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Centrality sharpness used in path scoring.
    #[arg(long, default_value_t = BuildParams::default().alpha)]
    alpha: f64,
    /// Co-occurrence smoothing constant.
    #[arg(long, default_value_t = BuildParams::default().epsilon)]
    epsilon: f64,
    /// PageRank damping factor.
    #[arg(long, default_value_t = BuildParams::default().damping)]
    damping: f64,
    /// PageRank convergence tolerance (L1).
    #[arg(long, default_value_t = BuildParams::default().tolerance)]
    tolerance: f64,
    /// PageRank iteration cap.
    #[arg(long, default_value_t = BuildParams::default().max_iterations)]
    max_iterations: usize,
    /// Where to write the index.
    #[arg(long)]
    out: PathBuf,
}

/// Evidence-search and verdict knobs shared by the scoring subcommands.
#[derive(Args)]
struct JudgeFlags {
    /// Longest evidence path considered, in relation steps.
    #[arg(long, default_value_t = PathCaps::default().max_hops)]
    hop_cap: usize,
    /// Most evidence paths enumerated per claim.
    #[arg(long, default_value_t = PathCaps::default().max_paths)]
    path_cap: usize,
    /// How many weakest claims each report surfaces.
    #[arg(long, default_value_t = DEFAULT_LOWEST_K)]
    lowest_k: usize,
    /// Minimum confidence accepted from the external resolver.
    #[arg(long, default_value_t = DEFAULT_EXTERNAL_CUTOFF)]
    resolver_cutoff: f64,
}

impl JudgeFlags {
    fn options(&self) -> JudgeOptions {
        JudgeOptions {
            caps: PathCaps {
                max_hops: self.hop_cap,
                max_paths: self.path_cap,
            },
            external_cutoff: self.resolver_cutoff,
            lowest_k: self.lowest_k,
        }
    }
}

/// Claim-extraction knobs shared by `score` and `batch`.
#[derive(Args)]
struct ExtractorFlags {
    /// Claim extractor: offline pattern rules, or a chat endpoint.
    #[arg(long, value_enum, default_value_t = ExtractorKind::Rules)]
    extractor: ExtractorKind,
    /// Chat prompting strategy: base, base+critical, base+multi, full.
    #[arg(long, default_value = "full")]
    strategy: String,
    /// Extraction rounds for multi-round strategies.
    #[arg(long, default_value_t = 3)]
    rounds: usize,
    /// Model name sent to the chat endpoint.
    #[arg(long, default_value = "default")]
    llm_model: String,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ExtractorKind {
    Rules,
    Llm,
}

#[derive(Args)]
struct ScoreArgs {
    /// Graph index produced by build-index.
    #[arg(long)]
    index: PathBuf,
    /// File holding the response text.
    #[arg(long, conflicts_with = "stdin")]
    text: Option<PathBuf>,
    /// Read the response text from standard input instead.
    #[arg(long)]
    stdin: bool,
    /// Response id stamped into the report.
    #[arg(long, default_value = "response")]
    id: String,
    /// Model tag recorded in the report.
    #[arg(long)]
    model: Option<String>,
    #[command(flatten)]
    extraction: ExtractorFlags,
    #[command(flatten)]
    judge: JudgeFlags,
    /// Write the JSON report here; the text summary still goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BatchArgs {
    /// Graph index produced by build-index.
    #[arg(long)]
    index: PathBuf,
    /// JSONL responses: {"id", "text"} with optional "model".
    #[arg(long)]
    responses: PathBuf,
    /// JSONL references: {"id", "reference"}; enables the text-overlap baselines.
    #[arg(long)]
    references: Option<PathBuf>,
    /// Comma-separated baselines to compute: kl, klrel, bleu4, rougel.
    #[arg(long)]
    baselines: Option<String>,
    #[command(flatten)]
    extraction: ExtractorFlags,
    #[command(flatten)]
    judge: JudgeFlags,
    /// Worker threads for response-level parallelism (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory for report_<id>.json, summary.json, summary.tsv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MfvArgs {
    /// Graph index produced by build-index.
    #[arg(long)]
    index: PathBuf,
    /// JSONL labeled claims: {"subject", "relation", "object", "label"}.
    #[arg(long)]
    claims: PathBuf,
    #[command(flatten)]
    judge: JudgeFlags,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PerturbArgs {
    /// Graph index produced by build-index.
    #[arg(long)]
    index: PathBuf,
    /// Perturbation mode: edge_delete, node_delete, edge_insert.
    #[arg(long)]
    mode: String,
    /// Fraction of edges or nodes to touch, strictly between 0 and 1.
    #[arg(long)]
    fraction: f64,
    /// RNG seed; equal seeds give byte-identical output.
    #[arg(long)]
    seed: u64,
    /// Where to write the perturbed index.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RtaArgs {
    /// Directory of report_*.json files from a batch run.
    #[arg(long)]
    reports: PathBuf,
    /// Rejection percentile over the batch's aggregate scores, in [0,1].
    #[arg(long)]
    percentile: f64,
    /// Two comma-separated output paths: kept.jsonl,rejected.jsonl.
    #[arg(long)]
    out: String,
}

#[derive(Args)]
struct TypologyArgs {
    /// Directory of report_*.json files from a batch run.
    #[arg(long)]
    reports: PathBuf,
    /// How many weakest claims to take from each report.
    #[arg(long, default_value_t = DEFAULT_LOWEST_K)]
    k: usize,
    /// How many relation labels to print.
    #[arg(long, default_value_t = 5)]
    top: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // --help and --version land here too; only real parse failures are
        // usage errors.
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &FaithError) -> u8 {
    match err {
        FaithError::InvalidParam(_) => 1,
        FaithError::Provider(_) | FaithError::Extraction(_) => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildIndex(args) => cmd_build_index(args),
        Command::Score(args) => cmd_score(args),
        Command::Batch(args) => cmd_batch(args),
        Command::Mfv(args) => cmd_mfv(args),
        Command::Perturb(args) => cmd_perturb(args),
        Command::Rta(args) => cmd_rta(args),
        Command::Typology(args) => cmd_typology(args),
    }
}

/// An extractor plus whatever it borrows, kept alive together.
enum BuiltExtractor {
    Rules(PatternTable),
    Chat {
        provider: HttpChatProvider,
        config: ExtractionConfig,
    },
}

impl BuiltExtractor {
    fn from_flags(flags: &ExtractorFlags) -> Result<Self> {
        match flags.extractor {
            ExtractorKind::Rules => Ok(BuiltExtractor::Rules(PatternTable::default_table())),
            ExtractorKind::Llm => {
                let endpoint = std::env::var(ENV_LLM_ENDPOINT).map_err(|_| {
                    FaithError::InvalidParam(format!(
                        "--extractor llm needs the {ENV_LLM_ENDPOINT} environment variable"
                    ))
                })?;
                let api_key = std::env::var(ENV_LLM_API_KEY).ok();
                let strategy: Strategy = flags.strategy.parse()?;
                Ok(BuiltExtractor::Chat {
                    provider: HttpChatProvider::new(endpoint, api_key, &flags.llm_model)?,
                    config: ExtractionConfig {
                        strategy,
                        rounds: flags.rounds,
                        ..ExtractionConfig::default()
                    },
                })
            }
        }
    }

    fn as_extractor(&self) -> Extractor<'_> {
        match self {
            BuiltExtractor::Rules(table) => Extractor::Rules(table),
            BuiltExtractor::Chat { provider, config } => Extractor::Chat { provider, config },
        }
    }
}

fn external_resolver() -> Result<Box<dyn ExternalResolver>> {
    match std::env::var(ENV_RESOLVER_ENDPOINT) {
        Ok(url) if !url.trim().is_empty() => Ok(Box::new(HttpResolver::new(url)?)),
        _ => Ok(Box::new(NoExternal)),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| FaithError::io(path, e))
}

fn cmd_build_index(args: BuildIndexArgs) -> Result<()> {
    let mut builder = load_edge_list(&args.kg, args.has_header)?;
    if let Some(path) = &args.synonyms {
        let report = builder.load_synonyms(path)?;
        eprintln!(
            "synonyms: {} applied, {} skipped",
            report.applied, report.skipped
        );
    }
    for warning in builder.warnings() {
        eprintln!("warning: {warning}");
    }
    let params = BuildParams {
        alpha: args.alpha,
        epsilon: args.epsilon,
        damping: args.damping,
        tolerance: args.tolerance,
        max_iterations: args.max_iterations,
    };
    let embeddings = match &args.embeddings {
        Some(path) => load_embedding_table(path)?,
        None => BTreeMap::new(),
    };
    let graph = builder.build_with(params, StatOverrides::default(), embeddings)?;
    save_index(&graph, &args.out)?;
    let stats = graph.stats();
    eprintln!(
        "indexed {} nodes, {} edges, {} relations (pagerank converged: {})",
        stats.nodes, stats.edges, stats.relations, stats.pagerank_converged
    );
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let text = match (&args.text, args.stdin) {
        (Some(path), false) => {
            std::fs::read_to_string(path).map_err(|e| FaithError::io(path, e))?
        }
        (None, true) => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| FaithError::Other(format!("reading stdin: {e}")))?;
            buf
        }
        _ => {
            return Err(FaithError::InvalidParam(
                "pass exactly one of --text or --stdin".into(),
            ))
        }
    };
    let graph = load_index(&args.index)?;
    let built = BuiltExtractor::from_flags(&args.extraction)?;
    let external = external_resolver()?;
    let report = evaluate_response(
        &graph,
        &args.id,
        args.model.as_deref(),
        &text,
        &built.as_extractor(),
        external.as_ref(),
        &args.judge.options(),
    )?;
    print!("{}", render_text(&report));
    if let Some(out) = &args.out {
        write_file(out, &(to_canonical_json(&report)? + "\n"))?;
    }
    Ok(())
}

/// Turns a response id into a safe, stable filename stem. Distinct ids that
/// sanitize identically get deterministic numeric suffixes.
fn report_filenames(reports: &[ResponseReport]) -> Vec<String> {
    let mut used = BTreeSet::new();
    reports
        .iter()
        .map(|report| {
            let stem: String = report
                .response_id
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || matches!(c, '-' | '.' | '_') {
                        c
                    } else {
                        '_'
                    }
                })
                .collect();
            let stem = if stem.is_empty() {
                "response".to_string()
            } else {
                stem
            };
            let mut name = format!("report_{stem}.json");
            let mut n = 1usize;
            while !used.insert(name.clone()) {
                n += 1;
                name = format!("report_{stem}_{n}.json");
            }
            name
        })
        .collect()
}

fn cmd_batch(args: BatchArgs) -> Result<()> {
    let graph = load_index(&args.index)?;
    let rows = load_responses(&args.responses)?;
    let references = match &args.references {
        Some(path) => load_references(path)?,
        None => BTreeMap::new(),
    };
    let selection = match &args.baselines {
        Some(csv) => BaselineSelection::parse(csv)?,
        None => BaselineSelection::default(),
    };
    let built = BuiltExtractor::from_flags(&args.extraction)?;
    let external = external_resolver()?;
    let opts = args.judge.options();

    let run = || {
        run_batch(
            &graph,
            &rows,
            &built.as_extractor(),
            external.as_ref(),
            &opts,
            selection,
            &references,
        )
    };
    let outcome = match args.jobs {
        None => run(),
        Some(0) => return Err(FaithError::InvalidParam("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| FaithError::Other(format!("thread pool: {e}")))?
            .install(run),
    };

    std::fs::create_dir_all(&args.out).map_err(|e| FaithError::io(&args.out, e))?;
    let names = report_filenames(&outcome.reports);
    for (report, name) in outcome.reports.iter().zip(&names) {
        write_file(&args.out.join(name), &(to_canonical_json(report)? + "\n"))?;
    }
    write_file(
        &args.out.join("summary.json"),
        &(to_canonical_json(&outcome.summary)? + "\n"),
    )?;
    write_file(&args.out.join("summary.tsv"), &summary_tsv(&outcome.summary))?;
    eprintln!(
        "batch: {} responses scored, {} failed, reports in {}",
        outcome.summary.n_responses,
        outcome.summary.n_failed,
        args.out.display()
    );
    Ok(())
}

fn cmd_mfv(args: MfvArgs) -> Result<()> {
    let graph = load_index(&args.index)?;
    let claims = load_labeled_claims(&args.claims)?;
    let external = external_resolver()?;
    let result = mfv_benchmark(&graph, &claims, external.as_ref(), &args.judge.options())?;
    let json = to_canonical_json(&result)? + "\n";
    match &args.out {
        Some(path) => {
            write_file(path, &json)?;
            eprintln!(
                "mfv: {} claims, {} unverifiable, auc {}",
                result.n_claims,
                result.n_unverifiable,
                result
                    .auc
                    .map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"))
            );
        }
        None => print!("{json}"),
    }
    Ok(())
}

fn cmd_perturb(args: PerturbArgs) -> Result<()> {
    let graph = load_index(&args.index)?;
    let mode: PerturbMode = args.mode.parse()?;
    let perturbed = perturb_kg(&graph, mode, args.fraction, args.seed)?;
    save_index(&perturbed, &args.out)?;
    let before = graph.stats();
    let after = perturbed.stats();
    eprintln!(
        "perturb {mode}: {} nodes, {} edges -> {} nodes, {} edges",
        before.nodes, before.edges, after.nodes, after.edges
    );
    Ok(())
}

/// Loads every report_*.json in a batch output directory, in filename order.
fn load_reports_dir(dir: &Path) -> Result<Vec<ResponseReport>> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| FaithError::io(dir, e))? {
        let entry = entry.map_err(|e| FaithError::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with("report_") && name.ends_with(".json") {
            paths.push(entry.path());
        }
    }
    paths.sort();
    let mut reports = Vec::with_capacity(paths.len());
    for path in paths {
        let text = std::fs::read_to_string(&path).map_err(|e| FaithError::io(&path, e))?;
        let report: ResponseReport =
            serde_json::from_str(&text).map_err(|e| FaithError::BadRecord {
                path: path.clone(),
                line: 1,
                reason: e.to_string(),
            })?;
        reports.push(report);
    }
    if reports.is_empty() {
        return Err(FaithError::Other(format!(
            "no report_*.json files in {}",
            dir.display()
        )));
    }
    Ok(reports)
}

fn write_jsonl(path: &Path, reports: &[&ResponseReport]) -> Result<()> {
    let mut out = String::new();
    for report in reports {
        let value = serde_json::to_value(report)
            .map_err(|e| FaithError::Other(format!("serializing report: {e}")))?;
        out.push_str(&value.to_string());
        out.push('\n');
    }
    write_file(path, &out)
}

fn cmd_rta(args: RtaArgs) -> Result<()> {
    let parts: Vec<&str> = args.out.split(',').collect();
    if parts.len() != 2 || parts.iter().any(|p| p.trim().is_empty()) {
        return Err(FaithError::InvalidParam(
            "--out expects two comma-separated paths: kept.jsonl,rejected.jsonl".into(),
        ));
    }
    if !(0.0..=1.0).contains(&args.percentile) {
        return Err(FaithError::InvalidParam(
            "--percentile must lie in [0,1]".into(),
        ));
    }
    let (kept_path, rejected_path) = (
        PathBuf::from(parts[0].trim()),
        PathBuf::from(parts[1].trim()),
    );
    let reports = load_reports_dir(&args.reports)?;
    let scores: Vec<f64> = reports.iter().filter_map(|r| r.aggregate_score).collect();
    let threshold = rta_threshold(&scores, args.percentile);
    let (kept, rejected) = match threshold {
        Some(t) => apply_rta(&reports, t),
        // No scored report at all: everything is rejected.
        None => (Vec::new(), reports.iter().collect()),
    };
    write_jsonl(&kept_path, &kept)?;
    write_jsonl(&rejected_path, &rejected)?;
    match threshold {
        Some(t) => eprintln!(
            "rta: threshold {t:.6} at percentile {}, kept {}, rejected {}",
            args.percentile,
            kept.len(),
            rejected.len()
        ),
        None => eprintln!(
            "rta: no scored reports, rejected all {}",
            rejected.len()
        ),
    }
    Ok(())
}

fn cmd_typology(args: TypologyArgs) -> Result<()> {
    let reports = load_reports_dir(&args.reports)?;
    println!("relation\tcount");
    for (label, count) in error_typology(&reports, args.k, args.top) {
        println!("{label}\t{count}");
    }
    Ok(())
}
