//! Command-line surface for the SLIM retrieval engine: corpus synthesis,
//! index building, retrieval, metric evaluation, and the pruning sweep.
//!
//! Every command prints a single machine-parseable JSON summary line on
//! stdout when it succeeds; diagnostics go to stderr. Exit codes: 0 success,
//! 2 bad arguments or configuration, 3 I/O failure, 4 data-contract
//! violation (malformed or corrupt inputs), 5 internal inconsistency.
//! Set `SLIM_LOG` (error/warn/info/debug) to control logging.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Zipf;
use rayon::prelude::*;

use slim_core::error::{Error, Result};
use slim_core::eval::{self, Qrels, RunFile, SweepOptions};
use slim_core::index::persist::{read_index, write_index};
use slim_core::index::{build, BuildOptions};
use slim_core::ingest::synth::{synth_corpus, SynthSpec};
use slim_core::ingest::{self, CorpusManifest, DocumentRecord, QueryRecord};
use slim_core::{PruneConfig, ScoredHit, SearchConfig, Searcher};

/// Map a library error onto the documented process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Io { .. } => 3,
        Error::Corpus { .. }
        | Error::Version { .. }
        | Error::MissingManifest { .. }
        | Error::Manifest { .. }
        | Error::Truncated { .. }
        | Error::Checksum { .. }
        | Error::MemoryBudget { .. } => 4,
        Error::Internal(_) => 5,
    }
}

#[derive(Debug, Parser)]
#[command(name = "slim", version, about = "Sparse late-interaction retrieval")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus, queries, and relevance judgments
    Synth(SynthArgs),
    /// Build a max-pooled impact index from a corpus
    Index(IndexArgs),
    /// Retrieve and write a TREC run file
    Search(SearchArgs),
    /// Score a run file against relevance judgments
    Eval(EvalArgs),
    /// Sweep pruning thresholds and candidate depths, timing each point
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory for corpus.jsonl, queries.jsonl, qrels.trec, manifest.json
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub docs: usize,
    #[arg(long, default_value_t = 30000)]
    pub vocab_size: u32,
    #[arg(long, default_value_t = 50)]
    pub queries: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// "toy": hash-encoded random text, each query judged against its source
    /// document. "topical": topic-structured corpus with graded judgments,
    /// suitable for sweep trend studies.
    #[arg(long, default_value = "toy")]
    pub mode: String,
    /// Topic count (topical mode only)
    #[arg(long, default_value_t = 20)]
    pub topics: usize,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Corpus JSONL file
    #[arg(long)]
    pub corpus: PathBuf,
    /// Corpus manifest; defaults to manifest.json next to the corpus
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Directory to write the index into
    #[arg(long)]
    pub out: PathBuf,
    /// Remove postings whose impact is below this value
    #[arg(long, default_value_t = 0.5)]
    pub weight_threshold: f64,
    /// Remove posting lists whose IDF is below this value (0 disables; use 0
    /// when the index will feed `sweep`, which re-prunes per threshold)
    #[arg(long, default_value_t = 3.0)]
    pub idf_threshold: f64,
    /// Abort the build if the estimated index size exceeds this many bytes
    #[arg(long)]
    pub memory_budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Index directory (as written by `index`)
    #[arg(long)]
    pub index: PathBuf,
    /// Queries JSONL file
    #[arg(long)]
    pub queries: PathBuf,
    /// Run file to write (TREC format)
    #[arg(long)]
    pub output: PathBuf,
    /// Interpolation between the lower bound (1.0) and upper bound (0.0)
    #[arg(long, default_value_t = 0.01)]
    pub beta: f64,
    /// First-stage candidate count
    #[arg(long, default_value_t = 4000)]
    pub first_stage_k: usize,
    /// Final result count per query
    #[arg(long, default_value_t = 1000)]
    pub final_k: usize,
    /// Return first-stage approximate scores without exact rescoring
    #[arg(long)]
    pub no_refine: bool,
    /// Worker threads across queries (each query still runs sequentially)
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Tag written in the run file's last column
    #[arg(long, default_value = "slim")]
    pub tag: String,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Run file (TREC format)
    #[arg(long)]
    pub run: PathBuf,
    /// Relevance judgments (TREC qrels format)
    #[arg(long)]
    pub qrels: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub mrr_k: usize,
    #[arg(long, default_value_t = 10)]
    pub ndcg_k: usize,
    #[arg(long, default_value_t = 1000)]
    pub recall_k: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Index directory; build it with --idf-threshold 0 so every sweep
    /// threshold can be applied from scratch
    #[arg(long)]
    pub index: PathBuf,
    /// Queries JSONL file
    #[arg(long)]
    pub queries: PathBuf,
    /// Relevance judgments (TREC qrels format)
    #[arg(long)]
    pub qrels: PathBuf,
    /// CSV file to write, one row per grid point
    #[arg(long)]
    pub output: PathBuf,
    /// IDF thresholds to sweep
    #[arg(long, value_delimiter = ',', num_args = 1..,
          default_values_t = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0])]
    pub idf_grid: Vec<f64>,
    /// First-stage candidate counts to sweep
    #[arg(long, value_delimiter = ',', num_args = 1..,
          default_values_t = [1000, 1500, 2000, 2500, 3000, 3500, 4000])]
    pub k_grid: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    pub beta: f64,
    #[arg(long, default_value_t = 1000)]
    pub final_k: usize,
    /// Timed passes per point (the fastest pass is reported)
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => cmd_synth(&args),
        Command::Index(args) => cmd_index(&args),
        Command::Search(args) => cmd_search(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Sweep(args) => cmd_sweep(&args),
    }
}

// ---------------------------------------------------------------- synth --

/// Distinct words available to the toy text generator; frequencies follow a
/// Zipf law so hash-encoded corpora get a realistic skew.
const TOY_WORDLIST: usize = 1500;

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let (manifest, docs, queries, qrels) = match args.mode.as_str() {
        "toy" => toy_corpus(args)?,
        "topical" => {
            let corpus = synth_corpus(&SynthSpec {
                num_docs: args.docs,
                vocab_size: args.vocab_size,
                num_queries: args.queries,
                num_topics: args.topics,
                seed: args.seed,
            })?;
            (corpus.manifest, corpus.docs, corpus.queries, corpus.qrels)
        }
        other => {
            return Err(Error::Config(format!(
                "unknown synth mode {other:?} (expected \"toy\" or \"topical\")"
            )))
        }
    };

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    ingest::write_corpus(&args.out.join("corpus.jsonl"), &docs)?;
    ingest::write_queries(&args.out.join("queries.jsonl"), &queries)?;
    ingest::write_corpus_manifest(&args.out.join("manifest.json"), &manifest)?;
    qrels.write_trec(&args.out.join("qrels.trec"))?;

    log::info!("synthesized {} docs and {} queries into {}", docs.len(), queries.len(),
        args.out.display());
    println!(
        "{}",
        serde_json::json!({
            "command": "synth",
            "mode": args.mode,
            "docs": docs.len(),
            "queries": queries.len(),
            "vocab_size": manifest.vocab_size,
            "judged_queries": qrels.num_queries(),
            "out": args.out,
        })
    );
    Ok(())
}

/// Random Zipf-distributed text hash-encoded into token matrices. Each query
/// samples a few words from one source document, which is judged grade 2.
fn toy_corpus(
    args: &SynthArgs,
) -> Result<(CorpusManifest, Vec<DocumentRecord>, Vec<QueryRecord>, Qrels)> {
    if args.docs == 0 {
        return Err(Error::Config("toy corpus needs at least one document".into()));
    }
    if args.vocab_size == 0 {
        return Err(Error::Config("vocab_size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let zipf = Zipf::new(TOY_WORDLIST as f64, 1.0)
        .map_err(|e| Error::Internal(format!("toy word distribution: {e}")))?;

    let mut doc_words: Vec<Vec<usize>> = Vec::with_capacity(args.docs);
    let mut docs = Vec::with_capacity(args.docs);
    for d in 0..args.docs {
        let len = rng.random_range(8..=48);
        let words: Vec<usize> =
            (0..len).map(|_| zipf.sample(&mut rng) as usize - 1).collect();
        let text: Vec<String> = words.iter().map(|&w| format!("tok{w}")).collect();
        docs.push(DocumentRecord {
            doc_id: format!("d{d:06}"),
            matrix: ingest::toy_encode(&text.join(" "), args.vocab_size),
        });
        doc_words.push(words);
    }

    let mut queries = Vec::with_capacity(args.queries);
    let mut qrels = Qrels::new();
    for q in 0..args.queries {
        let source = rng.random_range(0..args.docs);
        let words = &doc_words[source];
        let len = rng.random_range(3..=6);
        let text: Vec<String> = (0..len)
            .map(|_| format!("tok{}", words[rng.random_range(0..words.len())]))
            .collect();
        let query_id = format!("q{q:04}");
        queries.push(QueryRecord {
            query_id: query_id.clone(),
            matrix: ingest::toy_encode(&text.join(" "), args.vocab_size),
        });
        qrels.insert(&query_id, &docs[source].doc_id, 2);
    }

    let manifest = CorpusManifest { vocab_size: args.vocab_size, num_docs: args.docs as u64 };
    Ok((manifest, docs, queries, qrels))
}

// ---------------------------------------------------------------- index --

fn cmd_index(args: &IndexArgs) -> Result<()> {
    let manifest_path = match &args.manifest {
        Some(path) => path.clone(),
        None => args.corpus.parent().unwrap_or(Path::new(".")).join("manifest.json"),
    };
    let manifest = ingest::read_corpus_manifest(&manifest_path)?;
    let docs = ingest::load_corpus(&args.corpus, &manifest)?;
    log::info!("loaded {} documents from {}", docs.len(), args.corpus.display());

    let options = BuildOptions { memory_budget: args.memory_budget };
    let (built, store) = build(docs, manifest.vocab_size, &options)?;
    let postings_before = built.num_postings();

    let cfg = PruneConfig {
        weight_threshold: args.weight_threshold,
        idf_threshold: args.idf_threshold,
    };
    cfg.validate()?;
    let index = if cfg == PruneConfig::none() { built } else { built.prune(&cfg) };
    log::info!("pruning kept {} of {} postings", index.num_postings(), postings_before);

    write_index(&args.out, &index, &store)?;
    println!(
        "{}",
        serde_json::json!({
            "command": "index",
            "num_docs": index.num_docs(),
            "vocab_size": index.vocab_size(),
            "terms": index.num_terms(),
            "postings": index.num_postings(),
            "postings_before_pruning": postings_before,
            "weight_threshold": cfg.weight_threshold,
            "idf_threshold": cfg.idf_threshold,
            "out": args.out,
        })
    );
    Ok(())
}

// --------------------------------------------------------------- search --

fn cmd_search(args: &SearchArgs) -> Result<()> {
    if args.threads == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    let (index, store) = read_index(&args.index)?;
    let queries = ingest::load_queries(&args.queries, index.vocab_size())?;
    log::info!("searching {} queries over {} docs", queries.len(), index.num_docs());

    let config = SearchConfig {
        beta: args.beta,
        first_stage_k: args.first_stage_k,
        final_k: args.final_k,
        refine: !args.no_refine,
        ..Default::default()
    };
    let searcher = Searcher::new(index, store, config)?;

    let execute = |q: &QueryRecord| -> Result<(String, Vec<ScoredHit>, f64)> {
        let started = Instant::now();
        let hits = searcher.search(&q.matrix)?;
        Ok((q.query_id.clone(), hits, started.elapsed().as_secs_f64()))
    };
    let outcomes: Vec<(String, Vec<ScoredHit>, f64)> = if args.threads == 1 {
        queries.iter().map(execute).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| queries.par_iter().map(execute).collect::<Result<_>>())?
    };

    let total_s: f64 = outcomes.iter().map(|(_, _, s)| s).sum();
    let total_hits: usize = outcomes.iter().map(|(_, hits, _)| hits.len()).sum();
    let results: Vec<(String, Vec<ScoredHit>)> =
        outcomes.into_iter().map(|(qid, hits, _)| (qid, hits)).collect();
    let run = RunFile::from_results(&results)?;
    run.write_trec(&args.output, &args.tag)?;

    println!(
        "{}",
        serde_json::json!({
            "command": "search",
            "queries": results.len(),
            "hits": total_hits,
            "mean_latency_ms": if results.is_empty() {
                0.0
            } else {
                total_s * 1000.0 / results.len() as f64
            },
            "threads": args.threads,
            "output": args.output,
        })
    );
    Ok(())
}

// ----------------------------------------------------------------- eval --

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let run = RunFile::read_trec(&args.run)?;
    let qrels = Qrels::read_trec(&args.qrels)?;

    let mrr = eval::mrr_at_k(&run, &qrels, args.mrr_k);
    let ndcg = eval::ndcg_at_k(&run, &qrels, args.ndcg_k);
    let recall = eval::recall_at_k(&run, &qrels, args.recall_k);

    if mrr.skipped_missing > 0 {
        log::warn!("{} run queries have no judgments and were excluded", mrr.skipped_missing);
    }
    if ndcg.skipped_no_relevant > 0 {
        log::warn!(
            "{} run queries have judgments but no relevant document; excluded from nDCG/Recall",
            ndcg.skipped_no_relevant
        );
    }

    let metric_json = |k: usize, outcome: &eval::MetricOutcome| {
        serde_json::json!({
            "k": k,
            "value": outcome.value,
            "evaluated": outcome.evaluated,
            "skipped_missing": outcome.skipped_missing,
            "skipped_no_relevant": outcome.skipped_no_relevant,
        })
    };
    println!(
        "{}",
        serde_json::json!({
            "command": "eval",
            "run_queries": run.num_queries(),
            "mrr": metric_json(args.mrr_k, &mrr),
            "ndcg": metric_json(args.ndcg_k, &ndcg),
            "recall": metric_json(args.recall_k, &recall),
        })
    );
    Ok(())
}

// ---------------------------------------------------------------- sweep --

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let (index, store) = read_index(&args.index)?;
    let queries = ingest::load_queries(&args.queries, index.vocab_size())?;
    let qrels = Qrels::read_trec(&args.qrels)?;

    let recorded = index.prune_config().idf_threshold;
    let grid_min = args.idf_grid.iter().copied().fold(f64::INFINITY, f64::min);
    if recorded > grid_min {
        log::warn!(
            "index was built with IDF threshold {recorded}; sweep thresholds below that \
             cannot restore already-removed lists"
        );
    }

    let options = SweepOptions {
        idf_grid: args.idf_grid.clone(),
        first_stage_k_grid: args.k_grid.clone(),
        beta: args.beta,
        final_k: args.final_k,
        timing_repeats: args.repeats,
    };
    let points = eval::sweep(&index, &store, &queries, &qrels, &options)?;
    eval::write_sweep_csv(&args.output, &points)?;

    println!(
        "{}",
        serde_json::json!({
            "command": "sweep",
            "points": points.len(),
            "queries": queries.len(),
            "output": args.output,
        })
    );
    Ok(())
}
