//! Ranking metrics over TREC-format artifacts, and the pruning sweep that
//! trades effectiveness against latency.
//!
//! Metrics average over the queries present in the run. A run query missing
//! from the qrels is excluded and counted; for nDCG and Recall, a query whose
//! judgments contain no positive grade is likewise excluded and counted
//! (there is nothing to normalize by), while MRR scores it 0. A metric over
//! zero qualifying queries is absent (`None`), never reported as 0.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::index::{DocStore, InvertedIndex, PruneConfig};
use crate::ingest::QueryRecord;
use crate::search::{fuse_query, refine, stage1, ScoredHit, SearchConfig};

/// Graded relevance judgments: (query, doc) → grade. Grade 0 entries are
/// kept; they mark a judged-irrelevant pair, which is different from an
/// unjudged one.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query_id: &str, doc_id: &str, grade: u32) {
        self.judgments
            .entry(query_id.to_owned())
            .or_default()
            .insert(doc_id.to_owned(), grade);
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.judgments.get(query_id)?.get(doc_id).copied()
    }

    pub fn query(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query_id)
    }

    pub fn contains_query(&self, query_id: &str) -> bool {
        self.judgments.contains_key(query_id)
    }

    /// Number of docs judged relevant (grade > 0) for a query.
    pub fn relevant_count(&self, query_id: &str) -> usize {
        self.judgments
            .get(query_id)
            .map_or(0, |docs| docs.values().filter(|&&g| g > 0).count())
    }

    pub fn num_queries(&self) -> usize {
        self.judgments.len()
    }

    /// Parse TREC qrels lines: `qid 0 docid grade`.
    pub fn read_trec(path: &Path) -> Result<Qrels> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut qrels = Qrels::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let line_no = i as u64 + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::corpus(
                    path,
                    line_no,
                    format!("expected 4 fields `qid 0 docid grade`, got {}", fields.len()),
                ));
            }
            let grade: u32 = fields[3].parse().map_err(|_| {
                Error::corpus(path, line_no, format!("grade {:?} is not a non-negative integer", fields[3]))
            })?;
            qrels.insert(fields[0], fields[2], grade);
        }
        Ok(qrels)
    }

    pub fn write_trec(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (qid, docs) in &self.judgments {
            for (doc_id, grade) in docs {
                writeln!(out, "{qid} 0 {doc_id} {grade}").map_err(|e| Error::io(path, e))?;
            }
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// One ranked entry of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub doc_id: String,
    pub rank: u32,
    pub score: f64,
}

/// A ranked run: per query, documents in rank order. Query order is
/// preserved as added (or as first seen in a file).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunFile {
    queries: Vec<(String, Vec<RunEntry>)>,
}

impl RunFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, query_id: &str, entries: Vec<RunEntry>) -> Result<()> {
        if self.queries.iter().any(|(q, _)| q == query_id) {
            return Err(Error::Config(format!("duplicate query {query_id:?} in run")));
        }
        self.queries.push((query_id.to_owned(), entries));
        Ok(())
    }

    pub fn from_results(results: &[(String, Vec<ScoredHit>)]) -> Result<RunFile> {
        let mut run = RunFile::new();
        for (qid, hits) in results {
            let entries = hits
                .iter()
                .map(|h| RunEntry { doc_id: h.doc_id.clone(), rank: h.rank, score: h.score.value })
                .collect();
            run.add(qid, entries)?;
        }
        Ok(run)
    }

    pub fn queries(&self) -> impl Iterator<Item = (&str, &[RunEntry])> {
        self.queries.iter().map(|(q, e)| (q.as_str(), e.as_slice()))
    }

    pub fn num_queries(&self) -> usize {
        self.queries.len()
    }

    /// Parse TREC run lines `qid Q0 docid rank score tag`; entries group by
    /// query in first-seen order and sort by rank within each query.
    pub fn read_trec(path: &Path) -> Result<RunFile> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut order: Vec<String> = Vec::new();
        let mut grouped: BTreeMap<String, Vec<RunEntry>> = BTreeMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let line_no = i as u64 + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(Error::corpus(
                    path,
                    line_no,
                    format!("expected 6 fields `qid Q0 docid rank score tag`, got {}", fields.len()),
                ));
            }
            let rank: u32 = fields[3].parse().map_err(|_| {
                Error::corpus(path, line_no, format!("rank {:?} is not a positive integer", fields[3]))
            })?;
            if rank == 0 {
                return Err(Error::corpus(path, line_no, "ranks are 1-based"));
            }
            let score: f64 = fields[4].parse().map_err(|_| {
                Error::corpus(path, line_no, format!("score {:?} is not a number", fields[4]))
            })?;
            if !grouped.contains_key(fields[0]) {
                order.push(fields[0].to_owned());
            }
            grouped.entry(fields[0].to_owned()).or_default().push(RunEntry {
                doc_id: fields[2].to_owned(),
                rank,
                score,
            });
        }
        let mut run = RunFile::new();
        for qid in order {
            let mut entries = grouped.remove(&qid).expect("grouped by construction");
            entries.sort_by_key(|e| e.rank);
            run.add(&qid, entries)?;
        }
        Ok(run)
    }

    pub fn write_trec(&self, path: &Path, tag: &str) -> Result<()> {
        if tag.is_empty() || tag.chars().any(char::is_whitespace) {
            return Err(Error::Config(format!("run tag {tag:?} must be non-empty without whitespace")));
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (qid, entries) in self.queries() {
            for e in entries {
                writeln!(out, "{qid} Q0 {} {} {:.6} {tag}", e.doc_id, e.rank, e.score)
                    .map_err(|e| Error::io(path, e))?;
            }
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// A metric value plus the bookkeeping of which run queries were counted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOutcome {
    /// Mean over qualifying queries; `None` when no query qualified.
    pub value: Option<f64>,
    pub evaluated: usize,
    /// Run queries absent from the qrels.
    pub skipped_missing: usize,
    /// Run queries judged but with no positive grade (nDCG/Recall only).
    pub skipped_no_relevant: usize,
}

fn aggregate(
    run: &RunFile,
    qrels: &Qrels,
    skip_no_relevant: bool,
    mut per_query: impl FnMut(&[RunEntry], &BTreeMap<String, u32>) -> f64,
) -> MetricOutcome {
    let mut sum = 0.0;
    let mut evaluated = 0;
    let mut skipped_missing = 0;
    let mut skipped_no_relevant = 0;
    for (qid, entries) in run.queries() {
        let Some(judged) = qrels.query(qid) else {
            skipped_missing += 1;
            continue;
        };
        if skip_no_relevant && !judged.values().any(|&g| g > 0) {
            skipped_no_relevant += 1;
            continue;
        }
        sum += per_query(entries, judged);
        evaluated += 1;
    }
    MetricOutcome {
        value: (evaluated > 0).then(|| sum / evaluated as f64),
        evaluated,
        skipped_missing,
        skipped_no_relevant,
    }
}

/// Mean reciprocal rank of the first relevant (grade > 0) document within the
/// top `k`; a query with none scores 0.
pub fn mrr_at_k(run: &RunFile, qrels: &Qrels, k: usize) -> MetricOutcome {
    aggregate(run, qrels, false, |entries, judged| {
        entries
            .iter()
            .take(k)
            .position(|e| judged.get(&e.doc_id).is_some_and(|&g| g > 0))
            .map_or(0.0, |pos| 1.0 / (pos + 1) as f64)
    })
}

fn gain(grade: u32) -> f64 {
    2f64.powi(grade as i32) - 1.0
}

/// Graded nDCG with exponential gain (2^grade − 1) and log2 discount; the
/// ideal ranking comes from the query's judgments.
pub fn ndcg_at_k(run: &RunFile, qrels: &Qrels, k: usize) -> MetricOutcome {
    aggregate(run, qrels, true, |entries, judged| {
        let dcg: f64 = entries
            .iter()
            .take(k)
            .enumerate()
            .map(|(pos, e)| {
                let grade = judged.get(&e.doc_id).copied().unwrap_or(0);
                gain(grade) / (pos as f64 + 2.0).log2()
            })
            .sum();
        let mut grades: Vec<u32> = judged.values().copied().collect();
        grades.sort_unstable_by(|a, b| b.cmp(a));
        let idcg: f64 = grades
            .iter()
            .take(k)
            .enumerate()
            .map(|(pos, &g)| gain(g) / (pos as f64 + 2.0).log2())
            .sum();
        dcg / idcg
    })
}

/// Fraction of a query's relevant documents found in the top `k`.
pub fn recall_at_k(run: &RunFile, qrels: &Qrels, k: usize) -> MetricOutcome {
    aggregate(run, qrels, true, |entries, judged| {
        let relevant = judged.values().filter(|&&g| g > 0).count();
        let hit = entries
            .iter()
            .take(k)
            .filter(|e| judged.get(&e.doc_id).is_some_and(|&g| g > 0))
            .count();
        hit as f64 / relevant as f64
    })
}

/// One row of the effectiveness/efficiency trade-off table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub idf_threshold: f64,
    pub first_stage_k: usize,
    pub refine: bool,
    pub mrr10: f64,
    pub recall1000: f64,
    pub mean_latency_ms: f64,
}

/// Grid and measurement settings for [`sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub idf_grid: Vec<f64>,
    pub first_stage_k_grid: Vec<usize>,
    pub beta: f64,
    pub final_k: usize,
    /// Timed passes per grid point; the mean latency of the fastest pass is
    /// reported. One untimed warm-up pass always runs first.
    pub timing_repeats: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            idf_grid: vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            first_stage_k_grid: vec![1000, 1500, 2000, 2500, 3000, 3500, 4000],
            beta: 0.01,
            final_k: 1000,
            timing_repeats: 1,
        }
    }
}

impl SweepOptions {
    fn validate(&self) -> Result<()> {
        if self.idf_grid.is_empty() || self.first_stage_k_grid.is_empty() {
            return Err(Error::Config("sweep grids must be non-empty".into()));
        }
        for &t in &self.idf_grid {
            PruneConfig { weight_threshold: 0.0, idf_threshold: t }.validate()?;
        }
        if self.timing_repeats == 0 {
            return Err(Error::Config("timing_repeats must be positive".into()));
        }
        Ok(())
    }
}

/// Sweep IDF thresholds and first-stage depths over a loaded index, with and
/// without refinement, measuring MRR@10, Recall@1000, and mean wall-clock
/// latency per query (batch size 1, single thread, one warm-up pass; query
/// fusion happens outside the timed section).
///
/// Each threshold re-prunes from `index` — pass an index whose IDF pruning is
/// still at 0 or thresholds below its recorded one cannot restore anything.
/// The weight threshold recorded on `index` is carried through unchanged.
/// Posting counts are asserted to shrink monotonically as thresholds rise.
pub fn sweep(
    index: &InvertedIndex,
    store: &DocStore,
    queries: &[QueryRecord],
    qrels: &Qrels,
    options: &SweepOptions,
) -> Result<Vec<SweepPoint>> {
    options.validate()?;
    if queries.is_empty() {
        return Err(Error::Config("sweep needs at least one query".into()));
    }

    let weight_threshold = index.prune_config().weight_threshold;
    let mut pruned_by_threshold: Vec<(f64, InvertedIndex)> = Vec::new();
    for &t in &options.idf_grid {
        if pruned_by_threshold.iter().any(|&(seen, _)| seen == t) {
            continue;
        }
        let cfg = PruneConfig { weight_threshold, idf_threshold: t };
        pruned_by_threshold.push((t, index.prune(&cfg)));
    }
    // raising the threshold must never grow the index
    let mut by_threshold: Vec<&(f64, InvertedIndex)> = pruned_by_threshold.iter().collect();
    by_threshold.sort_by(|a, b| a.0.total_cmp(&b.0));
    for pair in by_threshold.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi.1.num_postings() > lo.1.num_postings() {
            return Err(Error::Internal(format!(
                "posting count grew from {} to {} when the IDF threshold rose from {} to {}",
                lo.1.num_postings(),
                hi.1.num_postings(),
                lo.0,
                hi.0
            )));
        }
    }

    let mut points = Vec::new();
    for &t in &options.idf_grid {
        let pruned = &pruned_by_threshold
            .iter()
            .find(|&&(seen, _)| seen == t)
            .expect("pruned above")
            .1;
        for &k in &options.first_stage_k_grid {
            for refine_on in [false, true] {
                let config = SearchConfig {
                    beta: options.beta,
                    first_stage_k: k,
                    final_k: options.final_k,
                    refine: refine_on,
                    ..Default::default()
                };
                config.validate()?;
                let point = run_point(pruned, store, queries, qrels, &config, options)?;
                points.push(SweepPoint { idf_threshold: t, ..point });
            }
        }
    }
    Ok(points)
}

fn run_point(
    index: &InvertedIndex,
    store: &DocStore,
    queries: &[QueryRecord],
    qrels: &Qrels,
    config: &SearchConfig,
    options: &SweepOptions,
) -> Result<SweepPoint> {
    let fused: Vec<_> = queries
        .iter()
        .map(|q| fuse_query(&q.matrix, config.beta))
        .collect::<Result<_>>()?;

    let execute = |timing: &mut Option<&mut f64>| -> Result<Vec<(String, Vec<ScoredHit>)>> {
        let mut results = Vec::with_capacity(queries.len());
        for (q, fq) in queries.iter().zip(&fused) {
            let started = Instant::now();
            let mut hits = stage1(index, fq, config.first_stage_k);
            if config.refine {
                hits = refine(store, &q.matrix, &hits, config.final_k)?;
            } else {
                hits.truncate(config.final_k);
            }
            if let Some(total) = timing.as_deref_mut() {
                *total += started.elapsed().as_secs_f64();
            }
            results.push((q.query_id.clone(), hits));
        }
        Ok(results)
    };

    execute(&mut None)?; // warm-up
    let mut best_mean_s = f64::INFINITY;
    let mut results = Vec::new();
    for _ in 0..options.timing_repeats {
        let mut total_s = 0.0;
        results = execute(&mut Some(&mut total_s))?;
        best_mean_s = best_mean_s.min(total_s / queries.len() as f64);
    }

    let run = RunFile::from_results(&results)?;
    let need = |outcome: MetricOutcome, name: &str| {
        outcome.value.ok_or_else(|| {
            Error::Config(format!("{name} is undefined: no run query has usable judgments"))
        })
    };
    Ok(SweepPoint {
        idf_threshold: 0.0, // overwritten by the caller
        first_stage_k: config.first_stage_k,
        refine: config.refine,
        mrr10: need(mrr_at_k(&run, qrels, 10), "MRR@10")?,
        recall1000: need(recall_at_k(&run, qrels, 1000), "Recall@1000")?,
        mean_latency_ms: best_mean_s * 1000.0,
    })
}

/// Emit sweep rows as CSV, one row per point, header matching the
/// [`SweepPoint`] field names.
pub fn write_sweep_csv(path: &Path, points: &[SweepPoint]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "idf_threshold,first_stage_k,refine,mrr10,recall1000,mean_latency_ms")
        .map_err(|e| Error::io(path, e))?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6}",
            p.idf_threshold, p.first_stage_k, p.refine, p.mrr10, p.recall1000, p.mean_latency_ms
        )
        .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_of(qid: &str, doc_ids: &[&str]) -> RunFile {
        let mut run = RunFile::new();
        let entries = doc_ids
            .iter()
            .enumerate()
            .map(|(i, d)| RunEntry {
                doc_id: (*d).to_owned(),
                rank: i as u32 + 1,
                score: 10.0 - i as f64,
            })
            .collect();
        run.add(qid, entries).unwrap();
        run
    }

    #[test]
    fn mrr_rank_positions() {
        let mut qrels = Qrels::new();
        qrels.insert("q1", "rel", 1);

        let first = run_of("q1", &["rel", "x1", "x2"]);
        assert_eq!(mrr_at_k(&first, &qrels, 10).value, Some(1.0));

        let fourth = run_of("q1", &["x1", "x2", "x3", "rel"]);
        assert_eq!(mrr_at_k(&fourth, &qrels, 10).value, Some(0.25));

        let eleventh_ids: Vec<String> =
            (0..10).map(|i| format!("x{i}")).chain(["rel".to_owned()]).collect();
        let refs: Vec<&str> = eleventh_ids.iter().map(String::as_str).collect();
        let eleventh = run_of("q1", &refs);
        assert_eq!(mrr_at_k(&eleventh, &qrels, 10).value, Some(0.0));
    }

    #[test]
    fn ndcg_hand_cases() {
        let mut qrels = Qrels::new();
        qrels.insert("q1", "a", 2);
        qrels.insert("q1", "b", 1);
        // perfect ranking → DCG equals IDCG
        let perfect = run_of("q1", &["a", "b", "junk"]);
        assert!((ndcg_at_k(&perfect, &qrels, 10).value.unwrap() - 1.0).abs() < 1e-12);

        // all retrieved docs grade 0
        let nothing = run_of("q1", &["x", "y"]);
        assert_eq!(ndcg_at_k(&nothing, &qrels, 10).value, Some(0.0));

        // one relevant doc (grade 1) ranked second: 1/log2(3)
        let mut qrels = Qrels::new();
        qrels.insert("q1", "rel", 1);
        qrels.insert("q1", "other", 0);
        let second = run_of("q1", &["other", "rel"]);
        let expected = 1.0 / 3f64.log2();
        assert!((ndcg_at_k(&second, &qrels, 10).value.unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn recall_fractions() {
        let mut qrels = Qrels::new();
        for d in ["r1", "r2", "r3", "r4"] {
            qrels.insert("q1", d, 1);
        }
        assert_eq!(recall_at_k(&run_of("q1", &["r1", "r2", "r3", "r4"]), &qrels, 10).value, Some(1.0));
        assert_eq!(recall_at_k(&run_of("q1", &["r1", "x", "r2"]), &qrels, 10).value, Some(0.5));
        assert_eq!(recall_at_k(&run_of("q1", &["x", "y"]), &qrels, 10).value, Some(0.0));
        // cutoff applies
        assert_eq!(recall_at_k(&run_of("q1", &["x", "r1", "r2"]), &qrels, 1).value, Some(0.0));
    }

    #[test]
    fn skip_and_absence_semantics() {
        let mut qrels = Qrels::new();
        qrels.insert("q1", "rel", 1);
        qrels.insert("q2", "dud", 0);

        let mut run = RunFile::new();
        for qid in ["q1", "q2", "q3"] {
            run.add(qid, vec![RunEntry { doc_id: "rel".into(), rank: 1, score: 1.0 }]).unwrap();
        }

        // q3 unjudged → skipped everywhere; q2 judged-but-irrelevant → MRR
        // counts it as 0, the others skip it
        let mrr = mrr_at_k(&run, &qrels, 10);
        assert_eq!((mrr.evaluated, mrr.skipped_missing, mrr.skipped_no_relevant), (2, 1, 0));
        assert_eq!(mrr.value, Some(0.5));

        let ndcg = ndcg_at_k(&run, &qrels, 10);
        assert_eq!((ndcg.evaluated, ndcg.skipped_missing, ndcg.skipped_no_relevant), (1, 1, 1));

        // a run with no usable queries reports absence, not 0
        let stranger = run_of("q9", &["a"]);
        assert_eq!(mrr_at_k(&stranger, &qrels, 10).value, None);
        assert_eq!(recall_at_k(&stranger, &qrels, 10).evaluated, 0);
    }

    #[test]
    fn qrels_and_run_round_trip() {
        let dir = tempfile::tempdir().unwrap();

        let mut qrels = Qrels::new();
        qrels.insert("q1", "d1", 2);
        qrels.insert("q1", "d2", 0);
        qrels.insert("q2", "d3", 1);
        let qpath = dir.path().join("qrels.trec");
        qrels.write_trec(&qpath).unwrap();
        assert_eq!(Qrels::read_trec(&qpath).unwrap(), qrels);

        let run = run_of("q1", &["d1", "d2"]);
        let rpath = dir.path().join("run.trec");
        run.write_trec(&rpath, "tagged").unwrap();
        let back = RunFile::read_trec(&rpath).unwrap();
        assert_eq!(back, run);

        let text = std::fs::read_to_string(&rpath).unwrap();
        assert_eq!(text.lines().next().unwrap(), "q1 Q0 d1 1 10.000000 tagged");
    }

    #[test]
    fn malformed_trec_lines_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("qrels.trec");
        std::fs::write(&path, "q1 0 d1 1\nq2 0 d2\n").unwrap();
        match Qrels::read_trec(&path) {
            Err(Error::Corpus { line: 2, .. }) => {}
            other => panic!("expected line-2 corpus error, got {other:?}"),
        }

        let run = dir.path().join("run.trec");
        std::fs::write(&run, "q1 Q0 d1 0 3.5 tag\n").unwrap();
        assert!(matches!(RunFile::read_trec(&run), Err(Error::Corpus { line: 1, .. })));
    }

    #[test]
    fn sweep_without_pruning_at_full_depth_has_perfect_recall() {
        use crate::index::{build, BuildOptions};
        use crate::ingest::synth::{synth_corpus, SynthSpec};

        let corpus = synth_corpus(&SynthSpec {
            num_docs: 400,
            num_queries: 6,
            num_topics: 8,
            seed: 11,
            ..Default::default()
        })
        .unwrap();
        let num_docs = corpus.docs.len();
        let (index, store) =
            build(corpus.docs, corpus.manifest.vocab_size, &BuildOptions::default()).unwrap();

        // no pruning, candidate depth = corpus size: every positive-scoring
        // document is retrieved, and every relevant document scores > 0
        // because it shares at least one query term
        let options = SweepOptions {
            idf_grid: vec![0.0],
            first_stage_k_grid: vec![num_docs],
            final_k: num_docs,
            ..Default::default()
        };
        let points = sweep(&index, &store, &corpus.queries, &corpus.qrels, &options).unwrap();
        assert_eq!(points.len(), 2);
        for p in &points {
            assert!((p.recall1000 - 1.0).abs() < 1e-12, "expected perfect recall: {p:?}");
        }
    }

    #[test]
    fn sweep_produces_grid_rows() {
        use crate::index::{build, BuildOptions};
        use crate::ingest::synth::{synth_corpus, SynthSpec};

        let corpus = synth_corpus(&SynthSpec {
            num_docs: 300,
            num_queries: 8,
            num_topics: 10,
            seed: 5,
            ..Default::default()
        })
        .unwrap();
        let (index, store) =
            build(corpus.docs, corpus.manifest.vocab_size, &BuildOptions::default()).unwrap();

        let options = SweepOptions {
            idf_grid: vec![0.0, 3.0],
            first_stage_k_grid: vec![50],
            final_k: 50,
            ..Default::default()
        };
        let points =
            sweep(&index, &store, &corpus.queries, &corpus.qrels, &options).unwrap();
        assert_eq!(points.len(), 4); // 2 thresholds × 1 depth × {unrefined, refined}
        for p in &points {
            assert!((0.0..=1.0).contains(&p.mrr10), "mrr out of range: {p:?}");
            assert!((0.0..=1.0).contains(&p.recall1000), "recall out of range: {p:?}");
            assert!(p.mean_latency_ms > 0.0);
        }
        // a single grid point yields exactly the refined/unrefined pair
        let one = SweepOptions {
            idf_grid: vec![0.5],
            first_stage_k_grid: vec![20],
            final_k: 20,
            ..Default::default()
        };
        let pair = sweep(&index, &store, &corpus.queries, &corpus.qrels, &one).unwrap();
        assert_eq!(pair.len(), 2);
        assert_eq!((pair[0].refine, pair[1].refine), (false, true));

        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("sweep.csv");
        write_sweep_csv(&csv_path, &points).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "idf_threshold,first_stage_k,refine,mrr10,recall1000,mean_latency_ms"
        );
        assert_eq!(lines.count(), points.len());
    }
}
