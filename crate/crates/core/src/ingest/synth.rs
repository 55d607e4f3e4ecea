//! Deterministic synthetic corpora.
//!
//! Two generators:
//!
//! * [`random_corpus`] — small unstructured corpora for fuzzing the scoring
//!   and persistence invariants (everything is sampled, including degenerate
//!   empty matrices and empty token rows).
//! * [`synth_corpus`] — a topical corpus with graded qrels whose term
//!   statistics are shaped so that index pruning has visible, testable
//!   effects. Background document frequencies are planted on a banded IDF
//!   ladder and every query carries one background row per band, so each
//!   step of an IDF-threshold sweep strips a large, predictable share of
//!   traversal cost from every query, while relevance signal sits in rare
//!   topic-specific words that survive pruning. See the band constants below
//!   for the exact layout.
//!
//! Both are pure functions of their seed: same seed, same corpus, any
//! platform.

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::Qrels;
use crate::ingest::{CorpusManifest, DocumentRecord, QueryRecord};
use crate::model::{SparseVector, TermId, TokenMatrix};

/// Parameters for [`synth_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthSpec {
    pub num_docs: usize,
    pub vocab_size: u32,
    pub num_queries: usize,
    pub num_topics: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            num_docs: 1000,
            vocab_size: 30000,
            num_queries: 50,
            num_topics: 20,
            seed: 7,
        }
    }
}

/// A generated corpus with queries and graded relevance judgments.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub manifest: CorpusManifest,
    pub docs: Vec<DocumentRecord>,
    pub queries: Vec<QueryRecord>,
    pub qrels: Qrels,
}

// Background hubs: filler words whose document frequencies are planted so
// their IDFs land strictly inside each 0.5-wide band of the sweep range, at
// 0.5·band + {0.1, 0.2, 0.3, 0.4}. Every query carries exactly one hub row
// per band (the hub within a band is drawn with probability inversely
// proportional to document frequency), so each sweep step strips one whole
// row's postings from every single query — a large, near-deterministic drop
// in traversal cost, which is what makes the latency curve strictly
// decreasing instead of statistically decreasing. Document-side weights sit
// just above the default weight-pruning threshold (so the planted document
// frequencies, and hence the IDF targets, survive weight pruning exactly)
// but are too small to move rankings.
const BACKGROUND_BANDS: u32 = 6;
const HUBS_PER_BAND: u32 = 4;
const BACKGROUND_WORDS: u32 = BACKGROUND_BANDS * HUBS_PER_BAND;

fn hub_idf_target(hub: u32) -> f64 {
    let band = hub / HUBS_PER_BAND;
    let slot = hub % HUBS_PER_BAND;
    0.5 * f64::from(band) + 0.1 * f64::from(slot + 1)
}

// Theme words: shared by ~1/8 of the topics each, landing in docs often
// enough that their IDF sits just below 3. They carry real ranking signal and
// are the last thing an IDF sweep up to 3 removes — the gap that refinement
// is supposed to recover.
const THEME_POOL: u32 = 96;
const THEME_WORDS_PER_TOPIC: usize = 12;
const THEME_TOKENS_PER_DOC: usize = 8;

// Exclusive words: unique to one topic, IDF well above any sweep threshold.
// These keep topical documents retrievable no matter how hard the index is
// pruned.
const EXCLUSIVE_WORDS_PER_TOPIC: u32 = 10;
const EXCLUSIVE_TOKENS_PER_DOC: usize = 6;

// Distractor pairs: two rare words that co-occur in their host documents but
// in *separate* tokens, while a query carries both in *one* token row. The
// max-pooled document summary credits the row with both terms, yet exact
// late interaction scores the row against one document token at a time and
// keeps only the larger term — so first-stage scores of distractor hosts are
// inflated roughly 2× over their exact scores. Pair p belongs to topic p and
// its hosts are drawn from *other* topics only, so the inflation never lands
// on a query's own relevant documents. Weights are tuned so hosts sit
// strictly above the exclusive-word ceiling (all a heavily pruned index
// retains) but below the full topical signal: once pruning strips the theme
// band they flood the approximate top ranks, and exact refinement demotes
// them again.
const DISTRACTOR_TOPIC_FRACTION: f64 = 0.75;
const DISTRACTOR_DOC_FRACTION: f64 = 0.0056;

/// Term-id ranges for each word class, packed from id 0 upward.
struct VocabLayout {
    background: u32,
    distractor: u32,
    theme: u32,
    exclusive: u32,
    num_pairs: u32,
}

impl VocabLayout {
    fn for_spec(spec: &SynthSpec) -> Result<Self> {
        let num_pairs = (spec.num_topics as f64 * DISTRACTOR_TOPIC_FRACTION).ceil() as u32;
        let background = 0;
        let distractor = background + BACKGROUND_WORDS;
        let theme = distractor + 2 * num_pairs;
        let exclusive = theme + THEME_POOL;
        let end = exclusive + spec.num_topics as u32 * EXCLUSIVE_WORDS_PER_TOPIC;
        if end > spec.vocab_size {
            return Err(Error::Config(format!(
                "vocab_size {} too small for {} topics (need at least {end})",
                spec.vocab_size, spec.num_topics
            )));
        }
        Ok(Self { background, distractor, theme, exclusive, num_pairs })
    }

    fn pair(&self, p: u32) -> (u32, u32) {
        (self.distractor + 2 * p, self.distractor + 2 * p + 1)
    }

    fn exclusive_word(&self, topic: usize, i: u32) -> u32 {
        self.exclusive + topic as u32 * EXCLUSIVE_WORDS_PER_TOPIC + i
    }
}

/// Merge (term, weight) pairs into one token, keeping the max on collisions.
fn token(entries: impl IntoIterator<Item = (u32, f64)>) -> SparseVector {
    let mut map = std::collections::BTreeMap::new();
    for (term, weight) in entries {
        let slot = map.entry(TermId(term)).or_insert(weight);
        if weight > *slot {
            *slot = weight;
        }
    }
    SparseVector::from_sorted(map.into_iter().collect())
}

fn weight_in(rng: &mut ChaCha8Rng, lo: f32, hi: f32) -> f64 {
    // weights stay f32-representable so the interchange format is lossless
    f64::from(rng.random_range(lo..hi))
}

/// Generate a topical corpus with graded qrels.
///
/// Documents belong to `num_topics` topics (round-robin). A query targets one
/// topic and mixes exclusive, theme, distractor, and background words. A
/// same-topic document is graded 2 if it contains both of the query's
/// exclusive words, 1 if it contains exactly one, else 0.
pub fn synth_corpus(spec: &SynthSpec) -> Result<SynthCorpus> {
    if spec.num_topics == 0 || spec.num_docs == 0 {
        return Err(Error::Config("need at least one topic and one document".into()));
    }
    if spec.num_docs < spec.num_topics {
        return Err(Error::Config(format!(
            "num_docs {} < num_topics {}",
            spec.num_docs, spec.num_topics
        )));
    }
    let layout = VocabLayout::for_spec(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // hub document frequencies from the banded IDF targets: df = N·e^(−idf)
    let hub_dfs: Vec<usize> = (0..BACKGROUND_WORDS)
        .map(|h| {
            ((spec.num_docs as f64 * (-hub_idf_target(h)).exp()).round() as usize)
                .clamp(1, spec.num_docs)
        })
        .collect();
    // per-band choice of hub, weighted ∝ 1/df so each hub contributes the
    // same expected posting mass across the query set
    let hub_band_dists: Vec<WeightedIndex<f64>> = (0..BACKGROUND_BANDS as usize)
        .map(|band| {
            let dfs = &hub_dfs[band * HUBS_PER_BAND as usize..(band + 1) * HUBS_PER_BAND as usize];
            WeightedIndex::new(dfs.iter().map(|&df| 1.0 / df as f64))
                .expect("hub frequencies are positive")
        })
        .collect();

    // per-topic theme vocabulary, sampled from the shared pool
    let themes: Vec<Vec<u32>> = (0..spec.num_topics)
        .map(|_| {
            let mut words =
                rand::seq::index::sample(&mut rng, THEME_POOL as usize, THEME_WORDS_PER_TOPIC)
                    .into_iter()
                    .map(|i| layout.theme + i as u32)
                    .collect::<Vec<_>>();
            words.sort_unstable();
            words
        })
        .collect();

    let mut doc_rows: Vec<Vec<SparseVector>> = Vec::with_capacity(spec.num_docs);
    for d in 0..spec.num_docs {
        let topic = d % spec.num_topics;
        let mut rows = Vec::with_capacity(THEME_TOKENS_PER_DOC + EXCLUSIVE_TOKENS_PER_DOC + 8);
        for _ in 0..THEME_TOKENS_PER_DOC {
            let word = themes[topic][rng.random_range(0..THEME_WORDS_PER_TOPIC)];
            let mut entries = vec![(word, weight_in(&mut rng, 0.8, 1.6))];
            if rng.random_bool(0.3) {
                let companion = themes[topic][rng.random_range(0..THEME_WORDS_PER_TOPIC)];
                entries.push((companion, weight_in(&mut rng, 0.3, 1.0)));
            }
            rows.push(token(entries));
        }
        for _ in 0..EXCLUSIVE_TOKENS_PER_DOC {
            let word = layout.exclusive_word(topic, rng.random_range(0..EXCLUSIVE_WORDS_PER_TOPIC));
            let mut entries = vec![(word, weight_in(&mut rng, 2.0, 3.0))];
            if rng.random_bool(0.3) {
                let companion = themes[topic][rng.random_range(0..THEME_WORDS_PER_TOPIC)];
                entries.push((companion, weight_in(&mut rng, 0.3, 1.0)));
            }
            rows.push(token(entries));
        }
        doc_rows.push(rows);
    }

    // plant each hub into exactly df randomly chosen docs
    for (h, &df) in hub_dfs.iter().enumerate() {
        let word = layout.background + h as u32;
        for d in rand::seq::index::sample(&mut rng, spec.num_docs, df) {
            doc_rows[d].push(token([(word, weight_in(&mut rng, 0.55, 0.75))]));
        }
    }

    // Plant each distractor pair into random host docs as two single-term
    // tokens. Keeping the terms in separate tokens is the point: the pooled
    // document summary holds both, but exact scoring of any one query row
    // can only collect one of them. Hosts are drawn from topics other than
    // the pair's own, so the inflated first-stage scores always belong to
    // documents that are irrelevant to the queries carrying the pair.
    let docs_per_pair = ((spec.num_docs as f64 * DISTRACTOR_DOC_FRACTION).round() as usize).max(2);
    for p in 0..layout.num_pairs {
        let (w1, w2) = layout.pair(p);
        let own_topic = p as usize % spec.num_topics;
        let own_topic_docs = (spec.num_docs - 1 - own_topic) / spec.num_topics + 1;
        let take = docs_per_pair.min(spec.num_docs - own_topic_docs);
        let mut hosts = std::collections::BTreeSet::new();
        while hosts.len() < take {
            let d = rng.random_range(0..spec.num_docs);
            if d % spec.num_topics != own_topic {
                hosts.insert(d);
            }
        }
        for d in hosts {
            doc_rows[d].push(token([(w1, weight_in(&mut rng, 2.9, 3.0))]));
            doc_rows[d].push(token([(w2, weight_in(&mut rng, 2.9, 3.0))]));
        }
    }

    let docs: Vec<DocumentRecord> = doc_rows
        .into_iter()
        .enumerate()
        .map(|(d, rows)| DocumentRecord {
            doc_id: format!("d{d:06}"),
            matrix: TokenMatrix::new(rows),
        })
        .collect();

    let mut queries = Vec::with_capacity(spec.num_queries);
    let mut qrels = Qrels::new();
    for q in 0..spec.num_queries {
        let topic = q % spec.num_topics;
        let query_id = format!("q{q:04}");
        let mut rows = Vec::new();

        let exclusive_picks =
            rand::seq::index::sample(&mut rng, EXCLUSIVE_WORDS_PER_TOPIC as usize, 2)
                .into_iter()
                .map(|i| layout.exclusive_word(topic, i as u32))
                .collect::<Vec<_>>();
        for &word in &exclusive_picks {
            rows.push(token([(word, weight_in(&mut rng, 2.5, 3.0))]));
        }

        for i in rand::seq::index::sample(&mut rng, THEME_WORDS_PER_TOPIC, 3) {
            rows.push(token([(themes[topic][i], weight_in(&mut rng, 2.5, 3.0))]));
        }

        // one query row holding both words of the topic's distractor pair —
        // the row whose pooled first-stage score overestimates the exact one
        if (topic as u32) < layout.num_pairs && rng.random_bool(0.8) {
            let (w1, w2) = layout.pair(topic as u32);
            rows.push(token([
                (w1, weight_in(&mut rng, 3.3, 3.5)),
                (w2, weight_in(&mut rng, 3.3, 3.5)),
            ]));
        }

        // one hub row per IDF band, so every sweep step strips exactly one
        // row's postings from this query
        for (band, dist) in hub_band_dists.iter().enumerate() {
            let word = layout.background + band as u32 * HUBS_PER_BAND + rng.sample(dist) as u32;
            rows.push(token([(word, weight_in(&mut rng, 0.2, 0.6))]));
        }

        // grade same-topic docs by how many of the query's exclusive words
        // they contain: both → 2, one → 1
        let mut d = topic;
        while d < spec.num_docs {
            let doc = &docs[d];
            let hits = exclusive_picks
                .iter()
                .filter(|&&w| {
                    doc.matrix.rows().iter().any(|row| row.weight(TermId(w)) > 0.0)
                })
                .count();
            if hits > 0 {
                qrels.insert(&query_id, &doc.doc_id, hits.min(2) as u32);
            }
            d += spec.num_topics;
        }

        queries.push(QueryRecord { query_id, matrix: TokenMatrix::new(rows) });
    }

    Ok(SynthCorpus {
        manifest: CorpusManifest {
            vocab_size: spec.vocab_size,
            num_docs: spec.num_docs as u64,
        },
        docs,
        queries,
        qrels,
    })
}

/// Small unstructured corpus for invariant fuzzing: document count, vocabulary
/// size, token counts, sparsity, and weights are all sampled from the seed.
/// Degenerate shapes (empty matrices, empty rows, disjoint vocabularies) occur
/// regularly on purpose.
pub fn random_corpus(seed: u64) -> (CorpusManifest, Vec<DocumentRecord>, Vec<QueryRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let vocab_size = rng.random_range(40..400u32);
    let num_docs = rng.random_range(10..=250usize);

    let random_matrix = |rng: &mut ChaCha8Rng, max_tokens: usize, empty_prob: f64| {
        if rng.random_bool(empty_prob) {
            return TokenMatrix::empty();
        }
        let tokens = rng.random_range(1..=max_tokens);
        let rows = (0..tokens)
            .map(|_| {
                if rng.random_bool(0.03) {
                    return SparseVector::empty();
                }
                let nnz = rng.random_range(1..=5usize);
                token((0..nnz).map(|_| {
                    let term = rng.random_range(0..vocab_size);
                    (term, weight_in(rng, 0.05, 4.0))
                }))
            })
            .collect();
        TokenMatrix::new(rows)
    };

    let docs = (0..num_docs)
        .map(|d| DocumentRecord {
            doc_id: format!("d{d:04}"),
            matrix: random_matrix(&mut rng, 48, 0.04),
        })
        .collect();
    let queries = (0..3)
        .map(|q| QueryRecord {
            query_id: format!("q{q}"),
            matrix: random_matrix(&mut rng, 12, 0.05),
        })
        .collect();

    let manifest = CorpusManifest { vocab_size, num_docs: num_docs as u64 };
    (manifest, docs, queries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_is_deterministic() {
        let spec = SynthSpec { num_docs: 200, num_queries: 10, seed: 11, ..Default::default() };
        let a = synth_corpus(&spec).unwrap();
        let b = synth_corpus(&spec).unwrap();
        assert_eq!(a.docs, b.docs);
        assert_eq!(a.queries, b.queries);
        assert_eq!(a.qrels, b.qrels);
        let c = synth_corpus(&SynthSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a.docs, c.docs);
    }

    #[test]
    fn synth_respects_spec_shape() {
        let spec = SynthSpec {
            num_docs: 300,
            num_queries: 20,
            num_topics: 10,
            ..Default::default()
        };
        let corpus = synth_corpus(&spec).unwrap();
        assert_eq!(corpus.docs.len(), 300);
        assert_eq!(corpus.queries.len(), 20);
        assert_eq!(corpus.manifest.num_docs, 300);
        for doc in &corpus.docs {
            assert!(doc.matrix.max_term().unwrap().as_u32() < spec.vocab_size);
        }
        // every query judges at least one relevant document
        for query in &corpus.queries {
            assert!(
                corpus.qrels.relevant_count(&query.query_id) > 0,
                "query {} has no relevant docs",
                query.query_id
            );
        }
    }

    #[test]
    fn synth_rejects_impossible_shapes() {
        let spec = SynthSpec { vocab_size: 100, ..Default::default() };
        assert!(matches!(synth_corpus(&spec), Err(Error::Config(_))));
        let spec = SynthSpec { num_docs: 5, num_topics: 20, ..Default::default() };
        assert!(matches!(synth_corpus(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn random_corpus_is_deterministic_and_in_bounds() {
        let (manifest, docs, queries) = random_corpus(3);
        let (m2, d2, q2) = random_corpus(3);
        assert_eq!(manifest, m2);
        assert_eq!(docs, d2);
        assert_eq!(queries, q2);
        assert_eq!(docs.len() as u64, manifest.num_docs);
        for doc in &docs {
            assert!(doc.matrix.len() <= 64);
            if let Some(t) = doc.matrix.max_term() {
                assert!(t.as_u32() < manifest.vocab_size);
            }
        }
    }
}
