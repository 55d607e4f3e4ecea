//! Two-stage retrieval plus the reference scorers used to test it.
//!
//! The exact similarity sums, over query tokens, the best dot product against
//! any document token:
//!
//! ```text
//! s(q,d) = Σ_i max_j dot(φ_qi, φ_dj)
//! ```
//!
//! Swapping the max/sum order yields two factorizable bounds against the
//! per-document pooled summary `m_d = max_j φ_dj`, with `e_qi` keeping only
//! the argmax entry of `φ_qi`:
//!
//! ```text
//! s_l(q,d) = dot(Σ_i e_qi,  m_d)   ≤ s(q,d)
//! s_h(q,d) = dot(Σ_i φ_qi,  m_d)   ≥ s(q,d)
//! ```
//!
//! Interpolating the two query-side vectors with weight `beta` gives a single
//! fused sparse query, so first-stage retrieval is one dot product per
//! document over the inverted index ([`stage1`]). The exact formula then
//! rescores the survivors from the document store ([`refine`]).
//!
//! [`oracle_search`] (exhaustive exact scoring) and [`naive_search`] (the
//! same definition computed token-at-a-time with scatter operations) exist
//! for testing only.
//!
//! Ties are always broken by smaller document ordinal, so results are
//! deterministic. Documents scoring exactly 0 are omitted by retrieval and by
//! both oracles: posting-list traversal can never surface a document sharing
//! no terms with the query, and the oracles mirror that so their output is
//! comparable. [`refine`] is the exception — it rescores whatever candidates
//! it is given and keeps them even at score 0.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::index::{DocStore, InvertedIndex};
use crate::model::{Score, ScoreKind, SparseVector, TermId, TokenMatrix};

/// Retrieval parameters. Defaults: `beta` 0.01, `first_stage_k` 4000,
/// `final_k` 1000, refinement on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Interpolation weight between the lower-bound (1.0) and upper-bound
    /// (0.0) query forms.
    pub beta: f64,
    /// Candidates retrieved by the first stage.
    pub first_stage_k: usize,
    /// Results returned after refinement (or truncation, if refinement is
    /// off).
    pub final_k: usize,
    /// Rescore candidates with the exact formula.
    pub refine: bool,
    /// Queries with more tokens than this are rejected; guards the O(N·M)
    /// refinement loop.
    pub max_query_tokens: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            beta: 0.01,
            first_stage_k: 4000,
            final_k: 1000,
            refine: true,
            max_query_tokens: 256,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() || !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta must be in [0, 1], got {}", self.beta)));
        }
        if self.first_stage_k == 0 || self.final_k == 0 {
            return Err(Error::Config("first_stage_k and final_k must be positive".into()));
        }
        if self.refine && self.final_k > self.first_stage_k {
            return Err(Error::Config(format!(
                "final_k {} exceeds first_stage_k {} with refinement enabled",
                self.final_k, self.first_stage_k
            )));
        }
        if self.max_query_tokens == 0 {
            return Err(Error::Config("max_query_tokens must be positive".into()));
        }
        Ok(())
    }
}

/// The single sparse vector a query collapses to for first-stage retrieval.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedQuery {
    pub vector: SparseVector,
}

/// One ranked result. `score.kind` records which formula produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredHit {
    pub doc_id: String,
    pub ordinal: u32,
    pub score: Score,
    pub rank: u32,
}

fn to_hits(mut scored: Vec<(u32, f64)>, k: usize, kind: ScoreKind, ids: &[String]) -> Vec<ScoredHit> {
    scored.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
        .into_iter()
        .enumerate()
        .map(|(i, (ordinal, value))| ScoredHit {
            doc_id: ids[ordinal as usize].clone(),
            ordinal,
            score: Score { value, kind },
            rank: i as u32 + 1,
        })
        .collect()
}

/// Collapse a query to one sparse vector: per token, the argmax entry keeps
/// its full weight (`beta·w + (1−beta)·w`), every other entry contributes
/// `(1−beta)·w`, and contributions are summed across tokens.
pub fn fuse_query(query: &TokenMatrix, beta: f64) -> Result<FusedQuery> {
    if !beta.is_finite() || !(0.0..=1.0).contains(&beta) {
        return Err(Error::Config(format!("beta must be in [0, 1], got {beta}")));
    }
    let mut acc: BTreeMap<TermId, f64> = BTreeMap::new();
    for row in query.rows() {
        let Some(&(argmax, _)) = row.argmax_mask().entries().first() else {
            continue;
        };
        for (term, weight) in row.iter() {
            let contribution = if term == argmax { weight } else { (1.0 - beta) * weight };
            *acc.entry(term).or_insert(0.0) += contribution;
        }
    }
    // beta = 1 zeroes every non-argmax entry; zeros are never stored
    let entries = acc.into_iter().filter(|&(_, w)| w > 0.0).collect();
    Ok(FusedQuery { vector: SparseVector::from_sorted(entries) })
}

/// First-stage retrieval: term-at-a-time accumulation of
/// `dot(fused, pooled summary)` over the posting lists, then top-k by
/// (score desc, ordinal asc). Terms absent from the index — pruned or out of
/// vocabulary — contribute nothing. Documents scoring 0 are never surfaced,
/// so fewer than `k` hits may return.
pub fn stage1(index: &InvertedIndex, fq: &FusedQuery, k: usize) -> Vec<ScoredHit> {
    let mut acc = vec![0.0f64; index.num_docs() as usize];
    let mut touched: Vec<u32> = Vec::new();
    for (term, query_weight) in fq.vector.iter() {
        let Some(list) = index.postings(term) else { continue };
        for p in list {
            let slot = &mut acc[p.ordinal as usize];
            // all contributions are positive, so 0 means "first touch"
            if *slot == 0.0 {
                touched.push(p.ordinal);
            }
            *slot += query_weight * p.impact;
        }
    }
    let scored = touched.into_iter().map(|o| (o, acc[o as usize])).collect();
    to_hits(scored, k, ScoreKind::Fused, index.doc_table())
}

/// Exact late-interaction score of one (query, document) pair.
pub fn exact_score(query: &TokenMatrix, doc: &TokenMatrix) -> f64 {
    query
        .rows()
        .iter()
        .map(|qi| doc.rows().iter().map(|dj| qi.dot(dj)).fold(0.0f64, f64::max))
        .sum()
}

/// Rescore `candidates` with the exact formula against the stored (unpruned)
/// token matrices, re-sort, truncate to `final_k`. Candidates are kept even
/// when they rescore to 0; order among ties follows the ordinal rule.
pub fn refine(
    store: &DocStore,
    query: &TokenMatrix,
    candidates: &[ScoredHit],
    final_k: usize,
) -> Result<Vec<ScoredHit>> {
    let mut scored = Vec::with_capacity(candidates.len());
    for hit in candidates {
        let matrix = store.matrix(hit.ordinal).ok_or_else(|| {
            Error::Internal(format!(
                "candidate ordinal {} (doc {:?}) is missing from the document store",
                hit.ordinal, hit.doc_id
            ))
        })?;
        scored.push((hit.ordinal, exact_score(query, matrix)));
    }
    Ok(to_hits(scored, final_k, ScoreKind::Exact, store.doc_ids()))
}

/// Exhaustive exact scoring of every document; the ground truth the two-stage
/// pipeline is tested against. Zero-score documents are omitted (see module
/// docs), so `k > num_docs` simply returns every positive-scoring document.
pub fn oracle_search(store: &DocStore, query: &TokenMatrix, k: usize) -> Vec<ScoredHit> {
    let mut scored = Vec::new();
    for (ordinal, _, matrix) in store.iter() {
        let s = exact_score(query, matrix);
        if s > 0.0 {
            scored.push((ordinal, s));
        }
    }
    to_hits(scored, k, ScoreKind::Exact, store.doc_ids())
}

/// Second oracle, computed the way a per-token retrieval cascade would: for
/// each query token, scatter-max the token's best match into a dense
/// per-document array, then scatter-sum the arrays across tokens. Must match
/// [`oracle_search`] exactly.
pub fn naive_search(store: &DocStore, query: &TokenMatrix, k: usize) -> Vec<ScoredHit> {
    let n = store.len();
    let mut total = vec![0.0f64; n];
    for qi in query.rows() {
        let mut best = vec![0.0f64; n];
        for (ordinal, _, matrix) in store.iter() {
            for dj in matrix.rows() {
                let s = qi.dot(dj);
                if s > best[ordinal as usize] {
                    best[ordinal as usize] = s;
                }
            }
        }
        for (t, b) in total.iter_mut().zip(&best) {
            *t += *b;
        }
    }
    let scored = (0..n as u32).filter(|&o| total[o as usize] > 0.0).map(|o| (o, total[o as usize])).collect();
    to_hits(scored, k, ScoreKind::Exact, store.doc_ids())
}

/// Lower and upper bounds of the exact score for one stored document:
/// `s_l = dot(Σ_i e_qi, m_d)` and `s_h = dot(Σ_i φ_qi, m_d)`.
///
/// # Panics
/// If `doc_ordinal` is not in the store.
pub fn bounds(store: &DocStore, query: &TokenMatrix, doc_ordinal: u32) -> (Score, Score) {
    let matrix = store
        .matrix(doc_ordinal)
        .unwrap_or_else(|| panic!("ordinal {doc_ordinal} is not in the document store"));
    let pooled = matrix.max_pool().into_vector();
    let masked = TokenMatrix::new(query.rows().iter().map(SparseVector::argmax_mask).collect());
    let lower = masked.sum_rows().dot(&pooled);
    let upper = query.sum_rows().dot(&pooled);
    (Score::lower(lower), Score::upper(upper))
}

/// Owns the loaded artifacts plus a validated config and runs the full
/// two-stage pipeline per query. Immutable and safe to share across threads.
pub struct Searcher {
    index: InvertedIndex,
    store: DocStore,
    config: SearchConfig,
}

impl Searcher {
    pub fn new(index: InvertedIndex, store: DocStore, config: SearchConfig) -> Result<Self> {
        config.validate()?;
        if index.num_docs() as usize != store.len() {
            return Err(Error::Internal(format!(
                "index covers {} docs but store holds {}",
                index.num_docs(),
                store.len()
            )));
        }
        if index.doc_table() != store.doc_ids() {
            return Err(Error::Internal(
                "index doc table and document store ids disagree".into(),
            ));
        }
        Ok(Self { index, store, config })
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    pub fn store(&self) -> &DocStore {
        &self.store
    }

    /// Fused first stage, then exact refinement when configured.
    pub fn search(&self, query: &TokenMatrix) -> Result<Vec<ScoredHit>> {
        if query.len() > self.config.max_query_tokens {
            return Err(Error::Config(format!(
                "query has {} tokens, cap is {}",
                query.len(),
                self.config.max_query_tokens
            )));
        }
        let fused = fuse_query(query, self.config.beta)?;
        let mut candidates = stage1(&self.index, &fused, self.config.first_stage_k);
        if self.config.refine {
            refine(&self.store, query, &candidates, self.config.final_k)
        } else {
            candidates.truncate(self.config.final_k);
            Ok(candidates)
        }
    }
}


#[cfg(test)]
mod proptests {
    use super::*;
    use crate::index::{build, BuildOptions, PruneConfig};
    use crate::ingest::synth::random_corpus;
    use proptest::prelude::*;

    fn tolerance(x: f64) -> f64 {
        1e-6 * x.abs().max(1.0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        // s_l ≤ s ≤ s_h for every (query, doc) pair
        #[test]
        fn bound_sandwich(seed in 0u64..200) {
            let (_, docs, queries) = random_corpus(seed);
            let (_, store) = build(docs, 400, &BuildOptions::default()).unwrap();
            for q in &queries {
                for (ordinal, _, matrix) in store.iter() {
                    let s = exact_score(&q.matrix, matrix);
                    let (lower, upper) = bounds(&store, &q.matrix, ordinal);
                    prop_assert!(lower.value <= s + 1e-6,
                        "lower {} > exact {}", lower.value, s);
                    prop_assert!(s <= upper.value + 1e-6,
                        "exact {} > upper {}", s, upper.value);
                }
            }
        }

        // without pruning, stage1's score is the bound interpolation
        #[test]
        fn fusion_consistency(seed in 0u64..200, beta in 0.0f64..=1.0) {
            let (manifest, docs, queries) = random_corpus(seed);
            let (index, store) =
                build(docs, manifest.vocab_size, &BuildOptions::default()).unwrap();
            for q in &queries {
                let fq = fuse_query(&q.matrix, beta).unwrap();
                for hit in stage1(&index, &fq, store.len()) {
                    let (l, u) = bounds(&store, &q.matrix, hit.ordinal);
                    let expected = beta * l.value + (1.0 - beta) * u.value;
                    prop_assert!((hit.score.value - expected).abs() <= tolerance(expected),
                        "stage1 {} vs interpolated {}", hit.score.value, expected);
                }
            }
        }

        // refine reproduces oracle scores for the same pairs
        #[test]
        fn refinement_exactness(seed in 0u64..200) {
            let (manifest, docs, queries) = random_corpus(seed);
            let (_, store) =
                build(docs, manifest.vocab_size, &BuildOptions::default()).unwrap();
            for q in &queries {
                let oracle = oracle_search(&store, &q.matrix, store.len());
                let refined = refine(&store, &q.matrix, &oracle, oracle.len()).unwrap();
                prop_assert_eq!(refined.len(), oracle.len());
                for (r, o) in refined.iter().zip(&oracle) {
                    prop_assert_eq!(r.ordinal, o.ordinal);
                    prop_assert!((r.score.value - o.score.value).abs() <= tolerance(o.score.value));
                }
            }
        }

        // with pruning off and first_stage_k = num_docs, the two-stage
        // pipeline equals the oracle: same ids, same order
        #[test]
        fn no_prune_recall(seed in 0u64..200) {
            let (manifest, docs, queries) = random_corpus(seed);
            let (index, store) =
                build(docs, manifest.vocab_size, &BuildOptions::default()).unwrap();
            prop_assert_eq!(index.prune_config(), PruneConfig::none());
            let config = SearchConfig {
                first_stage_k: store.len().max(1),
                final_k: store.len().max(1),
                ..Default::default()
            };
            let searcher = Searcher::new(index, store, config).unwrap();
            for q in &queries {
                let two_stage = searcher.search(&q.matrix).unwrap();
                let oracle = oracle_search(searcher.store(), &q.matrix, searcher.store().len());
                prop_assert_eq!(two_stage.len(), oracle.len());
                for (t, o) in two_stage.iter().zip(&oracle) {
                    prop_assert_eq!(&t.doc_id, &o.doc_id);
                    prop_assert_eq!(t.rank, o.rank);
                }
            }
        }

        // pruning can only lower stage-1 scores, never raise them
        #[test]
        fn pruning_safety(seed in 0u64..200, w in 0.0f64..2.0, i in 0.0f64..3.5) {
            let (manifest, docs, queries) = random_corpus(seed);
            let (index, _) =
                build(docs, manifest.vocab_size, &BuildOptions::default()).unwrap();
            let pruned = index.prune(&PruneConfig { weight_threshold: w, idf_threshold: i });
            for q in &queries {
                let fq = fuse_query(&q.matrix, 0.01).unwrap();
                let full: std::collections::HashMap<u32, f64> =
                    stage1(&index, &fq, usize::MAX)
                        .into_iter().map(|h| (h.ordinal, h.score.value)).collect();
                for hit in stage1(&pruned, &fq, usize::MAX) {
                    let before = full.get(&hit.ordinal).copied().unwrap_or(0.0);
                    prop_assert!(hit.score.value <= before + 1e-9,
                        "pruned score {} above unpruned {}", hit.score.value, before);
                }
            }
        }
    }
}
