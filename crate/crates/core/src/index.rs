//! The two retrieval artifacts: an impact-scored inverted index over
//! max-pooled document summaries, and a document store of raw token matrices
//! for exact refinement. Pruning thins the index after the fact; persistence
//! lives in [`persist`].
//!
//! Documents get dense ordinals in arrival order; external ids appear only at
//! the API boundary. Both artifacts are immutable once built and safe to share
//! across concurrent searches.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::DocumentRecord;
use crate::model::{TermId, TokenMatrix};

pub mod persist;

/// One inverted-index entry: a document ordinal and the max-pooled weight the
/// term reached in that document.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posting {
    pub ordinal: u32,
    pub impact: f64,
}

/// Post-hoc pruning thresholds. Zero disables the respective pruning; the
/// documented defaults match the retrieval defaults elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    /// Postings with impact below this are removed.
    pub weight_threshold: f64,
    /// Posting lists whose idf = ln(num_docs / df) falls below this are
    /// removed, with df measured after weight pruning.
    pub idf_threshold: f64,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self { weight_threshold: 0.5, idf_threshold: 3.0 }
    }
}

impl PruneConfig {
    /// Both prunings disabled.
    pub fn none() -> Self {
        Self { weight_threshold: 0.0, idf_threshold: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("weight_threshold", self.weight_threshold),
            ("idf_threshold", self.idf_threshold),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and ≥ 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Knobs for [`build`].
#[derive(Debug, Clone, Copy, Default)]
pub struct BuildOptions {
    /// Rough cap on the bytes the built artifacts may occupy; `None` means
    /// unbounded. Accounting is approximate (entry payloads plus container
    /// overhead), intended to fail fast rather than meter precisely.
    pub memory_budget: Option<usize>,
}

/// Term → postings over max-pooled document summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    num_docs: u32,
    vocab_size: u32,
    postings: BTreeMap<TermId, Vec<Posting>>,
    doc_table: Vec<String>,
    prune: PruneConfig,
}

/// Raw token matrices by ordinal, used only by refinement and the test
/// oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct DocStore {
    doc_ids: Vec<String>,
    matrices: Vec<TokenMatrix>,
}

const ENTRY_BYTES: usize = std::mem::size_of::<(TermId, f64)>();
const POSTING_BYTES: usize = std::mem::size_of::<Posting>();
const ROW_OVERHEAD: usize = 24; // Vec header per token

/// Build both artifacts from an ingest-validated corpus. Ordinals follow
/// arrival order; each document's matrix is max-pooled and every pooled
/// (term, weight) becomes a posting.
pub fn build(
    docs: Vec<DocumentRecord>,
    vocab_size: u32,
    options: &BuildOptions,
) -> Result<(InvertedIndex, DocStore)> {
    if docs.len() > u32::MAX as usize {
        return Err(Error::Config(format!("corpus of {} docs exceeds ordinal space", docs.len())));
    }
    let mut postings: BTreeMap<TermId, Vec<Posting>> = BTreeMap::new();
    let mut doc_ids = Vec::with_capacity(docs.len());
    let mut matrices = Vec::with_capacity(docs.len());
    let mut estimated = 0usize;

    for (ordinal, doc) in docs.into_iter().enumerate() {
        if let Some(t) = doc.matrix.max_term() {
            if t.as_u32() >= vocab_size {
                return Err(Error::Internal(format!(
                    "document {:?} uses term {t} beyond vocab_size {vocab_size}; \
                     corpus was not ingest-validated",
                    doc.doc_id
                )));
            }
        }
        let pooled = doc.matrix.max_pool().into_vector();
        estimated += doc.doc_id.len()
            + doc.matrix.nnz() * ENTRY_BYTES
            + doc.matrix.len() * ROW_OVERHEAD
            + pooled.len() * POSTING_BYTES;
        if let Some(budget) = options.memory_budget {
            if estimated > budget {
                return Err(Error::MemoryBudget { estimated, budget });
            }
        }
        for (term, impact) in pooled.iter() {
            postings
                .entry(term)
                .or_default()
                .push(Posting { ordinal: ordinal as u32, impact });
        }
        doc_ids.push(doc.doc_id);
        matrices.push(doc.matrix);
    }

    let index = InvertedIndex {
        num_docs: doc_ids.len() as u32,
        vocab_size,
        postings,
        doc_table: doc_ids.clone(),
        prune: PruneConfig::none(),
    };
    Ok((index, DocStore { doc_ids, matrices }))
}

impl InvertedIndex {
    pub fn num_docs(&self) -> u32 {
        self.num_docs
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }

    /// Pruning recorded on this index (what built or last pruned it).
    pub fn prune_config(&self) -> PruneConfig {
        self.prune
    }

    pub fn postings(&self, term: TermId) -> Option<&[Posting]> {
        self.postings.get(&term).map(Vec::as_slice)
    }

    /// All posting lists in ascending term order.
    pub fn terms(&self) -> impl Iterator<Item = (TermId, &[Posting])> {
        self.postings.iter().map(|(&t, l)| (t, l.as_slice()))
    }

    pub fn num_terms(&self) -> usize {
        self.postings.len()
    }

    pub fn num_postings(&self) -> usize {
        self.postings.values().map(Vec::len).sum()
    }

    /// Document frequency of a term still present in the index.
    pub fn df(&self, term: TermId) -> Option<usize> {
        self.postings.get(&term).map(Vec::len)
    }

    /// ln(num_docs / df) for a term still present in the index.
    pub fn idf(&self, term: TermId) -> Option<f64> {
        self.df(term).map(|df| (f64::from(self.num_docs) / df as f64).ln())
    }

    pub fn doc_id(&self, ordinal: u32) -> Option<&str> {
        self.doc_table.get(ordinal as usize).map(String::as_str)
    }

    pub fn doc_table(&self) -> &[String] {
        &self.doc_table
    }

    /// Return a pruned copy; the input is unchanged. Postings with impact
    /// below `weight_threshold` go first, then whole lists whose idf —
    /// measured on the weight-pruned list — is below `idf_threshold`.
    /// Surviving postings are untouched, so pruning the result again with the
    /// same config is a no-op.
    pub fn prune(&self, cfg: &PruneConfig) -> InvertedIndex {
        let mut postings = BTreeMap::new();
        for (&term, list) in &self.postings {
            let kept: Vec<Posting> = list
                .iter()
                .filter(|p| p.impact >= cfg.weight_threshold)
                .copied()
                .collect();
            if kept.is_empty() {
                continue;
            }
            let idf = (f64::from(self.num_docs) / kept.len() as f64).ln();
            if idf < cfg.idf_threshold {
                continue;
            }
            postings.insert(term, kept);
        }
        InvertedIndex {
            num_docs: self.num_docs,
            vocab_size: self.vocab_size,
            postings,
            doc_table: self.doc_table.clone(),
            prune: *cfg,
        }
    }
}

impl DocStore {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn doc_id(&self, ordinal: u32) -> Option<&str> {
        self.doc_ids.get(ordinal as usize).map(String::as_str)
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn matrix(&self, ordinal: u32) -> Option<&TokenMatrix> {
        self.matrices.get(ordinal as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &str, &TokenMatrix)> {
        self.doc_ids
            .iter()
            .zip(&self.matrices)
            .enumerate()
            .map(|(i, (id, m))| (i as u32, id.as_str(), m))
    }

    pub(crate) fn from_parts(doc_ids: Vec<String>, matrices: Vec<TokenMatrix>) -> Self {
        debug_assert_eq!(doc_ids.len(), matrices.len());
        Self { doc_ids, matrices }
    }
}

pub(crate) fn index_from_parts(
    num_docs: u32,
    vocab_size: u32,
    postings: BTreeMap<TermId, Vec<Posting>>,
    doc_table: Vec<String>,
    prune: PruneConfig,
) -> InvertedIndex {
    InvertedIndex { num_docs, vocab_size, postings, doc_table, prune }
}
