//! Sparse late-interaction retrieval.
//!
//! Documents and queries are bags of sparse token vectors. The exact
//! similarity sums, over query tokens, the best dot product against any
//! document token. That is too expensive to evaluate against a whole corpus,
//! so retrieval runs in two stages:
//!
//! 1. **Candidate generation** over an inverted index of per-term max-pooled
//!    document weights. Collapsing each query to a single fused vector — an
//!    interpolation between an upper-bound (sum of token vectors) and a
//!    lower-bound (argmax-masked token vectors) form — turns candidate scoring
//!    into one sparse dot product per document.
//! 2. **Refinement** of the top candidates with the exact formula against the
//!    stored token vectors.
//!
//! The index can be thinned post hoc by dropping low-impact postings and
//! high-document-frequency terms; refinement restores most of the quality the
//! pruned first stage gives up.
//!
//! Modules: [`model`] (sparse vector algebra), [`ingest`] (corpus interchange
//! and synthesis), [`index`] (build, prune, persist), [`search`] (retrieval
//! and reference scorers), [`eval`] (ranking metrics and parameter sweeps).

pub mod error;
pub mod eval;
pub mod index;
pub mod ingest;
pub mod model;
pub mod search;

pub use error::{Error, Result};
pub use index::{BuildOptions, DocStore, InvertedIndex, Posting, PruneConfig};
pub use model::{PooledSummary, Score, ScoreKind, SparseVector, TermId, TokenMatrix};
pub use search::{ScoredHit, SearchConfig, Searcher};
