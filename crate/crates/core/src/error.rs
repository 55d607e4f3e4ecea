//! Error taxonomy shared across the crate.
//!
//! Variants are grouped by who can fix the problem: bad inputs surface as
//! `Corpus`/`Config`, unreadable or damaged artifacts as the I/O and integrity
//! variants, and `Internal` flags states that should be impossible when the
//! library's own invariants hold.

use std::path::PathBuf;

use crate::model::TermId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Underlying filesystem failure (missing file, permissions, short write).
    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Input data violates the corpus contract; `line` is 1-based when the
    /// source is a line-oriented file.
    #[error("corpus data at {path}:{line}: {message}")]
    Corpus {
        path: PathBuf,
        line: u64,
        message: String,
    },

    /// A parameter outside its documented domain.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// On-disk artifact written by an incompatible version of this crate.
    #[error("unsupported index version {found} in {path} (expected {expected})")]
    Version {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    /// Index directory lacks its manifest.
    #[error("missing index manifest {path}")]
    MissingManifest { path: PathBuf },

    /// Index manifest present but unusable (bad JSON, missing file entries).
    #[error("invalid index manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    /// File shorter or longer than its manifest entry claims.
    #[error("{path}: expected {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    /// Stored checksum does not match the bytes on disk.
    #[error("checksum mismatch in {path}: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum {
        path: PathBuf,
        stored: u32,
        computed: u32,
    },

    /// Estimated build footprint exceeds the caller-imposed budget.
    #[error("memory budget exceeded: estimated {estimated} bytes > budget {budget} bytes")]
    MemoryBudget { estimated: usize, budget: usize },

    /// Cross-artifact disagreement or a violated internal invariant; always a
    /// bug or tampered artifact, never a user error.
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn corpus(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Corpus { path: path.into(), line, message: message.into() }
    }

    pub(crate) fn bad_term(path: impl Into<PathBuf>, line: u64, term: TermId, vocab: u32) -> Self {
        Error::corpus(
            path,
            line,
            format!("term id {term} out of range for vocabulary of size {vocab}"),
        )
    }
}
