//! Sparse token vectors and the element-wise algebra used everywhere else:
//! merge-join dot products, per-term max pooling, row sums, and argmax masking.
//!
//! Weights are non-negative by contract. Token weights arrive as 32-bit floats
//! from the interchange format; in memory all weights and scores are `f64` so
//! that aggregate vectors (row sums, fused queries) and accumulated scores stay
//! well inside the 1e-6 tolerances the retrieval invariants are checked at.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Index into the lexical vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermId(pub u32);

impl TermId {
    #[inline]
    pub fn as_u32(self) -> u32 {
        self.0
    }
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for TermId {
    fn from(id: u32) -> Self {
        TermId(id)
    }
}

/// Violations of the [`SparseVector`] construction contract.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VectorError {
    #[error("negative weight {weight} for term {term}")]
    NegativeWeight { term: TermId, weight: f64 },
    #[error("non-finite weight for term {term}")]
    NonFiniteWeight { term: TermId },
    #[error("duplicate term {0}")]
    DuplicateTerm(TermId),
}

/// One token's (or one pooled document's) weights over the vocabulary.
///
/// Entries are strictly sorted ascending by term id with no duplicates, and
/// every stored weight is positive: zero weights are dropped at construction,
/// negative or non-finite weights are rejected.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    entries: Vec<(TermId, f64)>,
}

impl SparseVector {
    /// The empty vector.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Build from arbitrary (term, weight) pairs: sorts by term, drops zero
    /// weights, rejects duplicates and negative or non-finite weights.
    pub fn from_entries(
        entries: impl IntoIterator<Item = (TermId, f64)>,
    ) -> Result<Self, VectorError> {
        let mut entries: Vec<(TermId, f64)> = entries.into_iter().collect();
        for &(term, weight) in &entries {
            if !weight.is_finite() {
                return Err(VectorError::NonFiniteWeight { term });
            }
            if weight < 0.0 {
                return Err(VectorError::NegativeWeight { term, weight });
            }
        }
        entries.sort_by_key(|&(term, _)| term);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(VectorError::DuplicateTerm(pair[0].0));
            }
        }
        entries.retain(|&(_, weight)| weight > 0.0);
        Ok(Self { entries })
    }

    /// Construct from entries already known to satisfy the invariants
    /// (sorted strictly ascending, all weights positive and finite).
    pub(crate) fn from_sorted(entries: Vec<(TermId, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|p| p[0].0 < p[1].0));
        debug_assert!(entries.iter().all(|&(_, w)| w > 0.0 && w.is_finite()));
        Self { entries }
    }

    pub fn entries(&self) -> &[(TermId, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, f64)> + '_ {
        self.entries.iter().copied()
    }

    /// Number of stored (non-zero) terms.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Weight for `term`, 0 when absent.
    pub fn weight(&self, term: TermId) -> f64 {
        self.entries
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    /// Largest term id stored, if any.
    pub fn max_term(&self) -> Option<TermId> {
        self.entries.last().map(|&(t, _)| t)
    }

    /// Sparse dot product over shared terms; 0 when disjoint.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j) = (0, 0);
        let a = &self.entries;
        let b = &other.entries;
        let mut acc = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Keep only the single maximum-weight entry; ties go to the smallest
    /// term id. Empty input stays empty.
    pub fn argmax_mask(&self) -> SparseVector {
        let mut best: Option<(TermId, f64)> = None;
        for &(term, weight) in &self.entries {
            // strict > keeps the first (smallest) term on ties
            if best.map_or(true, |(_, w)| weight > w) {
                best = Some((term, weight));
            }
        }
        match best {
            Some(entry) => Self::from_sorted(vec![entry]),
            None => Self::empty(),
        }
    }
}

impl<'a> IntoIterator for &'a SparseVector {
    type Item = &'a (TermId, f64);
    type IntoIter = std::slice::Iter<'a, (TermId, f64)>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

/// Ordered token vectors for one text; may be empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TokenMatrix {
    rows: Vec<SparseVector>,
}

impl TokenMatrix {
    pub fn new(rows: Vec<SparseVector>) -> Self {
        Self { rows }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Total stored entries across rows.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(SparseVector::len).sum()
    }

    /// Largest term id across rows, if any.
    pub fn max_term(&self) -> Option<TermId> {
        self.rows.iter().filter_map(SparseVector::max_term).max()
    }

    /// Element-wise per-term maximum across rows (absent entries count as 0).
    pub fn max_pool(&self) -> PooledSummary {
        let mut acc = std::collections::BTreeMap::new();
        for row in &self.rows {
            for (term, weight) in row.iter() {
                let slot = acc.entry(term).or_insert(0.0f64);
                if weight > *slot {
                    *slot = weight;
                }
            }
        }
        PooledSummary {
            vector: SparseVector::from_sorted(acc.into_iter().collect()),
        }
    }

    /// Element-wise per-term sum across rows.
    pub fn sum_rows(&self) -> SparseVector {
        let mut acc = std::collections::BTreeMap::new();
        for row in &self.rows {
            for (term, weight) in row.iter() {
                *acc.entry(term).or_insert(0.0f64) += weight;
            }
        }
        SparseVector::from_sorted(acc.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a TokenMatrix {
    type Item = &'a SparseVector;
    type IntoIter = std::slice::Iter<'a, SparseVector>;

    fn into_iter(self) -> Self::IntoIter {
        self.rows.iter()
    }
}

/// Element-wise max over a token matrix, the document-side summary that gets
/// indexed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PooledSummary {
    vector: SparseVector,
}

impl PooledSummary {
    pub fn as_vector(&self) -> &SparseVector {
        &self.vector
    }

    pub fn into_vector(self) -> SparseVector {
        self.vector
    }
}

/// Which formula produced a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreKind {
    /// Exact late interaction: sum over query tokens of the best token match.
    Exact,
    /// Lower bound: argmax-masked query tokens against the pooled document.
    Lower,
    /// Upper bound: summed query tokens against the pooled document.
    Upper,
    /// Interpolated lower/upper bound used for first-stage retrieval.
    Fused,
}

/// A non-negative similarity value tagged with the formula that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub value: f64,
    pub kind: ScoreKind,
}

impl Score {
    pub fn exact(value: f64) -> Self {
        Self { value, kind: ScoreKind::Exact }
    }

    pub fn lower(value: f64) -> Self {
        Self { value, kind: ScoreKind::Lower }
    }

    pub fn upper(value: f64) -> Self {
        Self { value, kind: ScoreKind::Upper }
    }

    pub fn fused(value: f64) -> Self {
        Self { value, kind: ScoreKind::Fused }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(entries: &[(u32, f64)]) -> SparseVector {
        SparseVector::from_entries(entries.iter().map(|&(t, w)| (TermId(t), w))).unwrap()
    }

    /// Dense-array mirror of the sparse ops, used as an independent oracle.
    mod dense {
        use super::super::{SparseVector, TokenMatrix};

        pub fn from_sparse(v: &SparseVector, dim: usize) -> Vec<f64> {
            let mut out = vec![0.0; dim];
            for (term, weight) in v.iter() {
                out[term.as_u32() as usize] = weight;
            }
            out
        }

        pub fn dot(a: &[f64], b: &[f64]) -> f64 {
            a.iter().zip(b).map(|(x, y)| x * y).sum()
        }

        pub fn max_pool(m: &TokenMatrix, dim: usize) -> Vec<f64> {
            let mut out: Vec<f64> = vec![0.0; dim];
            for row in m.rows() {
                for (i, v) in from_sparse(row, dim).iter().enumerate() {
                    out[i] = out[i].max(*v);
                }
            }
            out
        }

        pub fn sum_rows(m: &TokenMatrix, dim: usize) -> Vec<f64> {
            let mut out = vec![0.0; dim];
            for row in m.rows() {
                for (i, v) in from_sparse(row, dim).iter().enumerate() {
                    out[i] += v;
                }
            }
            out
        }
    }

    #[test]
    fn dot_shared_terms() {
        // {A:1.0,B:0.5}·{B:1.0} = 0.5, cross-checked densely
        let a = sv(&[(0, 1.0), (1, 0.5)]);
        let b = sv(&[(1, 1.0)]);
        assert_eq!(a.dot(&b), 0.5);
        let expected = dense::dot(&dense::from_sparse(&a, 2), &dense::from_sparse(&b, 2));
        assert_eq!(a.dot(&b), expected);
    }

    #[test]
    fn dot_empty_and_single() {
        assert_eq!(SparseVector::empty().dot(&sv(&[(0, 3.0)])), 0.0);
        assert_eq!(sv(&[(0, 2.0)]).dot(&sv(&[(0, 2.0)])), 4.0);
    }

    #[test]
    fn dot_disjoint_is_zero() {
        assert_eq!(sv(&[(0, 1.0), (2, 2.0)]).dot(&sv(&[(1, 5.0), (3, 1.0)])), 0.0);
    }

    #[test]
    fn max_pool_examples() {
        let m = TokenMatrix::new(vec![sv(&[(0, 1.0)]), sv(&[(1, 1.0)])]);
        assert_eq!(m.max_pool().as_vector(), &sv(&[(0, 1.0), (1, 1.0)]));

        let m = TokenMatrix::new(vec![sv(&[(0, 1.0), (1, 2.0)]), sv(&[(1, 0.5)])]);
        let pooled = m.max_pool();
        assert_eq!(pooled.as_vector(), &sv(&[(0, 1.0), (1, 2.0)]));
        let oracle = dense::max_pool(&m, 2);
        assert_eq!(dense::from_sparse(pooled.as_vector(), 2), oracle);

        assert!(TokenMatrix::empty().max_pool().as_vector().is_empty());
    }

    #[test]
    fn sum_rows_examples() {
        let m = TokenMatrix::new(vec![sv(&[(0, 1.0), (1, 0.5)]), sv(&[(1, 2.0)])]);
        let summed = m.sum_rows();
        assert_eq!(summed, sv(&[(0, 1.0), (1, 2.5)]));
        assert_eq!(dense::from_sparse(&summed, 2), dense::sum_rows(&m, 2));

        let single = TokenMatrix::new(vec![sv(&[(0, 1.0)])]);
        assert_eq!(single.sum_rows(), sv(&[(0, 1.0)]));
        assert!(TokenMatrix::empty().sum_rows().is_empty());
    }

    #[test]
    fn argmax_mask_examples() {
        assert_eq!(sv(&[(0, 1.0), (1, 0.5)]).argmax_mask(), sv(&[(0, 1.0)]));
        assert!(SparseVector::empty().argmax_mask().is_empty());
        // tie broken by smallest term id
        assert_eq!(sv(&[(0, 2.0), (1, 2.0)]).argmax_mask(), sv(&[(0, 2.0)]));
        assert_eq!(sv(&[(3, 2.0), (7, 2.0), (9, 1.0)]).argmax_mask(), sv(&[(3, 2.0)]));
    }

    #[test]
    fn construction_rejects_bad_entries() {
        let neg = SparseVector::from_entries(vec![(TermId(0), -0.5)]);
        assert!(matches!(neg, Err(VectorError::NegativeWeight { .. })));

        let dup = SparseVector::from_entries(vec![(TermId(1), 1.0), (TermId(1), 2.0)]);
        assert!(matches!(dup, Err(VectorError::DuplicateTerm(TermId(1)))));

        let nan = SparseVector::from_entries(vec![(TermId(0), f64::NAN)]);
        assert!(matches!(nan, Err(VectorError::NonFiniteWeight { .. })));
    }

    #[test]
    fn construction_drops_zeros_and_sorts() {
        let v = SparseVector::from_entries(vec![
            (TermId(5), 1.0),
            (TermId(2), 0.0),
            (TermId(1), 3.0),
        ])
        .unwrap();
        assert_eq!(v.entries(), &[(TermId(1), 3.0), (TermId(5), 1.0)]);
        assert_eq!(v.weight(TermId(2)), 0.0);
    }
}
