//! Corpus and query interchange: line-delimited records of precomputed sparse
//! token vectors, a small manifest declaring the vocabulary, and a toy encoder
//! so the pipeline is runnable without any neural model.
//!
//! One record per line: `{"id": <string>, "vectors": [[[term_id, weight], ...]
//! per token]}`. Weights travel as 32-bit floats; readers widen them to `f64`
//! after parsing, so a write → read → write cycle is byte-identical.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SparseVector, TermId, TokenMatrix};

pub mod synth;

/// Declares what corpus and queries must agree on: the vocabulary size is
/// declared, never inferred from data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub vocab_size: u32,
    pub num_docs: u64,
}

/// One document: external id plus its token vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub matrix: TokenMatrix,
}

/// One query, same shape as a document.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub query_id: String,
    pub matrix: TokenMatrix,
}

/// On-the-wire shape of one record line.
#[derive(Serialize, Deserialize)]
struct WireRecord {
    id: String,
    vectors: Vec<Vec<(u32, f32)>>,
}

pub fn read_corpus_manifest(path: &Path) -> Result<CorpusManifest> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::corpus(path, 1, format!("invalid manifest JSON: {e}")))
}

pub fn write_corpus_manifest(path: &Path, manifest: &CorpusManifest) -> Result<()> {
    let json = serde_json::to_string(manifest).expect("manifest serialization cannot fail");
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

/// Shared line-by-line reader: parses, validates vector invariants and id
/// uniqueness, and reports errors with 1-based line numbers.
struct RawReader {
    lines: std::io::Lines<BufReader<File>>,
    path: PathBuf,
    line_no: u64,
    seen_ids: HashSet<String>,
    vocab_size: u32,
}

impl RawReader {
    fn open(path: &Path, vocab_size: u32) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            lines: BufReader::new(file).lines(),
            path: path.to_path_buf(),
            line_no: 0,
            seen_ids: HashSet::new(),
            vocab_size,
        })
    }

    fn parse_line(&mut self, line: &str) -> Result<(String, TokenMatrix)> {
        let wire: WireRecord = serde_json::from_str(line)
            .map_err(|e| Error::corpus(&self.path, self.line_no, format!("invalid JSON: {e}")))?;
        if wire.id.is_empty() {
            return Err(Error::corpus(&self.path, self.line_no, "empty id"));
        }
        // ids are reproduced verbatim in tab- and space-separated output
        // formats, so embedded whitespace would corrupt those files
        if wire.id.chars().any(char::is_whitespace) {
            return Err(Error::corpus(
                &self.path,
                self.line_no,
                format!("id {:?} contains whitespace", wire.id),
            ));
        }
        if !self.seen_ids.insert(wire.id.clone()) {
            return Err(Error::corpus(
                &self.path,
                self.line_no,
                format!("duplicate id {:?}", wire.id),
            ));
        }
        let mut rows = Vec::with_capacity(wire.vectors.len());
        for token in wire.vectors {
            for &(term, _) in &token {
                if term >= self.vocab_size {
                    return Err(Error::bad_term(
                        &self.path,
                        self.line_no,
                        TermId(term),
                        self.vocab_size,
                    ));
                }
            }
            let entries = token.into_iter().map(|(t, w)| (TermId(t), f64::from(w)));
            let row = SparseVector::from_entries(entries)
                .map_err(|e| Error::corpus(&self.path, self.line_no, e.to_string()))?;
            rows.push(row);
        }
        Ok((wire.id, TokenMatrix::new(rows)))
    }

    fn next_record(&mut self) -> Option<Result<(String, TokenMatrix)>> {
        loop {
            self.line_no += 1;
            match self.lines.next()? {
                Err(e) => return Some(Err(Error::io(&self.path, e))),
                Ok(line) if line.trim().is_empty() => continue,
                Ok(line) => return Some(self.parse_line(&line)),
            }
        }
    }
}

/// Streaming corpus reader; a single consumer pulls records in file order.
pub struct CorpusReader(RawReader);

impl Iterator for CorpusReader {
    type Item = Result<DocumentRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        let next = self.0.next_record()?;
        Some(next.map(|(doc_id, matrix)| DocumentRecord { doc_id, matrix }))
    }
}

/// Streaming query reader.
pub struct QueryReader(RawReader);

impl Iterator for QueryReader {
    type Item = Result<QueryRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        let next = self.0.next_record()?;
        Some(next.map(|(query_id, matrix)| QueryRecord { query_id, matrix }))
    }
}

pub fn read_corpus(path: &Path, vocab_size: u32) -> Result<CorpusReader> {
    RawReader::open(path, vocab_size).map(CorpusReader)
}

pub fn read_queries(path: &Path, vocab_size: u32) -> Result<QueryReader> {
    RawReader::open(path, vocab_size).map(QueryReader)
}

/// Read a whole corpus and check it against the manifest's document count.
pub fn load_corpus(path: &Path, manifest: &CorpusManifest) -> Result<Vec<DocumentRecord>> {
    let docs: Vec<DocumentRecord> =
        read_corpus(path, manifest.vocab_size)?.collect::<Result<_>>()?;
    if docs.len() as u64 != manifest.num_docs {
        return Err(Error::corpus(
            path,
            docs.len() as u64,
            format!(
                "manifest declares {} documents but file contains {}",
                manifest.num_docs,
                docs.len()
            ),
        ));
    }
    Ok(docs)
}

pub fn load_queries(path: &Path, vocab_size: u32) -> Result<Vec<QueryRecord>> {
    read_queries(path, vocab_size)?.collect()
}

fn write_records<'a>(
    path: &Path,
    records: impl Iterator<Item = (&'a str, &'a TokenMatrix)>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (id, matrix) in records {
        let wire = WireRecord {
            id: id.to_owned(),
            vectors: matrix
                .rows()
                .iter()
                .map(|row| row.iter().map(|(t, w)| (t.as_u32(), w as f32)).collect())
                .collect(),
        };
        let line = serde_json::to_string(&wire).expect("record serialization cannot fail");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_corpus(path: &Path, docs: &[DocumentRecord]) -> Result<()> {
    write_records(path, docs.iter().map(|d| (d.doc_id.as_str(), &d.matrix)))
}

pub fn write_queries(path: &Path, queries: &[QueryRecord]) -> Result<()> {
    write_records(path, queries.iter().map(|q| (q.query_id.as_str(), &q.matrix)))
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Deterministic stand-in for a neural encoder: whitespace-tokenize, then hash
/// each token to 1–4 term ids with pseudo-random weights in [0.1, 3.0]. The
/// same text always yields identical output across runs and platforms.
pub fn toy_encode(text: &str, vocab_size: u32) -> TokenMatrix {
    assert!(vocab_size >= 1, "vocab_size must be positive");
    let mut rows = Vec::new();
    for token in text.split_whitespace() {
        let token = token.to_lowercase();
        let base = fnv1a(FNV_OFFSET, token.as_bytes());
        let num_terms = 1 + (base % 4) as usize;
        let mut entries = std::collections::BTreeMap::new();
        for slot in 0..num_terms as u8 {
            let h = fnv1a(base, &[slot]);
            let term = TermId((h % u64::from(vocab_size)) as u32);
            // take the top 31 bits as a fraction in [0, 1)
            let frac = (h >> 33) as f64 / f64::from(1u32 << 31);
            let weight = f64::from((0.1 + frac * 2.9) as f32);
            // colliding slots keep the heavier weight
            let slot_weight = entries.entry(term).or_insert(weight);
            if weight > *slot_weight {
                *slot_weight = weight;
            }
        }
        rows.push(SparseVector::from_sorted(entries.into_iter().collect()));
    }
    TokenMatrix::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TermId;

    fn write_lines(dir: &tempfile::TempDir, name: &str, lines: &[&str]) -> PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, lines.join("\n") + "\n").unwrap();
        path
    }

    #[test]
    fn parses_documented_example_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_lines(&dir, "c.jsonl", &[r#"{"id":"d1","vectors":[[[0,1.0]],[[1,1.0]]]}"#]);
        let docs: Vec<_> = read_corpus(&path, 100).unwrap().collect::<Result<_>>().unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].doc_id, "d1");
        assert_eq!(docs[0].matrix.len(), 2);
        assert_eq!(docs[0].matrix.rows()[0].entries(), &[(TermId(0), 1.0)]);
        assert_eq!(docs[0].matrix.rows()[1].entries(), &[(TermId(1), 1.0)]);
    }

    #[test]
    fn empty_file_is_empty_stream() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        let docs: Vec<_> = read_corpus(&path, 10).unwrap().collect::<Result<_>>().unwrap();
        assert!(docs.is_empty());
    }

    #[test]
    fn negative_weight_names_line_and_invariant() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_lines(
            &dir,
            "c.jsonl",
            &[
                r#"{"id":"d1","vectors":[[[0,1.0]]]}"#,
                r#"{"id":"d2","vectors":[[[0,-0.5]]]}"#,
            ],
        );
        let err = read_corpus(&path, 10)
            .unwrap()
            .collect::<Result<Vec<_>>>()
            .unwrap_err();
        match err {
            Error::Corpus { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("negative weight"), "got: {message}");
            }
            other => panic!("expected corpus error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_and_term_range_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let dup = write_lines(
            &dir,
            "dup.jsonl",
            &[
                r#"{"id":"d1","vectors":[]}"#,
                r#"{"id":"d1","vectors":[]}"#,
            ],
        );
        let err = read_corpus(&dup, 10).unwrap().collect::<Result<Vec<_>>>().unwrap_err();
        assert!(matches!(err, Error::Corpus { line: 2, .. }), "got {err:?}");

        let range = write_lines(&dir, "range.jsonl", &[r#"{"id":"d1","vectors":[[[7,1.0]]]}"#]);
        let err = read_corpus(&range, 7).unwrap().collect::<Result<Vec<_>>>().unwrap_err();
        match err {
            Error::Corpus { line, message, .. } => {
                assert_eq!(line, 1);
                assert!(message.contains("out of range"), "got: {message}");
            }
            other => panic!("expected corpus error, got {other:?}"),
        }
    }

    #[test]
    fn toy_encode_contract() {
        assert!(toy_encode("", 100).is_empty());
        assert_eq!(toy_encode("hello world", 100), toy_encode("hello world", 100));
        let m = toy_encode("hello world", 100);
        assert_eq!(m.len(), 2);
        for row in m.rows() {
            assert!(!row.is_empty() && row.len() <= 4);
            for (term, weight) in row.iter() {
                assert!(term.as_u32() < 100);
                assert!((0.1..=3.0).contains(&weight));
            }
        }
        // case/whitespace normalization, determinism across token positions
        assert_eq!(toy_encode("Hello  WORLD", 100), m);
        assert_ne!(toy_encode("hello", 100), toy_encode("world", 100));
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let m = CorpusManifest { vocab_size: 30000, num_docs: 12 };
        write_corpus_manifest(&path, &m).unwrap();
        assert_eq!(read_corpus_manifest(&path).unwrap(), m);
    }

    #[test]
    fn load_corpus_checks_manifest_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_lines(&dir, "c.jsonl", &[r#"{"id":"d1","vectors":[]}"#]);
        let manifest = CorpusManifest { vocab_size: 10, num_docs: 2 };
        let err = load_corpus(&path, &manifest).unwrap_err();
        assert!(matches!(err, Error::Corpus { .. }), "got {err:?}");
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use crate::model::TermId;
    use proptest::prelude::*;

    fn arb_matrix() -> impl Strategy<Value = TokenMatrix> {
        let row = proptest::collection::btree_map(0u32..64, 0.01f32..8.0, 0..5).prop_map(|m| {
            SparseVector::from_entries(m.into_iter().map(|(t, w)| (TermId(t), f64::from(w))))
                .unwrap()
        });
        proptest::collection::vec(row, 0..6).prop_map(TokenMatrix::new)
    }

    fn arb_docs() -> impl Strategy<Value = Vec<DocumentRecord>> {
        proptest::collection::vec(arb_matrix(), 0..8).prop_map(|ms| {
            ms.into_iter()
                .enumerate()
                .map(|(i, matrix)| DocumentRecord { doc_id: format!("doc{i}"), matrix })
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // write ∘ read is identity on valid records, and re-writing what was
        // read reproduces the file byte for byte
        #[test]
        fn corpus_round_trip(docs in arb_docs()) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("corpus.jsonl");
            write_corpus(&path, &docs).unwrap();
            let back: Vec<_> = read_corpus(&path, 64)
                .unwrap()
                .collect::<crate::error::Result<_>>()
                .unwrap();
            prop_assert_eq!(&back, &docs);

            let second = dir.path().join("again.jsonl");
            write_corpus(&second, &back).unwrap();
            prop_assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&second).unwrap());
        }

        #[test]
        fn toy_encode_satisfies_matrix_invariants(text in "\\PC{0,40}", vocab in 1u32..500) {
            let m = toy_encode(&text, vocab);
            for row in m.rows() {
                let entries = row.entries();
                prop_assert!(entries.windows(2).all(|p| p[0].0 < p[1].0));
                for &(term, weight) in entries {
                    prop_assert!(term.as_u32() < vocab);
                    prop_assert!(weight > 0.0);
                }
            }
        }
    }
}
