//! On-disk index format.
//!
//! An index directory holds four files:
//!
//! * `manifest.json` — version, corpus dimensions, the recorded prune config,
//!   and a byte count + CRC32 for every other file, plus a checksum of its own
//!   canonical serialization (computed with `self_crc` set to 0).
//! * `postings.bin` — little-endian, per term: `u32 term_id`, `u32 df`, then
//!   df × (`u32 ordinal`, `f32 impact`), terms ascending.
//! * `docstore.bin` — per doc: `u32 ordinal`, `u32 num_tokens`, then per token
//!   `u32 nnz` and nnz × (`u32 term_id`, `f32 weight`), ordinals ascending.
//! * `ids.tsv` — `ordinal<TAB>doc_id` per line.
//!
//! Readers verify sizes, then checksums, then structure, so damage surfaces as
//! the most specific error available: a shortened file reports truncation, a
//! flipped byte a checksum mismatch, and content that disagrees with the
//! manifest an internal inconsistency. Writing is deterministic: the same
//! artifacts always produce byte-identical files.

use std::collections::BTreeMap;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{DocStore, InvertedIndex, Posting, PruneConfig};
use crate::model::{SparseVector, TermId, TokenMatrix};

const FORMAT_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.json";
const POSTINGS: &str = "postings.bin";
const DOCSTORE: &str = "docstore.bin";
const IDS: &str = "ids.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct FileStamp {
    bytes: u64,
    crc32: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IndexManifest {
    version: u32,
    num_docs: u32,
    vocab_size: u32,
    prune: PruneConfig,
    files: BTreeMap<String, FileStamp>,
    self_crc: u32,
}

impl IndexManifest {
    /// CRC32 of the canonical serialization with `self_crc` zeroed.
    fn compute_self_crc(&self) -> u32 {
        let mut canonical = self.clone();
        canonical.self_crc = 0;
        let json = serde_json::to_string(&canonical).expect("manifest serialization cannot fail");
        crc32fast::hash(json.as_bytes())
    }
}

fn encode_postings(index: &InvertedIndex) -> Vec<u8> {
    let mut buf = Vec::with_capacity(8 * index.num_postings());
    for (term, list) in index.terms() {
        buf.write_u32::<LittleEndian>(term.as_u32()).unwrap();
        buf.write_u32::<LittleEndian>(list.len() as u32).unwrap();
        for p in list {
            buf.write_u32::<LittleEndian>(p.ordinal).unwrap();
            buf.write_f32::<LittleEndian>(p.impact as f32).unwrap();
        }
    }
    buf
}

fn encode_docstore(store: &DocStore) -> Vec<u8> {
    let mut buf = Vec::new();
    for (ordinal, _, matrix) in store.iter() {
        buf.write_u32::<LittleEndian>(ordinal).unwrap();
        buf.write_u32::<LittleEndian>(matrix.len() as u32).unwrap();
        for row in matrix.rows() {
            buf.write_u32::<LittleEndian>(row.len() as u32).unwrap();
            for (term, weight) in row.iter() {
                buf.write_u32::<LittleEndian>(term.as_u32()).unwrap();
                buf.write_f32::<LittleEndian>(weight as f32).unwrap();
            }
        }
    }
    buf
}

fn encode_ids(store: &DocStore) -> Vec<u8> {
    let mut buf = String::new();
    for (ordinal, id, _) in store.iter() {
        buf.push_str(&format!("{ordinal}\t{id}\n"));
    }
    buf.into_bytes()
}

/// Persist both artifacts into `dir`, creating it if needed.
pub fn write_index(dir: &Path, index: &InvertedIndex, store: &DocStore) -> Result<()> {
    if index.num_docs() as usize != store.len() {
        return Err(Error::Internal(format!(
            "index covers {} docs but store holds {}",
            index.num_docs(),
            store.len()
        )));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let payloads = [
        (POSTINGS, encode_postings(index)),
        (DOCSTORE, encode_docstore(store)),
        (IDS, encode_ids(store)),
    ];
    let mut files = BTreeMap::new();
    for (name, bytes) in &payloads {
        files.insert(
            (*name).to_owned(),
            FileStamp { bytes: bytes.len() as u64, crc32: crc32fast::hash(bytes) },
        );
    }
    let mut manifest = IndexManifest {
        version: FORMAT_VERSION,
        num_docs: index.num_docs(),
        vocab_size: index.vocab_size(),
        prune: index.prune_config(),
        files,
        self_crc: 0,
    };
    manifest.self_crc = manifest.compute_self_crc();

    for (name, bytes) in &payloads {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(path.clone(), e))?;
    }
    let manifest_path = dir.join(MANIFEST);
    let json = serde_json::to_string(&manifest).expect("manifest serialization cannot fail");
    std::fs::write(&manifest_path, json).map_err(|e| Error::io(manifest_path, e))
}

fn read_verified(dir: &Path, name: &str, stamp: &FileStamp) -> Result<Vec<u8>> {
    let path = dir.join(name);
    let bytes = match std::fs::read(&path) {
        Ok(bytes) => bytes,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::Truncated { path, expected: stamp.bytes, found: 0 });
        }
        Err(e) => return Err(Error::io(path, e)),
    };
    if bytes.len() as u64 != stamp.bytes {
        return Err(Error::Truncated {
            path,
            expected: stamp.bytes,
            found: bytes.len() as u64,
        });
    }
    let computed = crc32fast::hash(&bytes);
    if computed != stamp.crc32 {
        return Err(Error::Checksum { path, stored: stamp.crc32, computed });
    }
    Ok(bytes)
}

/// Reader for the verified binary payloads; after checksums have passed, any
/// structural surprise is an internal inconsistency, not user error.
struct Payload<'a> {
    cursor: Cursor<&'a [u8]>,
    path: PathBuf,
}

impl<'a> Payload<'a> {
    fn new(dir: &Path, name: &str, bytes: &'a [u8]) -> Self {
        Self { cursor: Cursor::new(bytes), path: dir.join(name) }
    }

    fn broken(&self, what: &str) -> Error {
        Error::Internal(format!("{}: {what}", self.path.display()))
    }

    fn u32(&mut self) -> Result<u32> {
        self.cursor
            .read_u32::<LittleEndian>()
            .map_err(|_| self.broken("ends mid-record"))
    }

    fn f32(&mut self) -> Result<f32> {
        self.cursor
            .read_f32::<LittleEndian>()
            .map_err(|_| self.broken("ends mid-record"))
    }

    fn exhausted(&self) -> bool {
        self.cursor.position() == self.cursor.get_ref().len() as u64
    }
}

fn decode_postings(
    dir: &Path,
    bytes: &[u8],
    num_docs: u32,
    vocab_size: u32,
) -> Result<BTreeMap<TermId, Vec<Posting>>> {
    let mut payload = Payload::new(dir, POSTINGS, bytes);
    let mut postings = BTreeMap::new();
    let mut prev_term: Option<u32> = None;
    while !payload.exhausted() {
        let term = payload.u32()?;
        if prev_term.is_some_and(|p| p >= term) {
            return Err(payload.broken("terms not strictly ascending"));
        }
        if term >= vocab_size {
            return Err(payload.broken(&format!("term {term} ≥ vocab_size {vocab_size}")));
        }
        prev_term = Some(term);
        let df = payload.u32()?;
        if df == 0 {
            return Err(payload.broken(&format!("empty posting list for term {term}")));
        }
        let mut list = Vec::with_capacity(df as usize);
        let mut prev_ordinal: Option<u32> = None;
        for _ in 0..df {
            let ordinal = payload.u32()?;
            if ordinal >= num_docs {
                return Err(payload.broken(&format!("ordinal {ordinal} ≥ num_docs {num_docs}")));
            }
            if prev_ordinal.is_some_and(|p| p >= ordinal) {
                return Err(payload.broken("ordinals not strictly ascending"));
            }
            prev_ordinal = Some(ordinal);
            let impact = payload.f32()?;
            if !(impact.is_finite() && impact > 0.0) {
                return Err(payload.broken(&format!("non-positive impact for term {term}")));
            }
            list.push(Posting { ordinal, impact: f64::from(impact) });
        }
        postings.insert(TermId(term), list);
    }
    Ok(postings)
}

fn decode_docstore(
    dir: &Path,
    bytes: &[u8],
    num_docs: u32,
    vocab_size: u32,
) -> Result<Vec<TokenMatrix>> {
    let mut payload = Payload::new(dir, DOCSTORE, bytes);
    let mut matrices = Vec::with_capacity(num_docs as usize);
    for expected_ordinal in 0..num_docs {
        let ordinal = payload.u32()?;
        if ordinal != expected_ordinal {
            return Err(payload.broken(&format!(
                "ordinal {ordinal} where {expected_ordinal} was expected"
            )));
        }
        let num_tokens = payload.u32()?;
        let mut rows = Vec::with_capacity(num_tokens as usize);
        for _ in 0..num_tokens {
            let nnz = payload.u32()?;
            let mut entries = Vec::with_capacity(nnz as usize);
            let mut prev_term: Option<u32> = None;
            for _ in 0..nnz {
                let term = payload.u32()?;
                if term >= vocab_size {
                    return Err(payload.broken(&format!("term {term} ≥ vocab_size {vocab_size}")));
                }
                if prev_term.is_some_and(|p| p >= term) {
                    return Err(payload.broken("token terms not strictly ascending"));
                }
                prev_term = Some(term);
                let weight = payload.f32()?;
                if !(weight.is_finite() && weight > 0.0) {
                    return Err(payload.broken("non-positive token weight"));
                }
                entries.push((TermId(term), f64::from(weight)));
            }
            rows.push(SparseVector::from_sorted(entries));
        }
        matrices.push(TokenMatrix::new(rows));
    }
    if !payload.exhausted() {
        return Err(payload.broken("trailing bytes after last document"));
    }
    Ok(matrices)
}

fn decode_ids(dir: &Path, bytes: &[u8], num_docs: u32) -> Result<Vec<String>> {
    let path = dir.join(IDS);
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::Internal(format!("{}: not valid UTF-8", path.display())))?;
    let mut ids = Vec::with_capacity(num_docs as usize);
    for (i, line) in text.lines().enumerate() {
        let (ordinal, id) = line.split_once('\t').ok_or_else(|| {
            Error::Internal(format!("{}:{}: missing tab separator", path.display(), i + 1))
        })?;
        if ordinal.parse::<u32>() != Ok(i as u32) {
            return Err(Error::Internal(format!(
                "{}:{}: ordinal {ordinal} where {i} was expected",
                path.display(),
                i + 1
            )));
        }
        ids.push(id.to_owned());
    }
    if ids.len() as u64 != u64::from(num_docs) {
        return Err(Error::Internal(format!(
            "{}: {} ids for {} documents",
            path.display(),
            ids.len(),
            num_docs
        )));
    }
    Ok(ids)
}

/// Load an index directory, verifying integrity before trusting any content.
pub fn read_index(dir: &Path) -> Result<(InvertedIndex, DocStore)> {
    let manifest_path = dir.join(MANIFEST);
    let raw = match std::fs::read(&manifest_path) {
        Ok(raw) => raw,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::MissingManifest { path: manifest_path });
        }
        Err(e) => return Err(Error::io(manifest_path, e)),
    };
    let manifest: IndexManifest = serde_json::from_slice(&raw).map_err(|e| Error::Manifest {
        path: manifest_path.clone(),
        message: e.to_string(),
    })?;
    if manifest.version != FORMAT_VERSION {
        return Err(Error::Version {
            path: manifest_path,
            found: manifest.version,
            expected: FORMAT_VERSION,
        });
    }
    let computed = manifest.compute_self_crc();
    if computed != manifest.self_crc {
        return Err(Error::Checksum {
            path: manifest_path,
            stored: manifest.self_crc,
            computed,
        });
    }
    for name in [POSTINGS, DOCSTORE, IDS] {
        if !manifest.files.contains_key(name) {
            return Err(Error::Manifest {
                path: manifest_path.clone(),
                message: format!("no entry for {name}"),
            });
        }
    }

    let postings_bytes = read_verified(dir, POSTINGS, &manifest.files[POSTINGS])?;
    let docstore_bytes = read_verified(dir, DOCSTORE, &manifest.files[DOCSTORE])?;
    let ids_bytes = read_verified(dir, IDS, &manifest.files[IDS])?;

    let postings = decode_postings(dir, &postings_bytes, manifest.num_docs, manifest.vocab_size)?;
    let matrices = decode_docstore(dir, &docstore_bytes, manifest.num_docs, manifest.vocab_size)?;
    let doc_ids = decode_ids(dir, &ids_bytes, manifest.num_docs)?;

    let index = super::index_from_parts(
        manifest.num_docs,
        manifest.vocab_size,
        postings,
        doc_ids.clone(),
        manifest.prune,
    );
    Ok((index, DocStore::from_parts(doc_ids, matrices)))
}
