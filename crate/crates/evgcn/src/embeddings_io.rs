//! Word-vector files.
//!
//! Static tables are text, one `word v1 ... vd` entry per line. A leading
//! `count dim` header line (word2vec text format) is skipped.
//!
//! Contextual vector files are binary, little-endian:
//!
//! ```text
//! header  : b"EVGCNCTX" | u32 version (=1) | u32 dim
//! record* : u32 len | doc_id bytes (UTF-8) | u32 sentence index | u32 n
//!           | n*dim f32 | u32 CRC32 of every preceding byte of the record
//! ```
//!
//! Records are keyed by `(doc_id, sentence index)` and hold one row per
//! corpus token. Values are widened to f64 on load.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use evgcn_core::embeddings::EmbeddingError;
use evgcn_core::{EmbeddingProvider, Sentence, StaticTable, Tensor};
use thiserror::Error;

pub const CONTEXTUAL_MAGIC: &[u8; 8] = b"EVGCNCTX";
pub const CONTEXTUAL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EmbeddingFileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("not a contextual vector file (bad magic)")]
    BadMagic,
    #[error("unsupported contextual vector file version {0}")]
    Version(u32),
    #[error("dimension must be positive")]
    ZeroDim,
    #[error("record {doc_id}#{index}: checksum mismatch, file is corrupt")]
    Checksum { doc_id: String, index: usize },
    #[error("truncated file: {0}")]
    Truncated(String),
    #[error("duplicate record {doc_id}#{index}")]
    Duplicate { doc_id: String, index: usize },
    #[error("record {doc_id}#{index}: doc id is not UTF-8")]
    DocId { doc_id: String, index: usize },
    #[error("record {doc_id}#{index}: expected {expected} values, got {found}")]
    Shape { doc_id: String, index: usize, expected: usize, found: usize },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// Parses a static table from text.
pub fn parse_static(text: &str) -> Result<StaticTable, EmbeddingFileError> {
    let mut entries = Vec::new();
    let mut dim: Option<usize> = None;
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let rest: Vec<&str> = parts.collect();
        if k == 0 && rest.len() == 1 && word.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
            continue;
        }
        let vector = rest
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| EmbeddingFileError::Line { line: line_no, message: format!("{word}: {e}") })?;
        let expected = *dim.get_or_insert(vector.len());
        if vector.is_empty() || vector.len() != expected {
            return Err(EmbeddingFileError::Line {
                line: line_no,
                message: format!("vector for {word:?} has dimension {}, expected {expected}", vector.len()),
            });
        }
        entries.push((word.to_string(), vector));
    }
    Ok(StaticTable::from_entries(entries)?)
}

pub fn load_static(path: &Path) -> Result<StaticTable, EmbeddingFileError> {
    let text = fs::read_to_string(path).map_err(|source| EmbeddingFileError::Io { path: path.to_path_buf(), source })?;
    parse_static(&text)
}

/// Token-aligned contextual vectors keyed by `(doc_id, sentence index)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextualVectorFile {
    dim: usize,
    records: BTreeMap<(String, usize), Tensor>,
}

impl ContextualVectorFile {
    pub fn new(dim: usize) -> Result<Self, EmbeddingFileError> {
        if dim == 0 {
            return Err(EmbeddingFileError::ZeroDim);
        }
        Ok(ContextualVectorFile { dim, records: BTreeMap::new() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Inserts or replaces a record. Values are rounded to f32, as stored
    /// on disk.
    pub fn insert(&mut self, doc_id: &str, index: usize, rows: &Tensor) -> Result<(), EmbeddingFileError> {
        if rows.cols() != self.dim || !rows.is_matrix() {
            return Err(EmbeddingFileError::Shape {
                doc_id: doc_id.to_string(),
                index,
                expected: rows.rows() * self.dim,
                found: rows.len(),
            });
        }
        let data = rows.data().iter().map(|&x| x as f32 as f64).collect();
        self.records.insert((doc_id.to_string(), index), Tensor::matrix(rows.rows(), self.dim, data));
        Ok(())
    }

    pub fn get(&self, doc_id: &str, index: usize) -> Option<&Tensor> {
        self.records.get(&(doc_id.to_string(), index))
    }

    pub fn keys(&self) -> impl Iterator<Item = (&str, usize)> {
        self.records.keys().map(|(d, i)| (d.as_str(), *i))
    }

    /// Every sentence must have a record whose row count equals its token
    /// count.
    pub fn validate_against(&self, sentences: &[Sentence]) -> Result<(), EmbeddingError> {
        for s in sentences {
            self.lookup(s)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CONTEXTUAL_MAGIC);
        out.extend_from_slice(&CONTEXTUAL_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for ((doc_id, index), rows) in &self.records {
            let start = out.len();
            out.extend_from_slice(&(doc_id.len() as u32).to_le_bytes());
            out.extend_from_slice(doc_id.as_bytes());
            out.extend_from_slice(&(*index as u32).to_le_bytes());
            out.extend_from_slice(&(rows.rows() as u32).to_le_bytes());
            for &x in rows.data() {
                out.extend_from_slice(&(x as f32).to_le_bytes());
            }
            let crc = crc32fast::hash(&out[start..]);
            out.extend_from_slice(&crc.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EmbeddingFileError> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(8, "header")? != CONTEXTUAL_MAGIC {
            return Err(EmbeddingFileError::BadMagic);
        }
        let version = cur.u32("header")?;
        if version != CONTEXTUAL_VERSION {
            return Err(EmbeddingFileError::Version(version));
        }
        let mut file = ContextualVectorFile::new(cur.u32("header")? as usize)?;
        while cur.pos < bytes.len() {
            let start = cur.pos;
            let len = cur.u32("record doc id length")? as usize;
            let raw_id = cur.take(len, "record doc id")?;
            let index = cur.u32("record index")? as usize;
            let lossy_id = String::from_utf8_lossy(raw_id).into_owned();
            let n = cur.u32("record row count")? as usize;
            let count = n.checked_mul(file.dim).ok_or_else(|| EmbeddingFileError::Shape {
                doc_id: lossy_id.clone(),
                index,
                expected: usize::MAX,
                found: 0,
            })?;
            let context = format!("record {lossy_id}#{index} data");
            let raw = cur.take(count.saturating_mul(4), &context)?;
            let body_end = cur.pos;
            let stored = cur.u32(&format!("record {lossy_id}#{index} checksum"))?;
            if crc32fast::hash(&bytes[start..body_end]) != stored {
                return Err(EmbeddingFileError::Checksum { doc_id: lossy_id, index });
            }
            let doc_id = String::from_utf8(raw_id.to_vec())
                .map_err(|_| EmbeddingFileError::DocId { doc_id: lossy_id.clone(), index })?;
            let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect();
            let key = (doc_id, index);
            if file.records.contains_key(&key) {
                return Err(EmbeddingFileError::Duplicate { doc_id: key.0, index });
            }
            file.records.insert(key, Tensor::matrix(n, file.dim, data));
        }
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<(), EmbeddingFileError> {
        let io_err = |source| EmbeddingFileError::Io { path: path.to_path_buf(), source };
        let mut f = io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
        f.write_all(&self.to_bytes()).map_err(io_err)?;
        f.flush().map_err(io_err)
    }

    pub fn load(path: &Path) -> Result<Self, EmbeddingFileError> {
        let io_err = |source| EmbeddingFileError::Io { path: path.to_path_buf(), source };
        let mut bytes = Vec::new();
        fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(io_err)?;
        Self::from_bytes(&bytes)
    }
}

impl EmbeddingProvider for ContextualVectorFile {
    fn dim(&self) -> usize {
        self.dim
    }

    fn lookup(&self, sentence: &Sentence) -> Result<Tensor, EmbeddingError> {
        let rows = self.get(&sentence.doc_id, sentence.index).ok_or_else(|| EmbeddingError::MissingRecord {
            doc_id: sentence.doc_id.clone(),
            index: sentence.index,
        })?;
        if rows.rows() != sentence.len() {
            return Err(EmbeddingError::RowMismatch {
                doc_id: sentence.doc_id.clone(),
                index: sentence.index,
                expected: sentence.len(),
                found: rows.rows(),
            });
        }
        Ok(rows.clone())
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], EmbeddingFileError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            EmbeddingFileError::Truncated(format!("{what} needs {n} bytes at offset {}, {} left", self.pos, self.bytes.len() - self.pos))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32, EmbeddingFileError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}
