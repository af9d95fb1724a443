//! Per-token word-vector providers.
//!
//! The extractor only sees an `n × dim` matrix per sentence, so static
//! tables, random tables and precomputed contextual vectors are
//! interchangeable behind [`EmbeddingProvider`].

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::Sentence;
use crate::ndgrad::Tensor;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EmbeddingError {
    #[error("missing embedding record for {doc_id}#{index}")]
    MissingRecord { doc_id: String, index: usize },
    #[error("embedding record {doc_id}#{index} has {found} rows, sentence has {expected} tokens")]
    RowMismatch { doc_id: String, index: usize, expected: usize, found: usize },
    #[error("vector for {word:?} has dimension {found}, expected {expected}")]
    Dimension { word: String, expected: usize, found: usize },
    #[error("embedding table is empty")]
    Empty,
}

/// Source of token-aligned word vectors.
pub trait EmbeddingProvider {
    fn dim(&self) -> usize;

    /// One row per token of `sentence`.
    fn lookup(&self, sentence: &Sentence) -> Result<Tensor, EmbeddingError>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn lookup(&self, sentence: &Sentence) -> Result<Tensor, EmbeddingError> {
        (**self).lookup(sentence)
    }
}

/// Word → vector table; unknown words map to the mean vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
    unk: Vec<f64>,
}

impl StaticTable {
    /// Later duplicates of a word replace earlier ones.
    pub fn from_entries<I>(entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut vectors = BTreeMap::new();
        let mut dim = None;
        for (word, vector) in entries {
            let expected = *dim.get_or_insert(vector.len());
            if vector.len() != expected || expected == 0 {
                return Err(EmbeddingError::Dimension { word, expected, found: vector.len() });
            }
            vectors.insert(word, vector);
        }
        let dim = dim.ok_or(EmbeddingError::Empty)?;
        let mut unk = vec![0.0; dim];
        for v in vectors.values() {
            for (u, x) in unk.iter_mut().zip(v) {
                *u += x;
            }
        }
        let count = vectors.len() as f64;
        for u in &mut unk {
            *u /= count;
        }
        Ok(StaticTable { dim, vectors, unk })
    }

    /// Uniform(-1, 1) vectors; each word's vector depends only on the word
    /// and `seed`, never on the rest of the vocabulary.
    pub fn random<I, S>(words: I, dim: usize, seed: u64) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let entries = words.into_iter().map(|w| {
            let w = w.as_ref();
            let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(w.as_bytes()) ^ seed);
            let v = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            (String::from(w), v)
        });
        Self::from_entries(entries)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vectors.contains_key(word)
    }

    pub fn word(&self, word: &str) -> &[f64] {
        self.vectors.get(word).unwrap_or(&self.unk)
    }

    pub fn unk(&self) -> &[f64] {
        &self.unk
    }
}

impl EmbeddingProvider for StaticTable {
    fn dim(&self) -> usize {
        self.dim
    }

    fn lookup(&self, sentence: &Sentence) -> Result<Tensor, EmbeddingError> {
        let data = sentence.tokens.iter().flat_map(|t| self.word(&t.text).iter().copied()).collect();
        Ok(Tensor::matrix(sentence.tokens.len(), self.dim, data))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}
