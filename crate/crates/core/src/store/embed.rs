//! Text embeddings and cosine similarity.

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::mask::PLACEHOLDER;

pub const DEFAULT_DIMS: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("text has no embeddable content")]
    EmptyText,
    #[error("embedding backend failed: {0}")]
    Backend(String),
    #[error("expected {expected} dimensions, got {got}")]
    Dims { expected: usize, got: usize },
}

/// Unit-norm vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector<F> {
    pub values: Vec<F>,
}

impl<F: Float> EmbeddingVector<F> {
    /// Normalizes `values`; fails on an all-zero vector.
    pub fn from_raw(mut values: Vec<F>) -> Result<Self, EmbedError> {
        let norm = values.iter().fold(F::zero(), |acc, &v| acc + v * v).sqrt();
        if norm == F::zero() || !norm.is_finite() {
            return Err(EmbedError::EmptyText);
        }
        for v in &mut values {
            *v = *v / norm;
        }
        Ok(EmbeddingVector { values })
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> F {
        self.values.iter().fold(F::zero(), |acc, &v| acc + v * v).sqrt()
    }

    pub fn dot(&self, other: &Self) -> F {
        self.values
            .iter()
            .zip(&other.values)
            .fold(F::zero(), |acc, (&a, &b)| acc + a * b)
    }

    pub fn cast<G: Float>(&self) -> EmbeddingVector<G> {
        EmbeddingVector {
            values: self.values.iter().map(|v| G::from(*v).unwrap()).collect(),
        }
    }
}

/// Cosine similarity. Stored vectors are unit-norm, but this does not assume it.
pub fn cosine<F: Float>(a: &EmbeddingVector<F>, b: &EmbeddingVector<F>) -> F {
    let d = a.norm() * b.norm();
    if d == F::zero() {
        F::zero()
    } else {
        a.dot(b) / d
    }
}

/// Anything that can turn text into a fixed-size vector.
pub trait Embedder: Send + Sync {
    fn id(&self) -> &str;
    fn dims(&self) -> usize;
    fn embed(&self, text: &str) -> Result<EmbeddingVector<f64>, EmbedError>;
}

/// Deterministic hashed bag of word features and padded character trigrams.
#[derive(Debug, Clone)]
pub struct TrigramEmbedder {
    dims: usize,
    seed: u64,
}

impl Default for TrigramEmbedder {
    fn default() -> Self {
        TrigramEmbedder::new(DEFAULT_DIMS)
    }
}

const PLACEHOLDER_TOKEN: &str = "\u{1}company";

/// Function words dropped before hashing unless nothing else is left.
const STOPWORDS: &[&str] = &[
    "a", "an", "the", "of", "is", "are", "was", "were", "be", "been", "in", "on", "at", "to", "for",
    "from", "by", "with", "about", "and", "or", "s", "it", "its", "this", "that", "there", "me",
    "my", "i", "you", "your", "please", "could", "can", "do", "does", "did", "tell",
];

impl TrigramEmbedder {
    pub fn new(dims: usize) -> Self {
        assert!(dims > 0, "dims must be positive");
        TrigramEmbedder {
            dims,
            seed: 0x9e37_79b9_7f4a_7c15,
        }
    }

    fn bucket(&self, feature: &str) -> usize {
        // FNV-1a over the seed, then a multiplicative finalizer
        let mut h = self.seed ^ 0xcbf2_9ce4_8422_2325;
        for b in feature.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h ^= h >> 29;
        h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 32;
        (h % self.dims as u64) as usize
    }

    /// Generic form of [`Embedder::embed`].
    pub fn embed_as<F: Float>(&self, text: &str) -> Result<EmbeddingVector<F>, EmbedError> {
        let mut tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(EmbedError::EmptyText);
        }
        if tokens.iter().any(|t| !STOPWORDS.contains(&t.as_str())) {
            tokens.retain(|t| !STOPWORDS.contains(&t.as_str()));
        }
        let mut acc = vec![F::zero(); self.dims];
        let word_weight = F::from(2.0).unwrap();
        for tok in &tokens {
            let wb = self.bucket(&format!("w:{tok}"));
            acc[wb] = acc[wb] + word_weight;
            if tok == PLACEHOLDER_TOKEN {
                continue;
            }
            let padded: Vec<char> = format!("^{tok}$").chars().collect();
            for g in padded.windows(3) {
                let gram: String = g.iter().collect();
                let b = self.bucket(&gram);
                acc[b] = acc[b] + F::one();
            }
        }
        EmbeddingVector::from_raw(acc)
    }
}

impl Embedder for TrigramEmbedder {
    fn id(&self) -> &str {
        "builtin-trigram"
    }

    fn dims(&self) -> usize {
        self.dims
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector<f64>, EmbedError> {
        self.embed_as(text)
    }
}

/// Lowercased alphanumeric runs; the mask placeholder is one token.
fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let ph = PLACEHOLDER.to_lowercase();
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut rest = lower.as_str();
    while let Some(c) = rest.chars().next() {
        if rest.starts_with(&ph) {
            if !cur.is_empty() {
                tokens.push(std::mem::take(&mut cur));
            }
            tokens.push(PLACEHOLDER_TOKEN.to_string());
            rest = &rest[ph.len()..];
            continue;
        }
        if c.is_alphanumeric() {
            cur.push(c);
        } else if !cur.is_empty() {
            tokens.push(std::mem::take(&mut cur));
        }
        rest = &rest[c.len_utf8()..];
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}
