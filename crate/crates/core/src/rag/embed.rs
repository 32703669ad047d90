use std::hash::Hasher;

use fnv::FnvHasher;

/// Dimension of the offline hashing embedder.
pub const HASH_DIMENSIONS: usize = 256;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding backend unavailable: {0}")]
    BackendUnavailable(String),
}

/// Maps text to a unit vector. Implementations must be deterministic for a
/// given input and safe to share between threads.
pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError>;
}

/// Character trigrams of the lowercased, whitespace-collapsed text, hashed
/// with 64-bit FNV-1a into [`HASH_DIMENSIONS`] buckets and L2-normalised.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashingEmbedder;

impl Embedder for HashingEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let words: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
        if words.is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let padded: Vec<char> = format!(" {} ", words.join(" ")).chars().collect();
        let mut v = vec![0.0; HASH_DIMENSIONS];
        let mut buf = [0u8; 12];
        for w in padded.windows(3) {
            let mut len = 0;
            for c in w {
                len += c.encode_utf8(&mut buf[len..]).len();
            }
            let mut h = FnvHasher::default();
            h.write(&buf[..len]);
            v[(h.finish() % HASH_DIMENSIONS as u64) as usize] += 1.0;
        }
        Ok(normalize(v))
    }
}

pub(crate) fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Cosine similarity; 0 when either vector is zero or lengths differ.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
