use serde::{Deserialize, Serialize};

use super::{Embedder, ProviderError};

pub const DEFAULT_DIMENSION: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(pub Vec<f64>);

impl EmbeddingVector {
    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Cosine similarity, normalizing both sides. Zero vectors score 0 against everything.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    assert_eq!(a.dimension(), b.dimension(), "embedding dimensions differ");
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Bag of hashed character 3-grams over the lowercased text, raw counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedNgramEmbedder {
    dimension: usize,
}

impl Default for HashedNgramEmbedder {
    fn default() -> Self {
        HashedNgramEmbedder { dimension: DEFAULT_DIMENSION }
    }
}

impl HashedNgramEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        HashedNgramEmbedder { dimension }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

impl Embedder for HashedNgramEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, ProviderError> {
        if text.trim().is_empty() {
            return Err(ProviderError::EmptyText);
        }
        let chars: Vec<char> = text.to_lowercase().chars().collect();
        let mut values = vec![0.0; self.dimension];
        let mut gram = String::new();
        for window in chars.windows(3) {
            gram.clear();
            gram.extend(window);
            let bucket = (fnv1a(gram.as_bytes()) % self.dimension as u64) as usize;
            values[bucket] += 1.0;
        }
        Ok(EmbeddingVector(values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_trigram_has_one_bucket() {
        let v = HashedNgramEmbedder::default().embed("abc").unwrap();
        assert_eq!(v.dimension(), 256);
        assert_eq!(v.0.iter().filter(|x| **x != 0.0).count(), 1);
        assert_eq!(v.0.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn case_insensitive_and_pure() {
        let e = HashedNgramEmbedder::default();
        assert_eq!(e.embed("Guard").unwrap(), e.embed("guard").unwrap());
        assert_eq!(e.embed("guard definition").unwrap(), e.embed("guard definition").unwrap());
    }

    #[test]
    fn self_similarity_is_one() {
        let e = HashedNgramEmbedder::default();
        let v = e.embed("guard definition").unwrap();
        assert!((cosine(&v, &v) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_text_is_rejected() {
        assert_eq!(HashedNgramEmbedder::default().embed("  \n"), Err(ProviderError::EmptyText));
    }

    #[test]
    fn short_text_gives_zero_vector_scoring_zero() {
        let e = HashedNgramEmbedder::default();
        let z = e.embed("ab").unwrap();
        assert_eq!(z.norm(), 0.0);
        assert_eq!(cosine(&z, &e.embed("abc").unwrap()), 0.0);
    }
}
