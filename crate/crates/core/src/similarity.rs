//! Pairwise similarity between candidate explanations.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::StableHash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityMode {
    Unigram,
    #[default]
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimilarityError {
    #[error("similarity of empty text is undefined")]
    EmptyInput,
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

fn unigrams(s: &str) -> BTreeSet<String> {
    s.split_whitespace().map(str::to_lowercase).collect()
}

/// Jaccard index of lowercased whitespace unigram sets.
pub fn unigram_similarity(a: &str, b: &str) -> Result<f64, SimilarityError> {
    let (sa, sb) = (unigrams(a), unigrams(b));
    if sa.is_empty() || sb.is_empty() {
        return Err(SimilarityError::EmptyInput);
    }
    let shared = sa.intersection(&sb).count();
    let union = sa.len() + sb.len() - shared;
    Ok(shared as f64 / union as f64)
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, SimilarityError> {
    if u.len() != v.len() {
        return Err(SimilarityError::DimensionMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = libm::sqrt(u.iter().map(|a| a * a).sum());
    let nv = libm::sqrt(v.iter().map(|a| a * a).sum());
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (nu * nv))
}

/// Cosine with negatives clamped to zero, so the result is in [0, 1].
pub fn embedding_similarity(u: &[f64], v: &[f64]) -> Result<f64, SimilarityError> {
    Ok(cosine(u, v)?.clamp(0.0, 1.0))
}

pub const MOCK_EMBEDDING_DIM: usize = 256;

/// Bucket a token lands in for the hash-projection embedding.
pub fn token_bucket(token: &str, dim: usize) -> usize {
    (StableHash::new().str(token).finish() % dim as u64) as usize
}

/// Order-insensitive hash projection: each lowercased whitespace token adds
/// one to its bucket, then the vector is L2-normalized. Texts whose tokens
/// occupy disjoint buckets are orthogonal.
pub fn hash_projection(text: &str, dim: usize) -> Vec<f64> {
    let mut v = alloc::vec![0.0; dim];
    for tok in text.split_whitespace() {
        v[token_bucket(&tok.to_lowercase(), dim)] += 1.0;
    }
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum());
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unigram_examples() {
        assert_eq!(unigram_similarity("a b c", "a b d").unwrap(), 0.5);
        assert_eq!(unigram_similarity("The cat", "the CAT").unwrap(), 1.0);
        assert_eq!(unigram_similarity("a b", "c d").unwrap(), 0.0);
        assert_eq!(unigram_similarity("", "a"), Err(SimilarityError::EmptyInput));
        assert_eq!(unigram_similarity("  ", "a"), Err(SimilarityError::EmptyInput));
    }

    #[test]
    fn embedding_clamps_negative() {
        assert_eq!(embedding_similarity(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(embedding_similarity(&[1.0, 0.0], &[2.0, 0.0]).unwrap(), 1.0);
        assert!(cosine(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn hash_projection_is_normalized_and_deterministic() {
        let a = hash_projection("a red car", MOCK_EMBEDDING_DIM);
        assert_eq!(a, hash_projection("car RED a", MOCK_EMBEDDING_DIM));
        let n: f64 = a.iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn unigram_symmetric_and_bounded(a in "[a-d ]{1,20}", b in "[a-d ]{1,20}") {
            if let (Ok(x), Ok(y)) = (unigram_similarity(&a, &b), unigram_similarity(&b, &a)) {
                prop_assert_eq!(x, y);
                prop_assert!((0.0..=1.0).contains(&x));
            }
        }
    }
}
