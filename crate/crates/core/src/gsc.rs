//! Generalized self-consistency re-ranking.
//!
//! Each of the K candidates is scored by its mean similarity to the other
//! K-1 candidates; the highest score wins, lowest index on ties.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{Embedder, GatewayError};
use crate::similarity::{embedding_similarity, unigram_similarity, SimilarityError, SimilarityMode};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub candidates: Vec<String>,
    /// Parallel to `candidates`: which explanation prompt produced each.
    pub sources: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GscOutcome {
    pub winner: usize,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GscError {
    #[error("re-ranking needs at least 2 candidates, got {0}")]
    TooFewCandidates(usize),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Embedding(#[from] GatewayError),
}

/// Scores from a symmetric pairwise similarity; `sim` is called once per unordered pair.
pub fn gsc_scores<E>(k: usize, mut sim: impl FnMut(usize, usize) -> Result<f64, E>) -> Result<Vec<f64>, E> {
    let mut sums = alloc::vec![0.0f64; k];
    for i in 0..k {
        for j in i + 1..k {
            let s = sim(i, j)?;
            sums[i] += s;
            sums[j] += s;
        }
    }
    let denom = (k.saturating_sub(1)).max(1) as f64;
    Ok(sums.into_iter().map(|s| s / denom).collect())
}

/// First index holding the maximum score.
pub fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Re-rank precomputed embeddings with clamped cosine similarity.
pub fn gsc_select_vectors(vectors: &[Vec<f64>]) -> Result<GscOutcome, GscError> {
    if vectors.len() < 2 {
        return Err(GscError::TooFewCandidates(vectors.len()));
    }
    let scores = gsc_scores(vectors.len(), |i, j| embedding_similarity(&vectors[i], &vectors[j]))?;
    Ok(GscOutcome { winner: argmax_first(&scores), scores })
}

/// Re-rank a candidate set. `embedder` is required for embedding mode.
pub fn gsc_select(set: &CandidateSet, mode: SimilarityMode, embedder: Option<&dyn Embedder>) -> Result<GscOutcome, GscError> {
    let k = set.candidates.len();
    if k < 2 {
        return Err(GscError::TooFewCandidates(k));
    }
    match (mode, embedder) {
        (SimilarityMode::Embedding, Some(e)) => {
            let vectors = set
                .candidates
                .iter()
                .map(|c| {
                    if c.trim().is_empty() {
                        return Err(GscError::Similarity(SimilarityError::EmptyInput));
                    }
                    Ok(e.embed(c)?)
                })
                .collect::<Result<Vec<_>, GscError>>()?;
            gsc_select_vectors(&vectors)
        }
        (SimilarityMode::Embedding, None) => Err(GscError::Embedding(GatewayError::Config(
            "embedding similarity selected but no embedding provider configured".into(),
        ))),
        (SimilarityMode::Unigram, _) => {
            let c = &set.candidates;
            let scores = gsc_scores(k, |i, j| unigram_similarity(&c[i], &c[j]))?;
            Ok(GscOutcome { winner: argmax_first(&scores), scores })
        }
    }
}
