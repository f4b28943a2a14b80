//! Corpus statistics: vocabulary size, average sentence length, validity and
//! uniqueness rates.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dedup::dedup_by_fields;
use super::text::clean;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComponentStats {
    /// Distinct cleaned tokens across the corpus.
    pub vocabulary: usize,
    /// Mean cleaned token count per field; 0 for an empty corpus.
    pub avg_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub question: ComponentStats,
    pub answer: ComponentStats,
    pub explanation: ComponentStats,
    pub valid: usize,
    pub unique: usize,
    pub expected: usize,
    /// Invalid slots when known; lets `resolved_valid_pct` use valid + invalid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invalid: Option<usize>,
}

impl CorpusStats {
    /// valid / expected, in percent.
    pub fn valid_pct(&self) -> f64 {
        pct(self.valid, self.expected)
    }

    /// valid / (valid + invalid), in percent.
    pub fn resolved_valid_pct(&self) -> Option<f64> {
        self.invalid.map(|inv| pct(self.valid, self.valid + inv))
    }

    /// unique / valid, in percent.
    pub fn unique_pct(&self) -> f64 {
        pct(self.unique, self.valid)
    }
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64 * 100.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("expected count {expected} is smaller than the {valid} valid triplets")]
    ExpectedTooSmall { expected: usize, valid: usize },
}

fn component(texts: impl Iterator<Item = impl AsRef<str>>) -> ComponentStats {
    let mut vocab: BTreeSet<String> = BTreeSet::new();
    let mut tokens = 0usize;
    let mut n = 0usize;
    for t in texts {
        let cleaned = clean(t.as_ref());
        for tok in cleaned.split_whitespace() {
            tokens += 1;
            if !vocab.contains(tok) {
                vocab.insert(tok.into());
            }
        }
        n += 1;
    }
    ComponentStats {
        vocabulary: vocab.len(),
        avg_length: if n == 0 { 0.0 } else { tokens as f64 / n as f64 },
    }
}

/// Statistics over valid triplets given as (q, a, e) field triples.
pub fn corpus_stats_fields(fields: &[[&str; 3]], expected: usize) -> Result<CorpusStats, StatsError> {
    if expected < fields.len() {
        return Err(StatsError::ExpectedTooSmall { expected, valid: fields.len() });
    }
    let (unique, _) = dedup_by_fields(fields.to_vec(), |f| *f);
    Ok(CorpusStats {
        question: component(fields.iter().map(|f| f[0])),
        answer: component(fields.iter().map(|f| f[1])),
        explanation: component(fields.iter().map(|f| f[2])),
        valid: fields.len(),
        unique: unique.len(),
        expected,
        invalid: None,
    })
}

pub fn corpus_stats(triplets: &[crate::triplet::Triplet], expected: usize) -> Result<CorpusStats, StatsError> {
    let fields: Vec<[&str; 3]> = triplets.iter().map(|t| t.fields()).collect();
    corpus_stats_fields(&fields, expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_tokenized_example() {
        let s = corpus_stats_fields(&[["The cat, the cat.", "x", "y"]], 1).unwrap();
        assert_eq!(s.question.vocabulary, 2);
        assert_eq!(s.question.avg_length, 4.0);
    }

    #[test]
    fn empty_corpus_reports_zero_length() {
        let s = corpus_stats_fields(&[], 0).unwrap();
        assert_eq!(s.explanation, ComponentStats { vocabulary: 0, avg_length: 0.0 });
        assert_eq!(s.valid_pct(), 0.0);
    }

    #[test]
    fn expected_must_cover_valid() {
        let err = corpus_stats_fields(&[["a?", "b", "c."], ["d?", "e", "f."]], 1).unwrap_err();
        assert_eq!(err, StatsError::ExpectedTooSmall { expected: 1, valid: 2 });
    }

    #[test]
    fn percentages() {
        let s = CorpusStats {
            question: Default::default(),
            answer: Default::default(),
            explanation: Default::default(),
            valid: 19_309,
            unique: 15_328,
            expected: 20_501,
            invalid: Some(1_192),
        };
        assert!((s.valid_pct() - 94.2).abs() < 0.05);
        assert!((s.unique_pct() - 79.4).abs() < 0.05);
        assert_eq!(s.resolved_valid_pct(), Some(s.valid_pct()));
    }
}
