//! ROUGE-L and ROUGE-1 over lowercased whitespace tokens.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    fn from_overlap(overlap: usize, candidate_len: usize, reference_len: usize) -> Self {
        let precision = overlap as f64 / candidate_len as f64;
        let recall = overlap as f64 / reference_len as f64;
        let f1 = if overlap == 0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        RougeScore { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RougeError {
    #[error("{0} text has no tokens")]
    Empty(&'static str),
}

fn tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(|t| t.to_lowercase()).collect()
}

fn checked(candidate: &str, reference: &str) -> Result<(Vec<String>, Vec<String>), RougeError> {
    let c = tokens(candidate);
    let r = tokens(reference);
    if c.is_empty() {
        return Err(RougeError::Empty("candidate"));
    }
    if r.is_empty() {
        return Err(RougeError::Empty("reference"));
    }
    Ok((c, r))
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l(candidate: &str, reference: &str) -> Result<RougeScore, RougeError> {
    let (c, r) = checked(candidate, reference)?;
    Ok(RougeScore::from_overlap(lcs_len(&c, &r), c.len(), r.len()))
}

/// Clipped unigram overlap.
pub fn rouge_1(candidate: &str, reference: &str) -> Result<RougeScore, RougeError> {
    let (c, r) = checked(candidate, reference)?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &r {
        *counts.entry(t).or_insert(0) += 1;
    }
    let mut overlap = 0;
    for t in &c {
        if let Some(n) = counts.get_mut(t.as_str()) {
            if *n > 0 {
                *n -= 1;
                overlap += 1;
            }
        }
    }
    Ok(RougeScore::from_overlap(overlap, c.len(), r.len()))
}
