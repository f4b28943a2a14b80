//! Token-length histograms for comparing two corpora.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::text::token_count;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HistogramError {
    #[error("cannot build a length histogram from no texts")]
    Empty,
}

/// Probability mass per integer token length.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Histogram(pub BTreeMap<usize, f64>);

impl Histogram {
    pub fn get(&self, len: usize) -> f64 {
        self.0.get(&len).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.keys().copied()
    }
}

pub fn length_counts<S: AsRef<str>>(texts: &[S]) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for t in texts {
        *counts.entry(token_count(t.as_ref())).or_insert(0) += 1;
    }
    counts
}

pub fn length_histogram<S: AsRef<str>>(texts: &[S]) -> Result<Histogram, HistogramError> {
    if texts.is_empty() {
        return Err(HistogramError::Empty);
    }
    let n = texts.len() as f64;
    Ok(Histogram(length_counts(texts).into_iter().map(|(k, c)| (k, c as f64 / n)).collect()))
}

/// Both histograms as vectors over the union of their supports, zero-padded.
pub fn align(p: &Histogram, q: &Histogram) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let mut bins: Vec<usize> = p.support().chain(q.support()).collect();
    bins.sort_unstable();
    bins.dedup();
    let pv = bins.iter().map(|&b| p.get(b)).collect();
    let qv = bins.iter().map(|&b| q.get(b)).collect();
    (bins, pv, qv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting_example() {
        let h = length_histogram(&["a b", "a b", "c"]).unwrap();
        assert_eq!(h.get(1), 1.0 / 3.0);
        assert_eq!(h.get(2), 2.0 / 3.0);
        assert_eq!(h.0.len(), 2);
    }

    #[test]
    fn single_text_is_one_bin() {
        let h = length_histogram(&["one two three"]).unwrap();
        assert_eq!(h.0.into_iter().collect::<Vec<_>>(), alloc::vec![(3, 1.0)]);
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(length_histogram::<&str>(&[]), Err(HistogramError::Empty));
    }

    #[test]
    fn alignment_pads_with_zero() {
        let p = length_histogram(&["a", "a b"]).unwrap();
        let q = length_histogram(&["a b c"]).unwrap();
        let (bins, pv, qv) = align(&p, &q);
        assert_eq!(bins, [1, 2, 3]);
        assert_eq!(pv, [0.5, 0.5, 0.0]);
        assert_eq!(qv, [0.0, 0.0, 1.0]);
    }
}
