//! Gwet's AC2 with linear ordinal weights over the 3-point rubric.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rubric categories are 1..=3; -1 marks "cannot judge" and drops the item.
pub const CATEGORIES: [i8; 3] = [1, 2, 3];
pub const NOT_APPLICABLE: i8 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Accuracy,
    Logic,
    Clarity,
    Detail,
    Relevancy,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [Criterion::Accuracy, Criterion::Logic, Criterion::Clarity, Criterion::Detail, Criterion::Relevancy];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Accuracy => "accuracy",
            Criterion::Logic => "logic",
            Criterion::Clarity => "clarity",
            Criterion::Detail => "detail",
            Criterion::Relevancy => "relevancy",
        }
    }

    pub fn parse(s: &str) -> Option<Criterion> {
        Criterion::ALL.into_iter().find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgreementError {
    #[error("agreement needs at least 2 raters, got {0}")]
    TooFewRaters(usize),
    #[error("item {item} has {found} ratings, expected {expected}")]
    Ragged { item: usize, expected: usize, found: usize },
    #[error("item {item}, rater {rater}: rating {value} is not in {{1,2,3,-1}}")]
    OutOfRange { item: usize, rater: usize, value: i8 },
    #[error("no item has a complete set of ratings in {{1,2,3}}")]
    NoUsableItems,
}

/// Items x raters.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RatingTable {
    raters: usize,
    items: Vec<Vec<i8>>,
}

impl RatingTable {
    pub fn new(raters: usize) -> Result<Self, AgreementError> {
        if raters < 2 {
            return Err(AgreementError::TooFewRaters(raters));
        }
        Ok(RatingTable { raters, items: Vec::new() })
    }

    pub fn from_rows(raters: usize, rows: impl IntoIterator<Item = Vec<i8>>) -> Result<Self, AgreementError> {
        let mut t = RatingTable::new(raters)?;
        for r in rows {
            t.push_item(r)?;
        }
        Ok(t)
    }

    pub fn push_item(&mut self, ratings: Vec<i8>) -> Result<(), AgreementError> {
        let item = self.items.len();
        if ratings.len() != self.raters {
            return Err(AgreementError::Ragged { item, expected: self.raters, found: ratings.len() });
        }
        if let Some((rater, &value)) = ratings.iter().enumerate().find(|(_, &v)| v != NOT_APPLICABLE && !CATEGORIES.contains(&v)) {
            return Err(AgreementError::OutOfRange { item, rater, value });
        }
        self.items.push(ratings);
        Ok(())
    }

    pub fn raters(&self) -> usize {
        self.raters
    }

    pub fn items(&self) -> &[Vec<i8>] {
        &self.items
    }

    fn usable(&self) -> impl Iterator<Item = &Vec<i8>> {
        self.items.iter().filter(|r| !r.contains(&NOT_APPLICABLE))
    }

    /// Mean rating of one rater, skipping -1; None when the rater has no scores.
    pub fn rater_mean(&self, rater: usize) -> Option<f64> {
        let vals: Vec<f64> = self.items.iter().map(|r| r[rater]).filter(|&v| v != NOT_APPLICABLE).map(f64::from).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

pub fn weight(k: i8, l: i8) -> f64 {
    1.0 - f64::from((k - l).abs()) / 2.0
}

/// AC2 = (p_a - p_e) / (1 - p_e), p_e = T_w / (q(q-1)) * sum_k pi_k (1 - pi_k).
pub fn gwet_ac2(table: &RatingTable) -> Result<f64, AgreementError> {
    let q = CATEGORIES.len();
    let items: Vec<[usize; 3]> = table
        .usable()
        .map(|row| {
            let mut counts = [0usize; 3];
            for &v in row {
                counts[(v - 1) as usize] += 1;
            }
            counts
        })
        .collect();
    if items.is_empty() {
        return Err(AgreementError::NoUsableItems);
    }
    let n = items.len() as f64;
    let r = table.raters as f64;

    let mut pa = 0.0;
    let mut pi = [0.0f64; 3];
    for counts in &items {
        let mut s = 0.0;
        for k in 0..q {
            let weighted: f64 = (0..q).map(|l| weight(CATEGORIES[k], CATEGORIES[l]) * counts[l] as f64).sum();
            s += counts[k] as f64 * (weighted - 1.0);
            pi[k] += counts[k] as f64 / r;
        }
        pa += s / (r * (r - 1.0));
    }
    pa /= n;
    let tw: f64 = CATEGORIES.iter().flat_map(|&k| CATEGORIES.iter().map(move |&l| weight(k, l))).sum();
    let pe = tw / (q * (q - 1)) as f64 * pi.iter().map(|p| (p / n) * (1.0 - p / n)).sum::<f64>();
    Ok((pa - pe) / (1.0 - pe))
}
