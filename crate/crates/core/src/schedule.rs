//! Stratified question-prefix schedule.
//!
//! Prefix counts are apportioned by largest remainder, then the pool is
//! shuffled with the run seed so slot `i` of the sampling plan reads prefix
//! `schedule[i]`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

/// Prefixes and proportions used by the single-step and multi-step settings.
pub const DEFAULT_PREFIXES: [&str; 5] = ["what", "is/are (pick one that fits the most)", "which", "how many", "where"];
pub const DEFAULT_PROPORTIONS: [u32; 5] = [3, 2, 1, 1, 1];

/// Fixed pool for visual-prompt runs.
pub const VIP_PREFIXES: [&str; 5] = DEFAULT_PREFIXES;
pub const VIP_PROPORTIONS: [u32; 5] = [2, 2, 2, 1, 1];

/// Prefixes refused for visual-prompt runs (whole-prefix, case-insensitive).
pub const VIP_BLOCKLIST: [&str; 2] = ["how", "why"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("{prefixes} prefixes but {proportions} proportions")]
    LengthMismatch { prefixes: usize, proportions: usize },
    #[error("prefix list is empty")]
    Empty,
    #[error("proportion for prefix {index} must be positive")]
    NonPositive { index: usize },
    #[error("prefix {0:?} is not allowed for this run")]
    Blocked(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixSchedule {
    pub prefixes: Vec<String>,
    pub proportions: Vec<u32>,
    /// Prefix index for each plan slot.
    pub schedule: Vec<usize>,
}

impl PrefixSchedule {
    pub fn len(&self) -> usize {
        self.schedule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schedule.is_empty()
    }

    pub fn prefix_at(&self, slot: usize) -> Option<&str> {
        self.schedule.get(slot).map(|&i| self.prefixes[i].as_str())
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.prefixes.len()];
        for &i in &self.schedule {
            counts[i] += 1;
        }
        counts
    }
}

/// Largest-remainder apportionment of `total` over `proportions`; ties in the
/// remainder go to the lower index.
pub fn apportion(proportions: &[u32], total: usize) -> Vec<usize> {
    let weight: u64 = proportions.iter().map(|&p| u64::from(p)).sum();
    if weight == 0 {
        return alloc::vec![0; proportions.len()];
    }
    // Exact integer arithmetic: share_i = total*p_i / weight.
    let mut counts = Vec::with_capacity(proportions.len());
    let mut remainders = Vec::with_capacity(proportions.len());
    for (i, &p) in proportions.iter().enumerate() {
        let num = total as u64 * u64::from(p);
        counts.push((num / weight) as usize);
        remainders.push((num % weight, i));
    }
    let assigned: usize = counts.iter().sum();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take(total - assigned) {
        counts[i] += 1;
    }
    counts
}

pub fn build_prefix_schedule(
    prefixes: &[String],
    proportions: &[u32],
    total: usize,
    seed: u64,
) -> Result<PrefixSchedule, ScheduleError> {
    if prefixes.len() != proportions.len() {
        return Err(ScheduleError::LengthMismatch { prefixes: prefixes.len(), proportions: proportions.len() });
    }
    if prefixes.is_empty() {
        return Err(ScheduleError::Empty);
    }
    if let Some(index) = proportions.iter().position(|&p| p == 0) {
        return Err(ScheduleError::NonPositive { index });
    }
    let counts = apportion(proportions, total);
    let mut schedule: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(i, &c)| core::iter::repeat_n(i, c))
        .collect();
    schedule.shuffle(&mut seed::rng(seed));
    Ok(PrefixSchedule { prefixes: prefixes.to_vec(), proportions: proportions.to_vec(), schedule })
}

pub fn check_blocklist(prefixes: &[String], blocklist: &[String]) -> Result<(), ScheduleError> {
    for p in prefixes {
        let norm = p.trim().to_lowercase();
        if blocklist.iter().any(|b| b.trim().to_lowercase() == norm) {
            return Err(ScheduleError::Blocked(p.to_string()));
        }
    }
    Ok(())
}

pub fn owned(prefixes: &[&str]) -> Vec<String> {
    prefixes.iter().map(|s| s.to_string()).collect()
}
