//! Generation time per valid triplet and speedup over a baseline.

use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub total_seconds: f64,
    pub valid: usize,
    /// Seconds per valid triplet.
    pub tbar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_tbar: Option<f64>,
    /// baseline t̄ / this t̄.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speedup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EfficiencyError {
    #[error("no valid triplets; time per triplet is undefined")]
    NoValid,
    #[error("invalid duration: {0}")]
    Duration(String),
}

pub fn efficiency_report(total_seconds: f64, valid: usize, baseline_tbar: Option<f64>) -> Result<EfficiencyReport, EfficiencyError> {
    if valid == 0 {
        return Err(EfficiencyError::NoValid);
    }
    if !(total_seconds.is_finite() && total_seconds >= 0.0) {
        return Err(EfficiencyError::Duration(format!("{total_seconds}")));
    }
    let tbar = total_seconds / valid as f64;
    let speedup = match baseline_tbar {
        Some(b) if tbar > 0.0 => Some(b / tbar),
        _ => None,
    };
    Ok(EfficiencyReport { total_seconds, valid, tbar, baseline_tbar, speedup })
}

/// "16m 41s" style; hours are shown only when non-zero.
pub fn format_duration(seconds: u64) -> String {
    let (h, m, s) = (seconds / 3600, (seconds / 60) % 60, seconds % 60);
    if h > 0 {
        format!("{h}h {m}m {s}s")
    } else {
        format!("{m}m {s}s")
    }
}

/// Accepts "16m 41s", "1h 2m", "95s", "95".
pub fn parse_duration(text: &str) -> Result<u64, EfficiencyError> {
    let bad = || EfficiencyError::Duration(text.into());
    let text = text.trim();
    if text.is_empty() {
        return Err(bad());
    }
    if let Ok(n) = text.parse::<u64>() {
        return Ok(n);
    }
    let mut total = 0u64;
    for part in text.split_whitespace() {
        let (num, unit) = part.split_at(part.find(|c: char| !c.is_ascii_digit()).ok_or_else(bad)?);
        let n: u64 = num.parse().map_err(|_| bad())?;
        let mult = match unit {
            "h" => 3600,
            "m" => 60,
            "s" => 1,
            _ => return Err(bad()),
        };
        total += n * mult;
    }
    Ok(total)
}
