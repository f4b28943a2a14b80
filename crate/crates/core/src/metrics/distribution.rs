//! Jensen-Shannon divergence (base 2) and Pearson correlation over aligned bins.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistributionError {
    #[error("vectors are not aligned: {0} vs {1} bins")]
    Misaligned(usize, usize),
    #[error("distribution does not sum to 1 or has negative mass")]
    NotNormalized,
    #[error("correlation needs at least 2 bins")]
    TooFewBins,
    #[error("correlation is undefined for a constant vector")]
    Constant,
}

const NORM_TOLERANCE: f64 = 1e-9;

fn check_distribution(p: &[f64]) -> Result<(), DistributionError> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| x < 0.0 || !x.is_finite()) || (sum - 1.0).abs() > NORM_TOLERANCE {
        return Err(DistributionError::NotNormalized);
    }
    Ok(())
}

/// sum p*log2(p/m), with 0*log0 = 0.
fn kl_to_mixture(p: &[f64], m: &[f64]) -> f64 {
    p.iter().zip(m).filter(|(&pi, _)| pi > 0.0).map(|(&pi, &mi)| pi * libm::log2(pi / mi)).sum()
}

/// JSD(p, q) = KL(p||m)/2 + KL(q||m)/2 with m = (p + q)/2; in [0, 1].
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64, DistributionError> {
    if p.len() != q.len() {
        return Err(DistributionError::Misaligned(p.len(), q.len()));
    }
    check_distribution(p)?;
    check_distribution(q)?;
    let m: alloc::vec::Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    let d = 0.5 * kl_to_mixture(p, &m) + 0.5 * kl_to_mixture(q, &m);
    Ok(d.clamp(0.0, 1.0))
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, DistributionError> {
    if x.len() != y.len() {
        return Err(DistributionError::Misaligned(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(DistributionError::TooFewBins);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(DistributionError::Constant);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}
