//! Brute-force reference implementations, written independently of the
//! library code they check. Shared by the integration tests and the
//! acceptance runner.

#![allow(dead_code)]

/// Plain cosine, clamped to [0, 1]; zero vectors give 0.
pub fn clamped_cosine(u: &[f64], v: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for i in 0..u.len() {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu.sqrt() * nv.sqrt())).clamp(0.0, 1.0)
}

/// Mean similarity of each candidate to every other one; winner is the first maximum.
pub fn gsc_bruteforce(vectors: &[Vec<f64>]) -> (usize, Vec<f64>) {
    let k = vectors.len();
    let scores: Vec<f64> = (0..k)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..k {
                if j != i {
                    s += clamped_cosine(&vectors[i], &vectors[j]);
                }
            }
            s / (k - 1) as f64
        })
        .collect();
    let mut winner = 0;
    for i in 1..k {
        if scores[i] > scores[winner] {
            winner = i;
        }
    }
    (winner, scores)
}

/// Jensen-Shannon divergence, base 2, straight from the definition.
pub fn jsd_direct(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for i in 0..p.len() {
        let m = (p[i] + q[i]) / 2.0;
        if p[i] > 0.0 {
            d += 0.5 * p[i] * (p[i] / m).log2();
        }
        if q[i] > 0.0 {
            d += 0.5 * q[i] * (q[i] / m).log2();
        }
    }
    d
}

/// Two-pass sample Pearson correlation.
pub fn pearson_textbook(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx).powi(2);
        syy += (y[i] - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

fn is_subsequence(needle: &[&str], hay: &[&str]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}

/// LCS length by enumerating every subsequence of `a` (|a| <= ~16).
pub fn lcs_bruteforce(a: &[&str], b: &[&str]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let len = mask.count_ones() as usize;
        if len <= best {
            continue;
        }
        let sub: Vec<&str> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| a[i]).collect();
        if is_subsequence(&sub, b) {
            best = len;
        }
    }
    best
}

/// (precision, recall, f1) of ROUGE-L over lowercased whitespace tokens.
pub fn rouge_l_bruteforce(candidate: &str, reference: &str) -> (f64, f64, f64) {
    let c: Vec<String> = candidate.split_whitespace().map(str::to_lowercase).collect();
    let r: Vec<String> = reference.split_whitespace().map(str::to_lowercase).collect();
    let cr: Vec<&str> = c.iter().map(String::as_str).collect();
    let rr: Vec<&str> = r.iter().map(String::as_str).collect();
    let l = lcs_bruteforce(&cr, &rr) as f64;
    let p = l / cr.len() as f64;
    let rc = l / rr.len() as f64;
    let f = if l == 0.0 { 0.0 } else { 2.0 * p * rc / (p + rc) };
    (p, rc, f)
}

/// Is (x, y) on the outline band of inclusive rect (x0, y0)-(x1, y1)?
pub fn in_band(x: u32, y: u32, rect: (u32, u32, u32, u32), t: u32) -> bool {
    let (x0, y0, x1, y1) = rect;
    if x < x0 || x > x1 || y < y0 || y > y1 {
        return false;
    }
    let d = (x - x0).min(x1 - x).min(y - y0).min(y1 - y);
    d < t
}

/// The shipped 3-rater x 10-item table, computed by hand with exact fractions:
/// 9 usable items, p_a = 20/27, p_e = 1150/2187, AC2 = 470/1037.
pub const GWET_FIXTURE_AC2: f64 = 470.0 / 1037.0;

pub fn read_gwet_fixture(csv_text: &str) -> Vec<Vec<i8>> {
    csv_text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').skip(1).map(|v| v.trim().parse().unwrap()).collect())
        .collect()
}
