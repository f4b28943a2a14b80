mod common;

use common::oracles::{gsc_bruteforce, jsd_direct, pearson_textbook, rouge_l_bruteforce};
use rand::Rng;
use vqanle_core::gsc::gsc_select_vectors;
use vqanle_core::metrics::{jsd, pearson, rouge_l};
use vqanle_core::seed::rng;
use vqanle_core::similarity::{hash_projection, MOCK_EMBEDDING_DIM};

const WORDS: [&str; 12] = ["red", "cow", "bench", "near", "the", "a", "fence", "dog", "runs", "sits", "blue", "kite"];

fn random_text(r: &mut impl Rng, max: usize) -> String {
    let n = r.random_range(1..=max);
    (0..n).map(|_| WORDS[r.random_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

#[test]
fn gsc_matches_bruteforce_on_1000_sets() {
    let mut r = rng(1);
    for case in 0..1000 {
        let k = r.random_range(2..=5);
        let vectors: Vec<Vec<f64>> = if case % 2 == 0 {
            (0..k).map(|_| hash_projection(&random_text(&mut r, 8), MOCK_EMBEDDING_DIM)).collect()
        } else {
            let dim = r.random_range(2..16);
            (0..k).map(|_| (0..dim).map(|_| r.random_range(-1.0..1.0)).collect()).collect()
        };
        let got = gsc_select_vectors(&vectors).unwrap();
        let (winner, scores) = gsc_bruteforce(&vectors);
        assert_eq!(got.winner, winner, "case {case}");
        for (a, b) in got.scores.iter().zip(&scores) {
            assert!((a - b).abs() <= 1e-12, "case {case}: {a} vs {b}");
        }
    }
}

fn random_hist(r: &mut impl Rng, n: usize, sparse: bool) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| if sparse && r.random_bool(0.3) { 0.0 } else { r.random_range(0.0..1.0) }).collect();
    let s: f64 = raw.iter().sum();
    if s == 0.0 {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        return v;
    }
    raw.iter().map(|x| x / s).collect()
}

#[test]
fn jsd_matches_direct_formula() {
    let mut r = rng(2);
    for _ in 0..1000 {
        let n = r.random_range(1..20);
        let (p, q) = (random_hist(&mut r, n, true), random_hist(&mut r, n, true));
        assert!((jsd(&p, &q).unwrap() - jsd_direct(&p, &q)).abs() < 1e-9);
        assert_eq!(jsd(&p, &p).unwrap(), 0.0);
    }
    assert_eq!(jsd(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
    assert_eq!(jsd(&[0.5, 0.5, 0.0, 0.0], &[0.0, 0.0, 0.25, 0.75]).unwrap(), 1.0);
    assert!((jsd(&[0.5, 0.5], &[1.0, 0.0]).unwrap() - 0.3113).abs() < 1e-4);
}

#[test]
fn pearson_matches_textbook() {
    let mut r = rng(3);
    for _ in 0..1000 {
        let n = r.random_range(2..20);
        let x: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
        assert!((pearson(&x, &y).unwrap() - pearson_textbook(&x, &y)).abs() < 1e-9);
    }
    assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn rouge_l_matches_lcs_bruteforce() {
    let mut r = rng(4);
    for _ in 0..500 {
        let (c, f) = (random_text(&mut r, 12), random_text(&mut r, 12));
        let got = rouge_l(&c, &f).unwrap();
        let (p, rc, f1) = rouge_l_bruteforce(&c, &f);
        assert!((got.precision - p).abs() < 1e-12 && (got.recall - rc).abs() < 1e-12 && (got.f1 - f1).abs() < 1e-12, "{c:?} / {f:?}");
    }
    // LCS = 2 by hand; the shorter side gets the full ratio
    let s = rouge_l("the cat", "the cat sat").unwrap();
    assert_eq!(s.precision, 1.0);
    assert!((s.recall - 2.0 / 3.0).abs() < 1e-15 && (s.f1 - 0.8).abs() < 1e-15);
    let swapped = rouge_l("the cat sat", "the cat").unwrap();
    assert_eq!((swapped.precision, swapped.recall), (s.recall, s.precision));
}
