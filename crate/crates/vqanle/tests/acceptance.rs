//! Acceptance gate: one PASS/FAIL line per criterion, mock backend only.
//! Exits non-zero when any criterion fails.

mod common;
#[path = "../../core/tests/common/oracles.rs"]
mod oracles;

use std::time::{Duration, Instant};

use image::{DynamicImage, RgbImage};
use rand::Rng;
use vqanle::imaging::{annotate_bbox, encode_png};
use vqanle::runner::{run_from_config, RunOptions, DATASET_FILE, INVALID_FILE};
use vqanle_core::gsc::gsc_select_vectors;
use vqanle_core::metrics::agreement::{gwet_ac2, RatingTable};
use vqanle_core::metrics::stats::corpus_stats_fields;
use vqanle_core::metrics::validity::{validate_triplet, ValidityRules, Verdict};
use vqanle_core::metrics::{efficiency_report, jsd, pearson, rouge_l};
use vqanle_core::parse::{parse_triplet, Dialect, ParseError};
use vqanle_core::raster::AnnotationStyle;
use vqanle_core::scene::SceneGraphObject;
use vqanle_core::schedule::{build_prefix_schedule, owned};
use vqanle_core::seed::rng;
use vqanle_core::similarity::{hash_projection, MOCK_EMBEDDING_DIM};
use vqanle_core::triplet::{PipelineKind, Triplet, TripletMeta};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_time(t: Instant, limit: Duration) -> Result<(), String> {
    let e = t.elapsed();
    ensure(e < limit, format!("took {e:?}, limit {limit:?}"))
}

fn dataset_accounting() -> Check {
    let (valid, unique, expected) = (19_309usize, 15_328usize, 20_501usize);
    let texts: Vec<[String; 3]> = (0..valid)
        .map(|i| {
            let k = i % unique;
            [format!("What is object {k}?"), format!("Thing {k}"), format!("It looks like thing {k}.")]
        })
        .collect();
    let fields: Vec<[&str; 3]> = texts.iter().map(|[q, a, e]| [q.as_str(), a.as_str(), e.as_str()]).collect();
    let t = Instant::now();
    let s = corpus_stats_fields(&fields, expected).map_err(|e| e.to_string())?;
    ensure(s.unique == unique, format!("unique {} != {unique}", s.unique))?;
    ensure((s.valid_pct() - 94.2).abs() <= 0.05, format!("valid {:.4}%", s.valid_pct()))?;
    ensure((s.unique_pct() - 79.4).abs() <= 0.05, format!("unique {:.4}%", s.unique_pct()))?;
    within_time(t, Duration::from_secs(1))?;
    Ok(format!("valid {:.1}% unique {:.1}% in {:?}", s.valid_pct(), s.unique_pct(), t.elapsed()))
}

fn generation_efficiency() -> Check {
    let a = efficiency_report(1001.0, 476, Some(42.1)).map_err(|e| e.to_string())?;
    let b = efficiency_report(954.0, 450, None).map_err(|e| e.to_string())?;
    let (ta, sa, tb) = (format!("{:.2}", a.tbar), format!("{:.1}", a.speedup.unwrap_or(f64::NAN)), format!("{:.2}", b.tbar));
    ensure(ta == "2.10" && sa == "20.0" && tb == "2.12", format!("got {ta}s ({sa}x), {tb}s"))?;
    Ok(format!("{ta}s ({sa}x), {tb}s"))
}

fn gsc_oracle() -> Check {
    let mut r = rng(1);
    let words = ["red", "cow", "bench", "near", "the", "fence", "dog", "runs", "blue", "kite"];
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let k = r.random_range(2..=5);
        let vectors: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let n = r.random_range(1..8);
                let text: Vec<&str> = (0..n).map(|_| words[r.random_range(0..words.len())]).collect();
                hash_projection(&text.join(" "), MOCK_EMBEDDING_DIM)
            })
            .collect();
        let got = gsc_select_vectors(&vectors).map_err(|e| e.to_string())?;
        let (winner, scores) = oracles::gsc_bruteforce(&vectors);
        ensure(got.winner == winner, format!("case {case}: winner {} vs {winner}", got.winner))?;
        for (a, b) in got.scores.iter().zip(&scores) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-12, format!("max score error {worst:e}"))?;
    Ok(format!("1000 sets, max score error {worst:e}"))
}

fn metric_oracles() -> Check {
    let mut r = rng(2);
    fn hist(r: &mut impl Rng, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| if r.random_bool(0.3) { 0.0 } else { r.random_range(0.0..1.0) }).collect();
        let s: f64 = raw.iter().sum();
        if s == 0.0 {
            let mut v = vec![0.0; n];
            v[0] = 1.0;
            v
        } else {
            raw.iter().map(|x| x / s).collect()
        }
    }
    let (mut jsd_err, mut pearson_err) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let n = r.random_range(2..20);
        let (p, q) = (hist(&mut r, n), hist(&mut r, n));
        jsd_err = jsd_err.max((jsd(&p, &q).map_err(|e| e.to_string())? - oracles::jsd_direct(&p, &q)).abs());
        ensure(jsd(&p, &p) == Ok(0.0), "jsd(p, p) != 0")?;
        let x: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
        pearson_err = pearson_err.max((pearson(&x, &y).map_err(|e| e.to_string())? - oracles::pearson_textbook(&x, &y)).abs());
    }
    ensure(jsd_err <= 1e-9, format!("jsd error {jsd_err:e}"))?;
    ensure(pearson_err <= 1e-9, format!("pearson error {pearson_err:e}"))?;
    ensure(jsd(&[1.0, 0.0, 0.0], &[0.0, 0.5, 0.5]) == Ok(1.0), "disjoint support is not exactly 1")?;
    fn text(r: &mut impl Rng) -> String {
        let words = ["a", "b", "c", "d", "the", "cat"];
        (0..r.random_range(1..=12)).map(|_| words[r.random_range(0..words.len())]).collect::<Vec<_>>().join(" ")
    }
    for _ in 0..500 {
        let (c, f) = (text(&mut r), text(&mut r));
        let got = rouge_l(&c, &f).map_err(|e| e.to_string())?;
        let (p, rc, f1) = oracles::rouge_l_bruteforce(&c, &f);
        ensure(
            (got.precision - p).abs() < 1e-12 && (got.recall - rc).abs() < 1e-12 && (got.f1 - f1).abs() < 1e-12,
            format!("rouge-l mismatch on {c:?} / {f:?}"),
        )?;
    }
    Ok(format!("jsd err {jsd_err:e}, pearson err {pearson_err:e}, rouge-l exact on 500 pairs"))
}

fn gwet() -> Check {
    let rows = oracles::read_gwet_fixture(include_str!("../../core/tests/fixtures/gwet_3x10.csv"));
    let v = gwet_ac2(&RatingTable::from_rows(3, rows).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure((v - oracles::GWET_FIXTURE_AC2).abs() <= 1e-6, format!("fixture {v} vs {}", oracles::GWET_FIXTURE_AC2))?;
    let perfect = RatingTable::from_rows(3, vec![vec![1, 1, 1], vec![2, 2, 2], vec![3, 3, 3]]).map_err(|e| e.to_string())?;
    ensure(gwet_ac2(&perfect) == Ok(1.0), "perfect agreement != 1.0")?;
    let mut r = rng(11);
    for case in 0..100 {
        let raters = r.random_range(2..6usize);
        let rows: Vec<Vec<i8>> = (0..r.random_range(2..15)).map(|_| (0..raters).map(|_| r.random_range(1..=3)).collect()).collect();
        let base = gwet_ac2(&RatingTable::from_rows(raters, rows.clone()).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let rev: Vec<Vec<i8>> = rows.iter().map(|row| row.iter().rev().copied().collect()).collect();
        let rot: Vec<Vec<i8>> = rows.iter().map(|row| {
            let mut x = row.clone();
            x.rotate_left(1);
            x
        }).collect();
        for t in [rev, rot] {
            let other = gwet_ac2(&RatingTable::from_rows(raters, t).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            ensure((base - other).abs() < 1e-12, format!("table {case}: {base} vs {other}"))?;
        }
    }
    Ok(format!("fixture AC2 {v:.6}, perfect 1.0, 100 permuted tables invariant"))
}

fn end_to_end() -> Check {
    let t = Instant::now();
    let mut summary = Vec::new();
    for p in common::PIPELINES {
        let cfg = common::fixture(&format!("e2e/{p}.yaml"));
        let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
        let mut manifests = Vec::new();
        for d in &dirs {
            let s = run_from_config(&cfg, &RunOptions { fresh: true, output_dir: Some(d.path().into()) }).map_err(|e| format!("{p}: {e}"))?;
            manifests.push(s.manifest);
        }
        for f in [DATASET_FILE, INVALID_FILE] {
            let read = |i: usize| std::fs::read(dirs[i].path().join(f)).map_err(|e| e.to_string());
            ensure(read(0)? == read(1)?, format!("{p}: {f} differs between runs"))?;
        }
        let m = &manifests[0];
        let got: Vec<(usize, String, String)> = m
            .ledger
            .iter()
            .filter(|e| e.status != "valid")
            .map(|e| (e.index, e.status.clone(), e.reason.map(|r| r.as_str().to_string()).unwrap_or_default()))
            .collect();
        let want: Vec<(usize, String, String)> = common::expected_ledger(p).into_iter().map(|(i, s, r)| (i, s.into(), r.into())).collect();
        ensure(got == want, format!("{p}: ledger {got:?}"))?;
        ensure(m.totals.valid + m.totals.invalid + m.totals.skipped == m.plan_size, format!("{p}: totals do not add up"))?;
        summary.push(format!("{p} {}/{}/{}", m.totals.valid, m.totals.invalid, m.totals.skipped));
    }
    within_time(t, Duration::from_secs(10))?;
    Ok(format!("{} (valid/invalid/skipped), byte-identical, {:?}", summary.join(", "), t.elapsed()))
}

fn classify(raw: &str, pipeline: PipelineKind) -> &'static str {
    let p = match parse_triplet(raw, Dialect::Either) {
        Ok(p) => p,
        Err(ParseError::TokenFormat(_)) => return "TokenFormatError",
        Err(ParseError::Unfinished(_)) => return "UnfinishedGeneration",
    };
    let meta = TripletMeta {
        image_id: "x".into(),
        pipeline,
        prefix: "what".into(),
        object: None,
        model: "m".into(),
        seed: 0,
        raw: vec![],
        rerank: None,
    };
    let t = Triplet { question: p.question, answer: p.answer, explanation: p.explanation, meta };
    match validate_triplet(&t, &ValidityRules::default()) {
        Verdict::Valid => "valid",
        Verdict::Invalid { reason, .. } => reason.as_str(),
    }
}

fn parser_corpus() -> Check {
    #[derive(serde::Deserialize)]
    struct Case {
        name: String,
        pipeline: PipelineKind,
        raw: String,
        expect: String,
    }
    let cases: Vec<Case> = serde_json::from_str(include_str!("../../core/tests/fixtures/parser_corpus.json")).map_err(|e| e.to_string())?;
    for c in &cases {
        let got = classify(&c.raw, c.pipeline);
        ensure(got == c.expect, format!("{}: {got}, labeled {}", c.name, c.expect))?;
    }
    let reason = parse_triplet("Question: Is it red?\nShort Answer: Yes\nReason: It is red.", Dialect::Either);
    let reasoned = parse_triplet("Question: Is it red?\nShort Answer: Yes\nReasoned Answer: It is red.", Dialect::Either);
    ensure(reason.is_ok() && reason == reasoned, "dialects disagree")?;
    Ok(format!("{} labeled examples, both dialects", cases.len()))
}

fn prefix_schedule() -> Check {
    let pool = owned(&["what", "is/are", "which", "how many", "where"]);
    let mut out = Vec::new();
    for (total, want) in [(8usize, Some(vec![3, 2, 1, 1, 1])), (16, Some(vec![6, 4, 2, 2, 2])), (501, None)] {
        let mut seen = None;
        for seed in 0..20u64 {
            let s = build_prefix_schedule(&pool, &[3, 2, 1, 1, 1], total, seed).map_err(|e| e.to_string())?;
            let c = s.counts();
            ensure(seen.as_ref().is_none_or(|p| *p == c), format!("total {total}: counts depend on the seed"))?;
            seen = Some(c);
        }
        let c = seen.unwrap_or_default();
        ensure(c.iter().sum::<usize>() == total, format!("total {total}: sum {}", c.iter().sum::<usize>()))?;
        if let Some(w) = want {
            ensure(c == w, format!("total {total}: {c:?}"))?;
        }
        out.push(format!("{total}->{c:?}"));
    }
    Ok(out.join(" "))
}

fn annotator() -> Check {
    let mut r = rng(5);
    for case in 0..50 {
        let (w, h) = (r.random_range(8..64u32), r.random_range(8..64u32));
        let src = RgbImage::from_fn(w, h, |_, _| image::Rgb([r.random_range(0..200), r.random(), r.random()]));
        let png = encode_png(&DynamicImage::ImageRgb8(src.clone())).map_err(|e| e.to_string())?;
        let obj = SceneGraphObject {
            name: "o".into(),
            x: r.random_range(0..w),
            y: r.random_range(0..h),
            w: r.random_range(1..w + 8),
            h: r.random_range(1..h + 8),
        };
        let style = AnnotationStyle { color: [255, 0, 0], thickness: r.random_range(1..5) };
        let out = image::load_from_memory(&annotate_bbox(&png, &obj, &style).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?
            .to_rgb8();
        let rect = (obj.x, obj.y, (obj.x + obj.w).min(w) - 1, (obj.y + obj.h).min(h) - 1);
        for (x, y, px) in out.enumerate_pixels() {
            let changed = px != src.get_pixel(x, y);
            ensure(changed == oracles::in_band(x, y, rect, style.thickness), format!("case {case}: pixel ({x},{y})"))?;
        }
    }
    Ok("50 random boxes, diff mask equals the band".into())
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let checks: [Criterion; 9] = [
        ("dataset-accounting", dataset_accounting),
        ("generation-efficiency", generation_efficiency),
        ("gsc-oracle", gsc_oracle),
        ("metric-oracles", metric_oracles),
        ("gwet-ac2", gwet),
        ("end-to-end-determinism", end_to_end),
        ("parser-corpus", parser_corpus),
        ("prefix-schedule", prefix_schedule),
        ("annotator", annotator),
    ];
    let mut failed = 0;
    for (name, f) in checks {
        match f() {
            Ok(msg) => println!("PASS {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
