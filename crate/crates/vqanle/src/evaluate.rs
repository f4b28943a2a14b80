//! Dataset evaluation: corpus statistics, length-distribution similarity
//! against a reference corpus, ROUGE between (q, a) and e, and efficiency.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use vqanle_core::metrics::distribution::DistributionError;
use vqanle_core::metrics::histogram::{align, HistogramError};
use vqanle_core::metrics::stats::{corpus_stats_fields, StatsError};
use vqanle_core::metrics::{efficiency_report, jsd, length_histogram, pearson, rouge_1, rouge_l, CorpusStats, EfficiencyReport};
use vqanle_core::triplet::SlotRecord;

use crate::dataset::{read_jsonl, DatasetError};
use crate::runner::{read_manifest, RunManifest};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{field}: {source}")]
    Histogram { field: &'static str, source: HistogramError },
    #[error("{field}: {source}")]
    Distribution { field: &'static str, source: DistributionError },
    #[error("external scores {path}: {message}")]
    External { path: PathBuf, message: String },
}

/// A line of a dataset or reference file: a slot record from `generate`, or
/// a bare triplet from any other source.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum TextLine {
    Slot(Box<SlotRecord>),
    Plain { question: String, answer: String, explanation: String },
}

/// Valid (q, a, e) triples of a JSONL file, in file order. Invalid and
/// skipped slot records are ignored.
pub fn read_fields(path: &Path) -> Result<Vec<[String; 3]>, DatasetError> {
    let lines: Vec<TextLine> = read_jsonl(path)?;
    Ok(lines
        .into_iter()
        .filter_map(|l| match l {
            TextLine::Slot(r) => r.outcome.triplet().map(|t| [t.question.clone(), t.answer.clone(), t.explanation.clone()]),
            TextLine::Plain { question, answer, explanation } => Some([question, answer, explanation]),
        })
        .collect())
}

fn borrowed(fields: &[[String; 3]]) -> Vec<[&str; 3]> {
    fields.iter().map(|[q, a, e]| [q.as_str(), a.as_str(), e.as_str()]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentSimilarity {
    pub jsd: f64,
    /// Undefined when either aligned vector is constant or there is one bin.
    pub pearson: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub question: ComponentSimilarity,
    pub answer: ComponentSimilarity,
    pub explanation: ComponentSimilarity,
    pub avg_jsd: f64,
    /// Mean over the components where Pearson is defined.
    pub avg_pearson: Option<f64>,
}

const FIELDS: [&str; 3] = ["question", "answer", "explanation"];

pub fn component_similarity(field: &'static str, ours: &[&str], reference: &[&str]) -> Result<ComponentSimilarity, EvalError> {
    let hist = |t: &[&str]| length_histogram(t).map_err(|source| EvalError::Histogram { field, source });
    let (p, q) = (hist(ours)?, hist(reference)?);
    let (_, pv, qv) = align(&p, &q);
    let d = jsd(&pv, &qv).map_err(|source| EvalError::Distribution { field, source })?;
    let r = match pearson(&pv, &qv) {
        Ok(r) => Some(r),
        Err(DistributionError::Constant | DistributionError::TooFewBins) => None,
        Err(source) => return Err(EvalError::Distribution { field, source }),
    };
    Ok(ComponentSimilarity { jsd: d, pearson: r })
}

pub fn similarity_report(ours: &[[&str; 3]], reference: &[[&str; 3]]) -> Result<SimilarityReport, EvalError> {
    let mut comps = Vec::with_capacity(3);
    for (i, field) in FIELDS.into_iter().enumerate() {
        let a: Vec<&str> = ours.iter().map(|f| f[i]).collect();
        let b: Vec<&str> = reference.iter().map(|f| f[i]).collect();
        comps.push(component_similarity(field, &a, &b)?);
    }
    let avg_jsd = comps.iter().map(|c| c.jsd).sum::<f64>() / 3.0;
    let defined: Vec<f64> = comps.iter().filter_map(|c| c.pearson).collect();
    let avg_pearson = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(SimilarityReport { question: comps[0], answer: comps[1], explanation: comps[2], avg_jsd, avg_pearson })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeSummary {
    /// Mean ROUGE-L F1 of e against "q a".
    pub rouge_l: f64,
    pub rouge_1: f64,
    /// Triplets counted; ones with an empty side are skipped.
    pub scored: usize,
}

pub fn rouge_summary(fields: &[[&str; 3]]) -> Option<RougeSummary> {
    let (mut l, mut one, mut n) = (0.0, 0.0, 0usize);
    for [q, a, e] in fields {
        let reference = format!("{q} {a}");
        if let (Ok(x), Ok(y)) = (rouge_l(e, &reference), rouge_1(e, &reference)) {
            l += x.f1;
            one += y.f1;
            n += 1;
        }
    }
    (n > 0).then(|| RougeSummary { rouge_l: l / n as f64, rouge_1: one / n as f64, scored: n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub stats: CorpusStats,
    pub valid_pct: f64,
    pub unique_pct: f64,
    /// valid / (valid + invalid), when the run ledger is available.
    pub resolved_valid_pct: Option<f64>,
    pub efficiency: Option<EfficiencyReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: PathBuf,
    pub reference: PathBuf,
    #[serde(flatten)]
    pub stats: StatsReport,
    pub similarity: SimilarityReport,
    pub rouge: Option<RougeSummary>,
    /// Scores supplied by an external scorer, passed through unchanged.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub external: BTreeMap<String, f64>,
}

/// The manifest beside a dataset file, if one was written by `generate`.
pub fn sibling_manifest(dataset: &Path) -> Option<RunManifest> {
    read_manifest(dataset.parent().unwrap_or(Path::new(".")))
}

pub fn stats_report(fields: &[[&str; 3]], manifest: Option<&RunManifest>) -> Result<StatsReport, EvalError> {
    let expected = manifest.map(|m| m.expected.max(fields.len())).unwrap_or(fields.len());
    let mut stats = corpus_stats_fields(fields, expected)?;
    stats.invalid = manifest.map(|m| m.totals.invalid);
    let efficiency = manifest.and_then(|m| efficiency_report(m.t_seconds, stats.valid, m.config.baseline_tbar).ok());
    Ok(StatsReport {
        valid_pct: stats.valid_pct(),
        unique_pct: stats.unique_pct(),
        resolved_valid_pct: stats.resolved_valid_pct(),
        stats,
        efficiency,
    })
}

pub fn stats_file(dataset: &Path) -> Result<StatsReport, EvalError> {
    let fields = read_fields(dataset)?;
    stats_report(&borrowed(&fields), sibling_manifest(dataset).as_ref())
}

/// External scores: a JSON object of metric name to number.
pub fn read_external(path: &Path) -> Result<BTreeMap<String, f64>, EvalError> {
    let err = |message: String| EvalError::External { path: path.into(), message };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| err(e.to_string()))
}

pub fn evaluate(dataset: &Path, reference: &Path, external: Option<&Path>) -> Result<EvaluationReport, EvalError> {
    let ours = read_fields(dataset)?;
    let theirs = read_fields(reference)?;
    let (ours_b, theirs_b) = (borrowed(&ours), borrowed(&theirs));
    Ok(EvaluationReport {
        dataset: dataset.into(),
        reference: reference.into(),
        stats: stats_report(&ours_b, sibling_manifest(dataset).as_ref())?,
        similarity: similarity_report(&ours_b, &theirs_b)?,
        rouge: rouge_summary(&ours_b),
        external: external.map(read_external).transpose()?.unwrap_or_default(),
    })
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_else(|| "n/a".into())
}

/// Corpus statistics in the layout of a dataset-statistics table.
pub fn render_stats(r: &StatsReport) -> String {
    let s = &r.stats;
    let mut out = String::new();
    let _ = writeln!(out, "{:<12} {:>8} {:>8} {:>8}", "", "q", "a", "e");
    let _ = writeln!(out, "{:<12} {:>8} {:>8} {:>8}", "vocab", s.question.vocabulary, s.answer.vocabulary, s.explanation.vocabulary);
    let _ = writeln!(
        out,
        "{:<12} {:>8.2} {:>8.2} {:>8.2}",
        "avg length", s.question.avg_length, s.answer.avg_length, s.explanation.avg_length
    );
    let _ = writeln!(out, "valid     {} / {} ({:.1}%)", s.valid, s.expected, r.valid_pct);
    if let Some(p) = r.resolved_valid_pct {
        let _ = writeln!(out, "resolved  {} / {} ({:.1}%)", s.valid, s.valid + s.invalid.unwrap_or(0), p);
    }
    let _ = writeln!(out, "unique    {} / {} ({:.1}%)", s.unique, s.valid, r.unique_pct);
    if let Some(e) = &r.efficiency {
        let speed = e.speedup.map(|x| format!(" ({x:.1}x)")).unwrap_or_default();
        let _ = writeln!(out, "t = {:.0}s, t-bar = {:.2}s{speed}", e.total_seconds, e.tbar);
    }
    out
}

pub fn render_report(r: &EvaluationReport) -> String {
    let mut out = render_stats(&r.stats);
    let sim = &r.similarity;
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<8} {:>8} {:>8} {:>8} {:>8}", "", "q", "a", "e", "avg");
    let _ = writeln!(
        out,
        "{:<8} {:>8} {:>8} {:>8} {:>8}",
        "pearson",
        opt(sim.question.pearson, 3),
        opt(sim.answer.pearson, 3),
        opt(sim.explanation.pearson, 3),
        opt(sim.avg_pearson, 3)
    );
    let _ = writeln!(
        out,
        "{:<8} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
        "jsd", sim.question.jsd, sim.answer.jsd, sim.explanation.jsd, sim.avg_jsd
    );
    if let Some(g) = &r.rouge {
        let _ = writeln!(out, "rouge-l (q,a <-> e) {:.3}  rouge-1 {:.3}  over {}", g.rouge_l, g.rouge_1, g.scored);
    }
    for (k, v) in &r.external {
        let _ = writeln!(out, "{k} {v:.3}");
    }
    out
}
