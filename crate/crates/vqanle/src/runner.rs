//! Run orchestration: corpus, plan, prefix schedule, worker pool, journal,
//! and the final dataset / invalid ledger / manifest files.
//!
//! Every finished slot is appended to `journal.jsonl` by a single writer as
//! soon as it completes, so an interrupted run can be resumed: slots already in
//! the journal are not regenerated. The dataset files are rebuilt from the
//! journal at the end, ordered by plan index.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use vqanle_core::gateway::{Embedder, GatewayError, Generator};
use vqanle_core::metrics::efficiency_report;
use vqanle_core::pipeline::{run_slot, Backends, ImageSource, PipelineSettings, PipelineSpec, SlotInput};
use vqanle_core::prompt::{self, PromptTemplate, Stage, TemplateError};
use vqanle_core::scene::{build_sampling_plan, PlanError, PlanRequest};
use vqanle_core::schedule::{build_prefix_schedule, ScheduleError};
use vqanle_core::seed::StableHash;
use vqanle_core::similarity::SimilarityMode;
use vqanle_core::triplet::{InvalidReason, PipelineKind, SlotRecord};

use crate::config::{BackendKind, ConfigError, RunConfig};
use crate::corpus::{load_corpus, CorpusError, RecordError};
use crate::dataset::{read_log, write_jsonl, AppendLog, DatasetError};
use crate::gateway::{InFlight, MockEmbedder, MockGateway, MockScript, RemoteConfig, RemoteGateway, Retrying, ENV_API_TOKEN, ENV_BACKEND_URL};
use crate::imaging::FileImages;

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const INVALID_FILE: &str = "invalid.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const JOURNAL_FILE: &str = "journal.jsonl";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("sampling plan: {0}")]
    Plan(#[from] PlanError),
    #[error("prefix schedule: {0}")]
    Schedule(#[from] ScheduleError),
    #[error("template: {0}")]
    Template(#[from] TemplateError),
    #[error("template file {path}: {message}")]
    TemplateFile { path: PathBuf, message: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{0}")]
    Io(String),
    #[error("output directory {0} holds a journal from a different configuration; rerun with --fresh to discard it")]
    ForeignJournal(PathBuf),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub valid: usize,
    pub invalid: usize,
    pub skipped: usize,
    pub by_reason: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub index: usize,
    pub id: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<InvalidReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<Stage>,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub test_name: String,
    pub pipeline: PipelineKind,
    pub config_hash: String,
    pub config: RunConfig,
    pub started_at: u64,
    #[serde(default)]
    pub finished_at: Option<u64>,
    pub complete: bool,
    pub plan_size: usize,
    pub expected: usize,
    pub totals: Totals,
    pub ledger: Vec<LedgerEntry>,
    /// Wall-clock seconds from the first request to the last flush, summed
    /// over resumed sessions.
    pub t_seconds: f64,
    #[serde(default)]
    pub tbar: Option<f64>,
    #[serde(default)]
    pub speedup: Option<f64>,
    #[serde(default)]
    pub corpus_errors: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum JournalLine {
    Header { config_hash: String },
    Entry { duration_ms: u64, record: Box<SlotRecord> },
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Discard an existing journal instead of resuming it.
    pub fresh: bool,
    /// Overrides the configured output directory.
    pub output_dir: Option<PathBuf>,
}

pub struct RunSummary {
    pub output_dir: PathBuf,
    pub manifest: RunManifest,
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let json = serde_json::to_string(cfg).unwrap_or_default();
    format!("{:016x}", StableHash::new().str(&json).finish())
}

/// A template by id: `<templates_dir>/<id>.txt` when present, else built-in.
pub fn load_template(id: &str, stage: Stage, dir: Option<&Path>) -> Result<PromptTemplate, RunError> {
    if let Some(d) = dir {
        let path = d.join(format!("{id}.txt"));
        if path.is_file() {
            let body = std::fs::read_to_string(&path).map_err(|e| RunError::TemplateFile { path: path.clone(), message: e.to_string() })?;
            return Ok(PromptTemplate::new(id, body.trim_end_matches(['\n', '\r']), stage)?);
        }
    }
    Ok(prompt::builtin(id)?)
}

pub fn pipeline_spec(cfg: &RunConfig) -> Result<PipelineSpec, RunError> {
    let dir = cfg.templates_dir.as_deref();
    Ok(match cfg.pipeline()? {
        PipelineKind::SingleStep => PipelineSpec::SingleStep { template: load_template(&cfg.prompt, Stage::Triplet, dir)? },
        PipelineKind::SingleStepVip => PipelineSpec::SingleStepVip { template: load_template(&cfg.prompt, Stage::Triplet, dir)? },
        PipelineKind::MultiStep => {
            let p = &cfg.prompt;
            PipelineSpec::MultiStep {
                question: load_template(&format!("{p}-question"), Stage::Question, dir)?,
                answer: load_template(&format!("{p}-answer"), Stage::Answer, dir)?,
                explanations: vec![
                    load_template(&format!("{p}-explanation-base"), Stage::ExplanationBase, dir)?,
                    load_template(&format!("{p}-explanation-cot"), Stage::ExplanationCot, dir)?,
                    load_template(&format!("{p}-explanation-react"), Stage::ExplanationReact, dir)?,
                ],
            }
        }
    })
}

/// Generator and embedder described by the config, wrapped with retries and
/// an in-flight cap of `parallelism`.
pub struct ConfiguredBackends {
    pub generator: Box<dyn Generator + Send + Sync>,
    pub embedder: Option<Box<dyn Embedder + Send + Sync>>,
}

pub fn configured_backends(cfg: &RunConfig, spec: &PipelineSpec) -> Result<ConfiguredBackends, RunError> {
    let b = &cfg.backend;
    let backoff = Duration::from_millis(b.backoff_ms);
    let needs_embedder = matches!(spec, PipelineSpec::MultiStep { .. }) && cfg.similarity == SimilarityMode::Embedding;
    match b.kind {
        BackendKind::Mock => {
            let mut g = MockGateway::new(cfg.model.name.clone(), cfg.seed);
            if let Some(p) = &b.script {
                g = g.with_script(MockScript::load(p)?);
            }
            if let PipelineSpec::MultiStep { question, answer, explanations } = spec {
                for t in [question, answer].into_iter().chain(explanations) {
                    g = g.with_stage(t.id.clone(), t.stage);
                }
            }
            Ok(ConfiguredBackends {
                generator: Box::new(InFlight::new(g, cfg.parallelism)),
                embedder: needs_embedder.then(|| Box::new(MockEmbedder) as Box<dyn Embedder + Send + Sync>),
            })
        }
        BackendKind::Remote => {
            let url = std::env::var(ENV_BACKEND_URL).ok().or_else(|| b.url.clone()).ok_or_else(|| {
                GatewayError::Config(format!("remote backend needs backend.url or {ENV_BACKEND_URL}"))
            })?;
            let rc = RemoteConfig {
                base_url: url,
                model: if cfg.model.path.is_empty() { cfg.model.name.clone() } else { cfg.model.path.clone() },
                token: std::env::var(ENV_API_TOKEN).ok(),
                embedding_model: b.embedding_model.clone(),
                timeout: Duration::from_secs(b.timeout_secs.max(1)),
            };
            let gen = InFlight::new(Retrying::new(RemoteGateway::new(rc.clone()), b.retries, backoff), cfg.parallelism);
            let emb = InFlight::new(Retrying::new(RemoteGateway::new(rc), b.retries, backoff), cfg.parallelism);
            Ok(ConfiguredBackends {
                generator: Box::new(gen),
                embedder: needs_embedder.then(|| Box::new(emb) as Box<dyn Embedder + Send + Sync>),
            })
        }
    }
}

pub fn run_from_config(path: &Path, opts: &RunOptions) -> Result<RunSummary, RunError> {
    let cfg = RunConfig::load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let spec = pipeline_spec(&cfg)?;
    let backends = configured_backends(&cfg, &spec)?;
    let images = FileImages { style: cfg.annotation };
    let out = opts.output_dir.clone().unwrap_or_else(|| cfg.output_dir_or(base));
    run(&cfg, &spec, &out, opts.fresh, &*backends.generator, backends.embedder.as_deref().map(|e| e as &(dyn Embedder + Sync)), &images)
}

fn totals(records: &[(SlotRecord, u64)]) -> (Totals, Vec<LedgerEntry>) {
    let mut t = Totals::default();
    let mut ledger = Vec::with_capacity(records.len());
    for (r, ms) in records {
        match r.outcome.status() {
            "valid" => t.valid += 1,
            "invalid" => t.invalid += 1,
            _ => t.skipped += 1,
        }
        let reason = r.outcome.reason();
        if let Some(reason) = reason {
            *t.by_reason.entry(reason.as_str().to_string()).or_insert(0) += 1;
        }
        let stage = match &r.outcome {
            vqanle_core::SlotOutcome::Invalid { stage, .. } => *stage,
            _ => None,
        };
        ledger.push(LedgerEntry { index: r.index, id: r.id.clone(), status: r.outcome.status().into(), reason, stage, duration_ms: *ms });
    }
    (t, ledger)
}

fn write_manifest(dir: &Path, m: &RunManifest) -> Result<(), RunError> {
    let path = dir.join(MANIFEST_FILE);
    let tmp = dir.join(format!("{MANIFEST_FILE}.tmp"));
    let text = serde_json::to_string_pretty(m).map_err(|e| RunError::Io(e.to_string()))?;
    std::fs::write(&tmp, text + "\n").map_err(|e| RunError::Io(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, &path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

pub fn read_manifest(dir: &Path) -> Option<RunManifest> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_FILE)).ok()?;
    serde_json::from_str(&text).ok()
}

/// Execute a run with explicit backends.
pub fn run(
    cfg: &RunConfig,
    spec: &PipelineSpec,
    out: &Path,
    fresh: bool,
    generator: &(dyn Generator + Sync),
    embedder: Option<&(dyn Embedder + Sync)>,
    images: &(dyn ImageSource + Sync),
) -> Result<RunSummary, RunError> {
    let kind = cfg.pipeline()?;
    let pool = cfg.prefix_pool()?;
    let images_dir = cfg
        .dataset
        .images_dir
        .as_deref()
        .ok_or_else(|| ConfigError::Invalid { field: "dataset.images_dir".into(), message: "required to run".into() })?;
    let corpus = load_corpus(images_dir, cfg.dataset.scene_graph.as_deref())?;
    for RecordError { image_id, message } in &corpus.errors {
        warn!("corpus: {image_id}: {message}");
    }
    let threshold = cfg.area_threshold();
    let plan = build_sampling_plan(
        &corpus.records,
        &PlanRequest {
            image_count: cfg.dataset.count,
            triplets_per_image: cfg.run_params.num_per_inference,
            seed: cfg.seed,
            require_scene_graph: cfg.dataset.use_scene_graph.0,
            threshold,
        },
    )?;
    let schedule_seed = StableHash::new().u64(cfg.seed).str("prefix-schedule").finish();
    let schedule = build_prefix_schedule(&pool.prefixes, &pool.proportions, plan.len(), schedule_seed)?;

    std::fs::create_dir_all(out).map_err(|e| RunError::Io(format!("{}: {e}", out.display())))?;
    let hash = config_hash(cfg);
    let journal_path = out.join(JOURNAL_FILE);
    if fresh {
        for f in [JOURNAL_FILE, DATASET_FILE, INVALID_FILE, MANIFEST_FILE] {
            let _ = std::fs::remove_file(out.join(f));
        }
    }
    let mut done: BTreeMap<usize, (SlotRecord, u64)> = BTreeMap::new();
    let prior = read_log::<JournalLine>(&journal_path)?;
    let mut has_header = false;
    for line in prior {
        match line {
            JournalLine::Header { config_hash } if config_hash == hash => has_header = true,
            JournalLine::Header { .. } => return Err(RunError::ForeignJournal(out.into())),
            JournalLine::Entry { duration_ms, record } => {
                if record.index < plan.len() {
                    done.entry(record.index).or_insert((*record, duration_ms));
                }
            }
        }
    }
    let prior_seconds = if done.is_empty() { 0.0 } else { read_manifest(out).map(|m| m.t_seconds).unwrap_or(0.0) };
    let mut journal = AppendLog::open(&journal_path)?;
    if !has_header {
        journal.append(&JournalLine::Header { config_hash: hash.clone() })?;
    }

    let expected = cfg.dataset.expected.unwrap_or(plan.len());
    let mut manifest = RunManifest {
        test_name: cfg.test_name.clone(),
        pipeline: kind,
        config_hash: hash,
        config: cfg.clone(),
        started_at: now_secs(),
        finished_at: None,
        complete: false,
        plan_size: plan.len(),
        expected,
        totals: Totals::default(),
        ledger: Vec::new(),
        t_seconds: prior_seconds,
        tbar: None,
        speedup: None,
        corpus_errors: corpus.errors.iter().map(|e| format!("{}: {}", e.image_id, e.message)).collect(),
    };
    write_manifest(out, &manifest)?;

    let pending: Vec<usize> = (0..plan.len()).filter(|i| !done.contains_key(i)).collect();
    if !done.is_empty() {
        info!("resuming: {} of {} slots already done", done.len(), plan.len());
    }
    let settings = PipelineSettings {
        params: cfg.decoding.clone(),
        budgets: cfg.budgets.clone(),
        rules: cfg.validity.clone(),
        similarity: cfg.similarity,
        threshold,
    };
    let by_id: BTreeMap<&str, &vqanle_core::ImageRecord> = corpus.records.iter().map(|r| (r.id.as_str(), r)).collect();

    let started = Instant::now();
    let cursor = AtomicUsize::new(0);
    let workers = cfg.parallelism.min(pending.len()).max(1);
    let mut write_error = None;
    std::thread::scope(|s| {
        let (tx, rx) = mpsc::channel::<(SlotRecord, u64)>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (cursor, pending, plan, schedule, by_id, settings) = (&cursor, &pending, &plan, &schedule, &by_id, &settings);
            s.spawn(move || {
                let backends = Backends {
                    generator: generator as &dyn Generator,
                    embedder: embedder.map(|e| e as &dyn Embedder),
                    images: images as &dyn ImageSource,
                };
                loop {
                    let k = cursor.fetch_add(1, Ordering::SeqCst);
                    let Some(&index) = pending.get(k) else { break };
                    let entry = &plan.entries[index];
                    let input = SlotInput {
                        index,
                        image: by_id[entry.image_id.as_str()],
                        slot: entry.slot,
                        prefix: schedule.prefix_at(index).expect("schedule covers the plan"),
                        run_seed: cfg.seed,
                    };
                    let t0 = Instant::now();
                    let record = run_slot(spec, settings, input, &backends);
                    if tx.send((record, t0.elapsed().as_millis() as u64)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);
        let total = pending.len();
        for (n, (record, ms)) in rx.into_iter().enumerate() {
            if write_error.is_none() {
                if let Err(e) = journal.append(&JournalLine::Entry { duration_ms: ms, record: Box::new(record.clone()) }) {
                    write_error = Some(e);
                    // stop handing out work; in-flight slots finish and are dropped
                    cursor.store(usize::MAX / 2, Ordering::SeqCst);
                }
            }
            done.insert(record.index, (record, ms));
            if (n + 1) % 50 == 0 || n + 1 == total {
                info!("{}/{} slots written", n + 1, total);
            }
        }
    });
    if let Some(e) = write_error {
        return Err(e.into());
    }
    let session = started.elapsed().as_secs_f64();

    let all: Vec<(SlotRecord, u64)> = done.into_values().collect();
    let valid: Vec<&SlotRecord> = all.iter().map(|(r, _)| r).filter(|r| r.outcome.is_valid()).collect();
    let rest: Vec<&SlotRecord> = all.iter().map(|(r, _)| r).filter(|r| !r.outcome.is_valid()).collect();
    write_jsonl(&out.join(DATASET_FILE), &valid)?;
    write_jsonl(&out.join(INVALID_FILE), &rest)?;

    let (t, ledger) = totals(&all);
    manifest.t_seconds = prior_seconds + session;
    if let Ok(eff) = efficiency_report(manifest.t_seconds, t.valid, cfg.baseline_tbar) {
        manifest.tbar = Some(eff.tbar);
        manifest.speedup = eff.speedup;
    }
    manifest.complete = ledger.len() == plan.len();
    manifest.totals = t;
    manifest.ledger = ledger;
    manifest.finished_at = Some(now_secs());
    write_manifest(out, &manifest)?;
    let written: BTreeSet<usize> = manifest.ledger.iter().map(|e| e.index).collect();
    debug_assert_eq!(written.len(), manifest.ledger.len());
    Ok(RunSummary { output_dir: out.into(), manifest })
}
