//! Human review: score storage, agreement, CSV export and the HTTP API.
//!
//! Endpoints (all JSON unless noted):
//!
//! - `GET /api/triplets?rater=<id>&unscored=1`: triplets in dataset order;
//!   with `unscored=1`, only those the rater has not scored yet. The rater may
//!   also be given in the `X-Rater-Id` header.
//! - `GET /api/triplets/<id>`: one triplet.
//! - `GET /api/images/<id>`: the image behind a triplet, with the red box drawn
//!   when the triplet came from the visual-prompt pipeline (PNG, or the original
//!   bytes otherwise).
//! - `POST /api/scores`: a [`ScoreRecord`]; `timestamp` may be omitted.
//! - `GET /api/agreement`: per-criterion AC2 and score averages.
//! - `GET /api/export`: the rater x criterion CSV (text/csv).
//!
//! Errors are `{"error": "<message>"}` with a 4xx status.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::{Body, Bytes};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use vqanle_core::metrics::agreement::{gwet_ac2, Criterion, RatingTable, NOT_APPLICABLE};
use vqanle_core::raster::AnnotationStyle;
use vqanle_core::scene::SceneGraphObject;
use vqanle_core::triplet::{PipelineKind, SlotRecord};

use crate::corpus::find_image;
use crate::dataset::{read_dataset, read_log, write_jsonl, AppendLog, DatasetError};
use crate::imaging::annotate_bbox;

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("unknown triplet {0}")]
    UnknownTriplet(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("image for {0} not found")]
    ImageNotFound(String),
    #[error("{0}")]
    Internal(String),
}

/// The five rubric scores; each is 1, 2, 3, or -1 when the item cannot be judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scores {
    pub accuracy: i8,
    pub logic: i8,
    pub clarity: i8,
    pub detail: i8,
    pub relevancy: i8,
}

impl Scores {
    pub fn get(&self, c: Criterion) -> i8 {
        match c {
            Criterion::Accuracy => self.accuracy,
            Criterion::Logic => self.logic,
            Criterion::Clarity => self.clarity,
            Criterion::Detail => self.detail,
            Criterion::Relevancy => self.relevancy,
        }
    }

    pub fn uniform(v: i8) -> Self {
        Scores { accuracy: v, logic: v, clarity: v, detail: v, relevancy: v }
    }

    pub fn validate(&self) -> Result<(), ReviewError> {
        for c in Criterion::ALL {
            let v = self.get(c);
            if !matches!(v, 1..=3) && v != NOT_APPLICABLE {
                return Err(ReviewError::BadRequest(format!("{}: score {v} is not one of -1, 1, 2, 3", c.as_str())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRecord {
    pub triplet_id: String,
    pub rater_id: String,
    pub scores: Scores,
    /// Unix milliseconds; filled in by the server when absent.
    #[serde(default)]
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub triplet_id: String,
    pub rater_id: String,
    pub previous: Scores,
    pub previous_timestamp: u64,
    pub replaced_by: Scores,
    pub replaced_at: u64,
}

pub fn now_millis() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

/// Append-only score log with last-write-wins per (triplet, rater).
///
/// Every submission is appended and synced before it is acknowledged. A
/// submission that replaces an earlier one also goes to `<log>.audit.jsonl`.
/// Once superseded lines outnumber live ones the log is rewritten to the
/// resolved state through a temporary file and rename.
pub struct ScoreStore {
    path: PathBuf,
    log: AppendLog,
    audit: AppendLog,
    resolved: BTreeMap<(String, String), ScoreRecord>,
    lines: usize,
}

const COMPACT_SLACK: usize = 64;

impl ScoreStore {
    pub fn open(path: &Path) -> Result<Self, DatasetError> {
        let records: Vec<ScoreRecord> = read_log(path)?;
        let lines = records.len();
        let mut resolved = BTreeMap::new();
        for r in records {
            resolved.insert((r.triplet_id.clone(), r.rater_id.clone()), r);
        }
        let audit_path = audit_path(path);
        Ok(ScoreStore { path: path.into(), log: AppendLog::open(path)?, audit: AppendLog::open(&audit_path)?, resolved, lines })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Returns true when an earlier score by the same rater was replaced.
    pub fn submit(&mut self, record: ScoreRecord) -> Result<bool, ReviewError> {
        record.scores.validate()?;
        if record.rater_id.trim().is_empty() {
            return Err(ReviewError::BadRequest("rater_id is empty".into()));
        }
        self.log.append(&record)?;
        self.lines += 1;
        let key = (record.triplet_id.clone(), record.rater_id.clone());
        let replaced = match self.resolved.insert(key, record.clone()) {
            Some(prev) => {
                self.audit.append(&AuditEntry {
                    triplet_id: record.triplet_id.clone(),
                    rater_id: record.rater_id.clone(),
                    previous: prev.scores,
                    previous_timestamp: prev.timestamp,
                    replaced_by: record.scores,
                    replaced_at: record.timestamp,
                })?;
                true
            }
            None => false,
        };
        if self.lines > 2 * self.resolved.len() + COMPACT_SLACK {
            self.compact()?;
        }
        Ok(replaced)
    }

    pub fn compact(&mut self) -> Result<(), DatasetError> {
        let live: Vec<&ScoreRecord> = self.resolved.values().collect();
        write_jsonl(&self.path, &live)?;
        self.log = AppendLog::open(&self.path)?;
        self.lines = live.len();
        Ok(())
    }

    pub fn records(&self) -> impl Iterator<Item = &ScoreRecord> {
        self.resolved.values()
    }

    pub fn is_scored(&self, triplet: &str, rater: &str) -> bool {
        self.resolved.contains_key(&(triplet.to_string(), rater.to_string()))
    }
}

pub fn audit_path(log: &Path) -> PathBuf {
    let mut name = log.file_stem().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".audit.jsonl");
    log.with_file_name(name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionAgreement {
    pub criterion: Criterion,
    /// AC2 over triplets scored by every rater with no -1; null when undefined.
    pub ac2: Option<f64>,
    /// Why `ac2` is null.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Mean of the per-rater means.
    pub average: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub raters: Vec<String>,
    pub items: usize,
    pub criteria: Vec<CriterionAgreement>,
    /// Per-rater means, keyed by rater then criterion.
    pub rater_means: BTreeMap<String, BTreeMap<Criterion, Option<f64>>>,
}

/// Raters, items, and one item x rater table per criterion.
pub type RatingTables = (Vec<String>, Vec<String>, BTreeMap<Criterion, Vec<Vec<i8>>>);

/// Items are triplets in id order, raters in id order; a missing score counts as -1.
pub fn rating_tables(records: &[&ScoreRecord]) -> RatingTables {
    let raters: Vec<String> = records.iter().map(|r| r.rater_id.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let items: Vec<String> = records.iter().map(|r| r.triplet_id.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let ri: HashMap<&str, usize> = raters.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
    let ii: HashMap<&str, usize> = items.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
    let mut tables = BTreeMap::new();
    for c in Criterion::ALL {
        let mut rows = vec![vec![NOT_APPLICABLE; raters.len()]; items.len()];
        for r in records {
            rows[ii[r.triplet_id.as_str()]][ri[r.rater_id.as_str()]] = r.scores.get(c);
        }
        tables.insert(c, rows);
    }
    (raters, items, tables)
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn agreement(records: &[&ScoreRecord]) -> AgreementReport {
    let (raters, items, tables) = rating_tables(records);
    let mut rater_means: BTreeMap<String, BTreeMap<Criterion, Option<f64>>> = BTreeMap::new();
    let mut criteria = Vec::new();
    for (c, rows) in tables {
        let means: Vec<Option<f64>> = (0..raters.len())
            .map(|k| {
                let vals: Vec<f64> = rows.iter().map(|row| row[k]).filter(|&v| v != NOT_APPLICABLE).map(f64::from).collect();
                mean(&vals)
            })
            .collect();
        for (name, m) in raters.iter().zip(&means) {
            rater_means.entry(name.clone()).or_default().insert(c, *m);
        }
        let (ac2, note) = match RatingTable::from_rows(raters.len(), rows).and_then(|t| gwet_ac2(&t)) {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let defined: Vec<f64> = means.iter().flatten().copied().collect();
        criteria.push(CriterionAgreement { criterion: c, ac2, note, average: mean(&defined) });
    }
    AgreementReport { raters, items: items.len(), criteria, rater_means }
}

/// Rows are raters, columns are criteria, then an AVG row of the column means.
pub fn export_csv(records: &[&ScoreRecord]) -> Result<String, ReviewError> {
    let report = agreement(records);
    let mut w = csv::Writer::from_writer(Vec::new());
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    let mut header = vec!["rater".to_string()];
    header.extend(Criterion::ALL.iter().map(|c| c.as_str().to_string()));
    let io = |e: csv::Error| ReviewError::Internal(e.to_string());
    w.write_record(&header).map_err(io)?;
    for (rater, means) in &report.rater_means {
        let mut row = vec![rater.clone()];
        row.extend(Criterion::ALL.iter().map(|c| cell(means.get(c).copied().flatten())));
        w.write_record(&row).map_err(io)?;
    }
    let mut avg = vec!["AVG".to_string()];
    avg.extend(report.criteria.iter().map(|c| cell(c.average)));
    w.write_record(&avg).map_err(io)?;
    String::from_utf8(w.into_inner().map_err(|e| ReviewError::Internal(e.to_string()))?).map_err(|e| ReviewError::Internal(e.to_string()))
}

/// Export straight from a score log, without a running server.
pub fn export_scores_file(scores: &Path, out: &Path) -> Result<(), ReviewError> {
    let records: Vec<ScoreRecord> = read_log(scores)?;
    let mut resolved = BTreeMap::new();
    for r in records {
        resolved.insert((r.triplet_id.clone(), r.rater_id.clone()), r);
    }
    let text = export_csv(&resolved.values().collect::<Vec<_>>())?;
    std::fs::write(out, text).map_err(|e| ReviewError::Internal(format!("{}: {e}", out.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletView {
    pub id: String,
    pub image_id: String,
    pub pipeline: PipelineKind,
    pub question: String,
    pub answer: String,
    pub explanation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<SceneGraphObject>,
    pub image_url: String,
}

impl TripletView {
    fn from_record(r: &SlotRecord) -> Option<Self> {
        let t = r.outcome.triplet()?;
        Some(TripletView {
            id: r.id.clone(),
            image_id: r.image_id.clone(),
            pipeline: r.pipeline,
            question: t.question.clone(),
            answer: t.answer.clone(),
            explanation: t.explanation.clone(),
            object: t.meta.object.clone(),
            image_url: format!("/api/images/{}", r.id),
        })
    }
}

pub struct ReviewState {
    triplets: Vec<TripletView>,
    by_id: HashMap<String, usize>,
    images_dir: PathBuf,
    style: AnnotationStyle,
    store: Mutex<ScoreStore>,
}

impl ReviewState {
    /// Loads the valid records of `dataset`; the file is only ever read.
    pub fn open(dataset: &Path, images_dir: &Path, scores: &Path) -> Result<Self, ReviewError> {
        let triplets: Vec<TripletView> = read_dataset(dataset)?.iter().filter_map(TripletView::from_record).collect();
        let by_id = triplets.iter().enumerate().map(|(i, t)| (t.id.clone(), i)).collect();
        Ok(ReviewState {
            triplets,
            by_id,
            images_dir: images_dir.into(),
            style: AnnotationStyle::default(),
            store: Mutex::new(ScoreStore::open(scores)?),
        })
    }

    fn triplet(&self, id: &str) -> Result<&TripletView, ReviewError> {
        self.by_id.get(id).map(|&i| &self.triplets[i]).ok_or_else(|| ReviewError::UnknownTriplet(id.into()))
    }

    fn store(&self) -> std::sync::MutexGuard<'_, ScoreStore> {
        // a panic mid-submit cannot leave the map half-updated past the synced log
        self.store.lock().unwrap_or_else(|p| p.into_inner())
    }
}

impl IntoResponse for ReviewError {
    fn into_response(self) -> Response {
        let status = match &self {
            ReviewError::UnknownTriplet(_) | ReviewError::ImageNotFound(_) => StatusCode::NOT_FOUND,
            ReviewError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ReviewError::Dataset(_) | ReviewError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(serde_json::json!({"error": self.to_string()}))).into_response()
    }
}

#[derive(Debug, Default, Deserialize)]
struct ListQuery {
    rater: Option<String>,
    unscored: Option<String>,
}

async fn list_triplets(State(s): State<Arc<ReviewState>>, Query(q): Query<ListQuery>, headers: HeaderMap) -> Result<Json<Vec<TripletView>>, ReviewError> {
    let rater = q.rater.or_else(|| headers.get("x-rater-id").and_then(|v| v.to_str().ok()).map(str::to_string));
    let unscored = matches!(q.unscored.as_deref(), Some("1" | "true"));
    if !unscored {
        return Ok(Json(s.triplets.clone()));
    }
    let rater = rater.ok_or_else(|| ReviewError::BadRequest("unscored=1 needs a rater".into()))?;
    let store = s.store();
    Ok(Json(s.triplets.iter().filter(|t| !store.is_scored(&t.id, &rater)).cloned().collect()))
}

async fn get_triplet(State(s): State<Arc<ReviewState>>, UrlPath(id): UrlPath<String>) -> Result<Json<TripletView>, ReviewError> {
    s.triplet(&id).cloned().map(Json)
}

async fn get_image(State(s): State<Arc<ReviewState>>, UrlPath(id): UrlPath<String>) -> Result<Response, ReviewError> {
    let t = s.triplet(&id)?;
    let path = find_image(&s.images_dir, &t.image_id).ok_or_else(|| ReviewError::ImageNotFound(id.clone()))?;
    let bytes = std::fs::read(&path).map_err(|e| ReviewError::Internal(format!("{}: {e}", path.display())))?;
    let (body, mime) = match (&t.object, t.pipeline) {
        (Some(obj), PipelineKind::SingleStepVip) => {
            (annotate_bbox(&bytes, obj, &s.style).map_err(|e| ReviewError::Internal(e.to_string()))?, "image/png")
        }
        _ => {
            let png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
            (bytes, if png { "image/png" } else { "image/jpeg" })
        }
    };
    Ok(([(header::CONTENT_TYPE, mime)], Body::from(body)).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub status: String,
    pub record: ScoreRecord,
}

async fn post_scores(State(s): State<Arc<ReviewState>>, body: Bytes) -> Result<(StatusCode, Json<SubmitResponse>), ReviewError> {
    let mut record: ScoreRecord = serde_json::from_slice(&body).map_err(|e| ReviewError::BadRequest(format!("bad score record: {e}")))?;
    s.triplet(&record.triplet_id)?;
    if record.timestamp == 0 {
        record.timestamp = now_millis();
    }
    let replaced = s.store().submit(record.clone())?;
    let (code, status) = if replaced { (StatusCode::OK, "overwritten") } else { (StatusCode::CREATED, "created") };
    Ok((code, Json(SubmitResponse { status: status.into(), record })))
}

async fn get_agreement(State(s): State<Arc<ReviewState>>) -> Json<AgreementReport> {
    let store = s.store();
    Json(agreement(&store.records().collect::<Vec<_>>()))
}

async fn get_export(State(s): State<Arc<ReviewState>>) -> Result<Response, ReviewError> {
    let text = {
        let store = s.store();
        export_csv(&store.records().collect::<Vec<_>>())?
    };
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], text).into_response())
}

pub fn router(state: Arc<ReviewState>) -> Router {
    Router::new()
        .route("/api/triplets", get(list_triplets))
        .route("/api/triplets/{id}", get(get_triplet))
        .route("/api/images/{id}", get(get_image))
        .route("/api/scores", post(post_scores))
        .route("/api/agreement", get(get_agreement))
        .route("/api/export", get(get_export))
        .with_state(state)
}

/// Serve until the process is stopped.
pub async fn serve(state: ReviewState, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    info!("review server on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state))).await
}
