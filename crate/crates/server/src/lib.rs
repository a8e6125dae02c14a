//! HTTP JSON facade over decks and training sessions.
//!
//! All state lives in the session store; handlers only translate between
//! JSON and store calls. Restarting over the same data directory replays the
//! logs and serves identical responses.

mod error;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use calibrate_core::bank::{load_deck_dir, Deck, Prediction, Question, QuestionKind};
use calibrate_core::scoring::display_round;
use calibrate_core::session::{
    default_edges, parse_edges, CalibrationBin, Clock, PredictionEvent, SessionStats, SessionStore,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use error::{ApiError, ErrorCode};

type ApiResult<T> = Result<T, ApiError>;

pub struct AppState {
    decks: BTreeMap<String, Arc<Deck>>,
    store: SessionStore,
    warnings: Vec<String>,
}

impl AppState {
    pub fn new(decks: Vec<Deck>, store: SessionStore, warnings: Vec<String>) -> Self {
        let mut map = BTreeMap::new();
        let mut warnings = warnings;
        for deck in decks {
            let id = deck.id.clone();
            if map.insert(id.clone(), Arc::new(deck)).is_some() {
                warnings.push(format!("duplicate deck id {id}: the later file wins"));
            }
        }
        AppState { decks: map, store, warnings }
    }

    /// Loads every deck in `deck_dir` and replays every session in `data_dir`.
    ///
    /// Broken decks and sessions are skipped and reported as warnings; sessions
    /// whose deck is missing are kept but reported.
    pub fn load(deck_dir: &Path, data_dir: &Path, clock: Clock) -> Result<Self, String> {
        let (decks, failures) =
            load_deck_dir(deck_dir).map_err(|e| format!("cannot read deck directory {}: {e}", deck_dir.display()))?;
        let (store, store_warnings) = SessionStore::open(data_dir, clock)
            .map_err(|e| format!("cannot open data directory {}: {e}", data_dir.display()))?;
        let mut warnings: Vec<String> = failures.into_iter().map(|(path, e)| format!("skipped deck {path}: {e}")).collect();
        warnings.extend(store_warnings.into_iter().map(|w| format!("skipped session {}: {}", w.path.display(), w.reason)));
        let state = AppState::new(decks, store, warnings);
        let orphans: Vec<String> = state
            .store
            .ids()
            .into_iter()
            .filter_map(|id| state.store.meta(&id).ok())
            .filter(|m| !state.decks.contains_key(&m.deck_id))
            .map(|m| format!("session {} refers to missing deck {}", m.session_id, m.deck_id))
            .collect();
        Ok(AppState { warnings: [state.warnings, orphans].concat(), ..state })
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn deck(&self, id: &str) -> ApiResult<&Arc<Deck>> {
        self.decks.get(id).ok_or_else(|| ApiError::new(ErrorCode::DeckNotFound, format!("deck {id} not found")))
    }

    fn session_deck(&self, session_id: &str) -> ApiResult<&Arc<Deck>> {
        let meta = self.store.meta(session_id)?;
        self.decks.get(&meta.deck_id).ok_or_else(|| {
            ApiError::new(ErrorCode::Internal, format!("deck {} of session {session_id} is not loaded", meta.deck_id))
        })
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/decks", get(list_decks))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/next", get(next_question))
        .route("/sessions/{id}/answers", post(submit_answer))
        .route("/sessions/{id}/stats", get(session_stats))
        .route("/sessions/{id}/calibration", get(calibration))
        .with_state(state)
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "decks": state.decks.len(),
        "sessions": state.store.ids().len(),
        "warnings": state.warnings,
    }))
}

#[derive(Debug, Serialize)]
struct DeckSummary {
    id: String,
    title: String,
    scoring_rule: &'static str,
    questions: usize,
    kinds: Vec<QuestionKind>,
}

async fn list_decks(State(state): State<Arc<AppState>>) -> Json<Vec<DeckSummary>> {
    let summaries = state
        .decks
        .values()
        .map(|d| {
            let mut kinds: Vec<QuestionKind> = d.questions.iter().map(|q| q.kind).collect();
            kinds.sort();
            kinds.dedup();
            DeckSummary {
                id: d.id.clone(),
                title: d.title.clone(),
                scoring_rule: d.scoring_rule.as_str(),
                questions: d.questions.len(),
                kinds,
            }
        })
        .collect();
    Json(summaries)
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes, code: ErrorCode) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(code, format!("malformed request body: {e}")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    deck_id: String,
    #[serde(default)]
    seed: Option<u64>,
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: CreateSession = parse_body(&body, ErrorCode::BadRequest)?;
    let deck = state.deck(&req.deck_id)?;
    let meta = state.store.create(deck, req.seed)?;
    Ok((
        StatusCode::CREATED,
        Json(json!({
            "session_id": meta.session_id,
            "deck_id": meta.deck_id,
            "seed": meta.seed,
            "created_at": meta.created_at,
            "question_count": meta.question_order.len(),
        })),
    ))
}

/// A question as shown to the trainee: no answer fields.
#[derive(Debug, Serialize)]
struct QuestionView<'a> {
    id: &'a str,
    kind: QuestionKind,
    prompt: &'a str,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    options: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    /// Confidence range the score is computed over (choice questions).
    #[serde(skip_serializing_if = "Option::is_none")]
    confidence: Option<ConfidenceRange>,
    /// Target coverage (interval questions).
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ConfidenceRange {
    min: f64,
    max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    step: Option<f64>,
}

fn question_view<'a>(deck: &Deck, q: &'a Question) -> ApiResult<QuestionView<'a>> {
    let (confidence, beta) = if q.kind.is_interval() {
        (None, Some(deck.beta(q)))
    } else {
        let params = deck.choice_params(q).map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))?;
        (Some(ConfidenceRange { min: params.p_rand, max: params.p_max, step: deck.params.confidence_step }), None)
    };
    Ok(QuestionView { id: &q.id, kind: q.kind, prompt: &q.prompt, options: &q.options, k: q.k, confidence, beta })
}

async fn next_question(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let deck = state.session_deck(&id)?;
    let next = state.store.next_question(&id)?;
    let (answered, total) = state.store.progress(&id)?;
    let question = match next.as_deref().and_then(|qid| deck.question(qid)) {
        Some(q) => Some(question_view(deck, q)?),
        None => None,
    };
    Ok(Json(json!({
        "session_id": id,
        "done": question.is_none(),
        "answered": answered,
        "total": total,
        "question": question,
    })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerRequest {
    question_id: String,
    prediction: Value,
}

#[derive(Debug, Serialize)]
struct AnswerResponse {
    event: PredictionEvent,
    points: f64,
    points_display: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    correct: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    true_value: Option<f64>,
    total_points: f64,
}

async fn submit_answer(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Json<AnswerResponse>> {
    let req: AnswerRequest = parse_body(&body, ErrorCode::BadRequest)?;
    let prediction: Prediction = serde_json::from_value(req.prediction).map_err(|_| {
        ApiError::new(
            ErrorCode::InvalidPrediction,
            "prediction must be {\"selection\": {...}, \"confidence\": p} or {\"lower\": L, \"upper\": U}",
        )
    })?;
    let deck = state.session_deck(&id)?;
    let event = state.store.record(&id, deck, &req.question_id, prediction)?;
    let total_points = state.store.stats(&id)?.total_points;
    Ok(Json(AnswerResponse {
        points: event.points,
        points_display: display_round(event.points),
        correct: event.correct,
        true_value: event.true_value,
        event,
        total_points,
    }))
}

#[derive(Debug, Serialize)]
struct StatsResponse {
    session_id: String,
    deck_id: String,
    answered: usize,
    total: usize,
    total_points_display: i64,
    #[serde(flatten)]
    stats: SessionStats,
}

async fn session_stats(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<StatsResponse>> {
    let meta = state.store.meta(&id)?;
    let stats = state.store.stats(&id)?;
    let (answered, total) = state.store.progress(&id)?;
    Ok(Json(StatsResponse {
        session_id: id,
        deck_id: meta.deck_id,
        answered,
        total,
        total_points_display: display_round(stats.total_points),
        stats,
    }))
}

#[derive(Debug, Deserialize)]
struct CalibrationQuery {
    edges: Option<String>,
}

#[derive(Debug, Serialize)]
struct CalibrationResponse {
    session_id: String,
    edges: Vec<f64>,
    bins: Vec<CalibrationBin>,
}

async fn calibration(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    query: Result<Query<CalibrationQuery>, axum::extract::rejection::QueryRejection>,
) -> ApiResult<Json<CalibrationResponse>> {
    let Query(query) = query.map_err(|e| ApiError::new(ErrorCode::BadEdges, e.body_text()))?;
    let deck = state.session_deck(&id)?;
    let edges = match query.edges.as_deref() {
        Some(raw) => parse_edges(raw)?,
        None => default_edges(deck),
    };
    let bins = state.store.calibration(&id, &edges)?;
    Ok(Json(CalibrationResponse { session_id: id, edges, bins }))
}
