//! HTTP API over the game, with trajectory persistence.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | `/api/challenges` | `{difficulty, topic?, seed?}` | `{challenge_id, start_word, topic_hint?}` |
//! | POST | `/api/sessions` | `{challenge_id, mode}` | `{session_id, start_word, start_score}` |
//! | POST | `/api/sessions/{id}/guesses` | `{word, option?}` | `{score, hit, step}`, 422 `oov`, 409 `closed` |
//! | GET | `/api/sessions/{id}` | | history; `target` only once closed |
//! | GET | `/api/sessions/{id}/options` | | `{step, options}` shuffled, unlabeled |
//! | POST | `/api/sessions/{id}/quit` | | `{outcome, reveal}` |
//! | GET | `/api/analysis/sessions/{id}` | | eureka report, 409 while open |
//!
//! Errors are `{"error": code, "message": text}`. Sessions are serialized
//! individually; the log store sits behind a single writer lock and every
//! solved or quit session is appended before the response is sent.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{analyze_trajectory, AnalysisConfig};
use crate::challenges::{generate_challenge, Challenge, ChallengeError, DifficultyPreset};
use crate::config::{fnv1a, ServerConfig};
use crate::graph::NavigationGraph;
use crate::sessions::{Clock, GameSession, Mode, Outcome, SessionError, Source};
use crate::store::LogStore;
use crate::Engine;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} {id}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.code, "message": self.message }))).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let msg = e.to_string();
        match e {
            SessionError::OutOfVocabulary(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "oov", msg),
            SessionError::Closed => ApiError::new(StatusCode::CONFLICT, "closed", msg),
            SessionError::ModeViolation(_) => ApiError::new(StatusCode::CONFLICT, "mode", msg),
            SessionError::StaleOption(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "not_an_option", msg),
            SessionError::InvalidChallenge(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_challenge", msg),
            SessionError::Proposal(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "proposal", msg),
        }
    }
}

impl From<ChallengeError> for ApiError {
    fn from(e: ChallengeError) -> Self {
        let msg = e.to_string();
        match e {
            ChallengeError::InvalidDifficulty(_) => ApiError::new(StatusCode::BAD_REQUEST, "invalid_difficulty", msg),
            ChallengeError::UnknownTopic(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unknown_topic", msg),
            ChallengeError::Infeasible { .. } | ChallengeError::EmptyGraph => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "infeasible", msg)
            }
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "challenge", msg),
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string()))
}

#[derive(Debug, Clone, Deserialize)]
pub struct ChallengeRequest {
    pub difficulty: DifficultyPreset,
    #[serde(default)]
    pub topic: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SessionRequest {
    pub challenge_id: String,
    #[serde(default = "default_mode")]
    pub mode: Mode,
}

fn default_mode() -> Mode {
    Mode::Typing
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SessionStarted {
    pub session_id: String,
    pub start_word: String,
    pub start_score: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct GuessRequest {
    pub word: String,
    /// Pick from the current option list instead of typing.
    #[serde(default)]
    pub option: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GuessReply {
    pub score: f64,
    pub hit: bool,
    pub step: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HistoryEntry {
    pub step: usize,
    pub word: String,
    pub score: f64,
    pub source: Source,
    pub timestamp: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SessionView {
    pub session_id: String,
    pub challenge_id: String,
    pub start_word: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_hint: Option<String>,
    pub mode: Mode,
    pub outcome: Outcome,
    pub history: Vec<HistoryEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OptionsReply {
    pub step: usize,
    pub options: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct QuitReply {
    pub outcome: Outcome,
    pub reveal: String,
}

struct SessionSlot {
    session: GameSession,
    persisted: bool,
}

/// Shared server state.
pub struct AppState {
    engine: Arc<Engine>,
    nav: NavigationGraph,
    config: ServerConfig,
    config_hash: String,
    challenges: Mutex<HashMap<String, Challenge>>,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionSlot>>>>,
    store: Option<Mutex<LogStore>>,
    next_seed: AtomicU64,
    next_session: AtomicU64,
    manual_clock: bool,
}

impl AppState {
    /// State with a log store in `config.data_dir`.
    pub fn new(engine: Engine, config: ServerConfig) -> Result<AppState, crate::store::StoreError> {
        let store = LogStore::open(&config.data_dir)?;
        Ok(AppState::build(engine, config, Some(store), false))
    }

    /// State without persistence and with deterministic timestamps, for
    /// tests and demos.
    pub fn ephemeral(engine: Engine, config: ServerConfig) -> AppState {
        AppState::build(engine, config, None, true)
    }

    fn build(engine: Engine, config: ServerConfig, store: Option<LogStore>, manual_clock: bool) -> AppState {
        let nav = engine.navigation(config.nav_k);
        AppState {
            engine: Arc::new(engine),
            nav,
            config_hash: config.config_hash(),
            config,
            challenges: Mutex::new(HashMap::new()),
            sessions: Mutex::new(HashMap::new()),
            store: store.map(Mutex::new),
            next_seed: AtomicU64::new(0),
            next_session: AtomicU64::new(0),
            manual_clock,
        }
    }

    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    /// Operator access to a generated challenge, target included.
    pub fn challenge(&self, id: &str) -> Option<Challenge> {
        self.challenges.lock().unwrap().get(id).cloned()
    }

    /// Operator access to a session's challenge, target included.
    pub fn session_challenge(&self, session_id: &str) -> Option<Challenge> {
        let slot = self.sessions.lock().unwrap().get(session_id).cloned()?;
        let challenge = slot.lock().unwrap().session.challenge().clone();
        Some(challenge)
    }

    fn slot(&self, id: &str) -> Result<Arc<Mutex<SessionSlot>>, ApiError> {
        self.sessions.lock().unwrap().get(id).cloned().ok_or_else(|| ApiError::not_found("session", id))
    }

    fn persist_if_closed(&self, slot: &mut SessionSlot) -> Result<(), ApiError> {
        if slot.persisted || slot.session.is_open() {
            return Ok(());
        }
        if let Some(store) = &self.store {
            store
                .lock()
                .unwrap()
                .persist(slot.session.trajectory(), &self.engine.lexicon, &self.config_hash)
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", e.to_string()))?;
        }
        slot.persisted = true;
        Ok(())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/challenges", post(create_challenge))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(session_view))
        .route("/api/sessions/{id}/guesses", post(guess))
        .route("/api/sessions/{id}/options", get(options))
        .route("/api/sessions/{id}/quit", post(quit))
        .route("/api/analysis/sessions/{id}", get(analysis))
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_on(listener, state).await
}

/// Serves on an already bound listener (useful with port 0).
pub async fn serve_on(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

async fn create_challenge(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult<crate::challenges::PlayerChallenge> {
    let req: ChallengeRequest = parse_body(&body)?;
    let difficulty = st.config.presets.resolve(req.difficulty);
    let seed = req.seed.unwrap_or_else(|| st.next_seed.fetch_add(1, Ordering::Relaxed));
    let ch = generate_challenge(
        &st.nav,
        &st.engine.lexicon,
        difficulty,
        req.topic.as_deref(),
        seed,
        &st.config.challenges,
    )?;
    let view = ch.player_view(&st.engine.lexicon);
    st.challenges.lock().unwrap().insert(ch.id.clone(), ch);
    Ok(Json(view))
}

async fn create_session(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult<SessionStarted> {
    let req: SessionRequest = parse_body(&body)?;
    let ch = st.challenge(&req.challenge_id).ok_or_else(|| ApiError::not_found("challenge", &req.challenge_id))?;
    let session = if st.manual_clock {
        let n = st.next_session.fetch_add(1, Ordering::Relaxed);
        GameSession::start_with(format!("s{n:06}"), ch, st.engine.clone(), req.mode, Clock::Manual { next: 0, step: 1 })?
    } else {
        GameSession::start(ch, st.engine.clone(), req.mode)?
    };
    let start = session.current();
    let reply = SessionStarted {
        session_id: session.id().to_string(),
        start_word: start.word.clone(),
        start_score: start.score.value(),
    };
    let slot = Arc::new(Mutex::new(SessionSlot { session, persisted: false }));
    st.sessions.lock().unwrap().insert(reply.session_id.clone(), slot);
    Ok(Json(reply))
}

async fn guess(State(st): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<GuessReply> {
    let req: GuessRequest = parse_body(&body)?;
    let slot = st.slot(&id)?;
    let mut slot = slot.lock().unwrap();
    let outcome = if req.option {
        slot.session.select_option(&req.word)?
    } else {
        slot.session.submit_guess(&req.word)?
    };
    st.persist_if_closed(&mut slot)?;
    Ok(Json(GuessReply { score: outcome.score.value(), hit: outcome.hit, step: outcome.step }))
}

async fn session_view(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<SessionView> {
    let slot = st.slot(&id)?;
    let slot = slot.lock().unwrap();
    let s = &slot.session;
    let lex = &st.engine.lexicon;
    let ch = s.challenge();
    Ok(Json(SessionView {
        session_id: s.id().to_string(),
        challenge_id: ch.id.clone(),
        start_word: lex.word(ch.start).to_string(),
        topic_hint: ch.topic.clone(),
        mode: s.mode(),
        outcome: s.outcome(),
        history: s
            .records()
            .iter()
            .map(|r| HistoryEntry {
                step: r.step,
                word: r.word.clone(),
                score: r.score.value(),
                source: r.source,
                timestamp: r.timestamp,
            })
            .collect(),
        target: (!s.is_open()).then(|| lex.word(ch.target).to_string()),
    }))
}

async fn options(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<OptionsReply> {
    let slot = st.slot(&id)?;
    let mut slot = slot.lock().unwrap();
    let set = slot.session.options(&st.config.proposals)?;
    let step = slot.session.current().step;
    let lex = &st.engine.lexicon;
    let mut words: Vec<String> = crate::proposals::ActionType::ALL
        .into_iter()
        .flat_map(|t| set.list(t).iter().map(|c| lex.word(*c).to_string()))
        .collect();
    let seed = fnv1a(id.as_bytes()) ^ (step as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    words.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(Json(OptionsReply { step, options: words }))
}

async fn quit(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<QuitReply> {
    let slot = st.slot(&id)?;
    let mut slot = slot.lock().unwrap();
    slot.session.quit()?;
    st.persist_if_closed(&mut slot)?;
    let target = slot.session.challenge().target;
    Ok(Json(QuitReply { outcome: slot.session.outcome(), reveal: st.engine.lexicon.word(target).to_string() }))
}

async fn analysis(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<crate::analysis::EurekaReport> {
    let slot = st.slot(&id)?;
    let traj = {
        let slot = slot.lock().unwrap();
        if slot.session.is_open() {
            return Err(ApiError::new(StatusCode::CONFLICT, "open", "analysis is available once the session is closed"));
        }
        slot.session.trajectory().clone()
    };
    let config = AnalysisConfig {
        theta_eureka: st.config.theta_eureka,
        proposals: st.config.proposals.clone(),
        ..AnalysisConfig::default()
    };
    let report = analyze_trajectory(&traj, &st.engine, &config)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "analysis", e.to_string()))?;
    Ok(Json(report))
}
