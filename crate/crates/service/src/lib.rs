//! HTTP/JSON advisory service: patient sessions, recommendation enumeration,
//! compliance checks and evidence confirmation.
//!
//! Routes:
//! - `POST /sessions` with `{"profile": "<facts>"}` or a plain-text body
//! - `GET /sessions/{id}/profile`
//! - `GET /sessions/{id}/recommendations`
//! - `POST /sessions/{id}/check` with `{"treatment": ..., "cor_class": ...}`
//! - `POST /sessions/{id}/evidence` with `{"confirm": ["atom", ...]}`

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap};
use std::hash::{Hash, Hasher};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex as StdMutex};
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gasp_core::compliance::{
    confirm_evidence, Advisor, CheckOptions, ComplianceError, ComplianceReport, CorClass, Recommendation,
};
use gasp_core::engine::{EngineConfig, SolveError};
use gasp_core::hf_kb::{in_vocabulary, load_profile, PatientProfile, ProfileError};
use gasp_core::syntax::{parse_atom, Atom};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{Mutex, RwLock};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use uuid::Uuid;

/// Grounded advisors kept per distinct profile; cleared when full.
const CACHE_CAPACITY: usize = 256;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("unknown session `{0}`")]
    NotFound(String),
    #[error("{0}")]
    Unprocessable(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(json!({ "error": self.to_string() }))).into_response()
    }
}

impl From<ComplianceError> for ApiError {
    fn from(e: ComplianceError) -> Self {
        match e {
            ComplianceError::UnknownTreatment(_)
            | ComplianceError::UnknownClass(_)
            | ComplianceError::UnknownAtom(_) => ApiError::BadRequest(e.to_string()),
            ComplianceError::Solve(SolveError::DepthLimitExceeded { .. }) => {
                ApiError::Internal(format!("solver gave up: {e}; the profile may need a larger depth limit"))
            }
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl From<ProfileError> for ApiError {
    fn from(e: ProfileError) -> Self {
        ApiError::Unprocessable(e.to_string())
    }
}

#[derive(Clone, Debug, Default)]
pub struct ServiceConfig {
    pub engine: EngineConfig,
    /// Origin allowed by CORS; any origin when unset.
    pub cors_origin: Option<String>,
    /// Append-only JSON-lines log of session profiles, replayed at startup.
    pub persist_path: Option<PathBuf>,
}

struct Session {
    profile: PatientProfile,
    reports: Vec<ComplianceReport>,
}

pub struct AppState {
    config: ServiceConfig,
    sessions: RwLock<HashMap<Uuid, Arc<Mutex<Session>>>>,
    cache: StdMutex<HashMap<String, Arc<Advisor>>>,
    log: Option<StdMutex<std::fs::File>>,
}

#[derive(Serialize, Deserialize)]
struct LogEntry {
    session: Uuid,
    profile: String,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> std::io::Result<Arc<Self>> {
        let mut sessions = HashMap::new();
        let log = match &config.persist_path {
            Some(path) => {
                replay(path, &mut sessions)?;
                Some(StdMutex::new(std::fs::OpenOptions::new().create(true).append(true).open(path)?))
            }
            None => None,
        };
        Ok(Arc::new(AppState { config, sessions: RwLock::new(sessions), cache: StdMutex::new(HashMap::new()), log }))
    }

    pub async fn session_count(&self) -> usize {
        self.sessions.read().await.len()
    }

    fn persist(&self, session: Uuid, profile: &PatientProfile) -> Result<(), ApiError> {
        let Some(log) = &self.log else { return Ok(()) };
        let line =
            serde_json::to_string(&LogEntry { session, profile: profile.to_text() }).expect("log entry serializes");
        let mut file = log.lock().expect("log lock");
        writeln!(file, "{line}").map_err(|e| ApiError::Internal(format!("cannot persist session: {e}")))
    }

    async fn session(&self, id: &str) -> Result<(Uuid, Arc<Mutex<Session>>), ApiError> {
        let uuid = Uuid::parse_str(id).map_err(|_| ApiError::NotFound(id.to_string()))?;
        let session = self.sessions.read().await.get(&uuid).cloned();
        session.map(|s| (uuid, s)).ok_or_else(|| ApiError::NotFound(id.to_string()))
    }

    /// The grounded advisor for a profile, built once per distinct profile.
    async fn advisor(self: &Arc<Self>, profile: &PatientProfile) -> Result<(Arc<Advisor>, bool), ApiError> {
        let key = profile.to_text();
        if let Some(a) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok((a.clone(), true));
        }
        let state = self.clone();
        let owned = profile.clone();
        let advisor = tokio::task::spawn_blocking(move || Advisor::with_config(owned, state.config.engine.clone()))
            .await
            .map_err(|e| ApiError::Internal(e.to_string()))??;
        let advisor = Arc::new(advisor);
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.len() >= CACHE_CAPACITY {
            cache.clear();
        }
        cache.insert(key, advisor.clone());
        Ok((advisor, false))
    }
}

fn replay(path: &Path, sessions: &mut HashMap<Uuid, Arc<Mutex<Session>>>) -> std::io::Result<()> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(e),
    };
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let bad = |m: String| std::io::Error::new(std::io::ErrorKind::InvalidData, m);
        let entry: LogEntry = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        let profile = load_profile(&entry.profile).map_err(|e| bad(e.to_string()))?;
        sessions.insert(entry.session, Arc::new(Mutex::new(Session { profile, reports: Vec::new() })));
    }
    Ok(())
}

pub fn profile_hash(profile: &PatientProfile) -> String {
    let mut h = DefaultHasher::new();
    profile.to_text().hash(&mut h);
    format!("{:016x}", h.finish())
}

fn profile_view(profile: &PatientProfile) -> Value {
    json!({
        "facts": profile.facts(),
        "record": profile,
        "text": profile.to_text(),
        "profile_hash": profile_hash(profile),
    })
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1000.0
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("malformed body: {e}")))
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = match &state.config.cors_origin {
        Some(origin) => match HeaderValue::from_str(origin) {
            Ok(v) => CorsLayer::new().allow_origin(AllowOrigin::exact(v)),
            Err(_) => CorsLayer::new(),
        },
        None => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/profile", get(get_profile))
        .route("/sessions/{id}/recommendations", get(recommendations))
        .route("/sessions/{id}/check", post(check))
        .route("/sessions/{id}/evidence", post(evidence))
        .layer(cors)
        .with_state(state)
}

#[derive(Deserialize)]
struct CreateBody {
    profile: String,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let start = Instant::now();
    let is_json = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"));
    let text = if is_json {
        parse_json::<CreateBody>(&body)?.profile
    } else {
        String::from_utf8(body.to_vec()).map_err(|_| ApiError::BadRequest("profile is not UTF-8".into()))?
    };
    let profile = load_profile(&text)?;
    let id = Uuid::new_v4();
    state.persist(id, &profile)?;
    let view = profile_view(&profile);
    state.sessions.write().await.insert(id, Arc::new(Mutex::new(Session { profile, reports: Vec::new() })));
    Ok((StatusCode::CREATED, Json(json!({ "id": id, "profile": view, "timings_ms": { "parse": millis(start) } }))))
}

async fn get_profile(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<Value>, ApiError> {
    let start = Instant::now();
    let (_, session) = state.session(&id).await?;
    let session = session.lock().await;
    Ok(Json(json!({
        "id": id,
        "profile": profile_view(&session.profile),
        "checks": session.reports.len(),
        "timings_ms": { "lookup": millis(start) },
    })))
}

async fn recommendations(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<Value>, ApiError> {
    let (_, session) = state.session(&id).await?;
    let profile = session.lock().await.profile.clone();
    let start = Instant::now();
    let (advisor, cached) = state.advisor(&profile).await?;
    let grounding = millis(start);
    let start = Instant::now();
    let recs = tokio::task::spawn_blocking(move || advisor.recommendations())
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(Json(json!({
        "recommendations": recs,
        "profile_hash": profile_hash(&profile),
        "timings_ms": { "grounding": grounding, "enumeration": millis(start), "cached": cached },
    })))
}

#[derive(Deserialize)]
struct CheckBody {
    treatment: String,
    cor_class: String,
    #[serde(default)]
    max_explanations: Option<usize>,
    #[serde(default)]
    minimal: bool,
}

async fn check(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let (_, session) = state.session(&id).await?;
    let req: CheckBody = parse_json(&body)?;
    let proposed = Recommendation { treatment: req.treatment, cor_class: req.cor_class.parse::<CorClass>()? };
    let mut opts = CheckOptions { minimal_only: req.minimal, ..CheckOptions::default() };
    if let Some(m) = req.max_explanations {
        opts.max_explanations = m;
    }
    let profile = session.lock().await.profile.clone();
    let (advisor, cached) = state.advisor(&profile).await?;
    let report = tokio::task::spawn_blocking(move || advisor.check(&proposed, &opts))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    let mut out = serde_json::to_value(&report).expect("report serializes");
    out["profile_hash"] = json!(profile_hash(&profile));
    out["timings_ms"]["cached"] = json!(cached);
    {
        let mut s = session.lock().await;
        // a concurrent evidence update may have changed the profile meanwhile
        if s.profile == profile {
            s.reports.push(report);
        }
    }
    Ok(Json(out))
}

#[derive(Deserialize)]
struct EvidenceBody {
    confirm: Vec<String>,
}

async fn evidence(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let start = Instant::now();
    let (uuid, session) = state.session(&id).await?;
    let req: EvidenceBody = parse_json(&body)?;
    let mut atoms: BTreeSet<Atom> = BTreeSet::new();
    for text in &req.confirm {
        let atom = parse_atom(text).map_err(|e| ApiError::BadRequest(format!("`{text}`: {e}")))?;
        if !in_vocabulary(&atom) {
            return Err(ComplianceError::UnknownAtom(atom.to_string()).into());
        }
        atoms.insert(atom);
    }
    // held across the update so concurrent mutations queue
    let mut s = session.lock().await;
    let updated = confirm_evidence(&s.profile, &atoms)?;
    state.persist(uuid, &updated)?;
    s.profile = updated;
    Ok(Json(json!({
        "id": id,
        "profile": profile_view(&s.profile),
        "timings_ms": { "update": millis(start) },
    })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_statuses() {
        let e: ApiError = ComplianceError::UnknownAtom("x".into()).into();
        assert_eq!(e.status(), StatusCode::BAD_REQUEST);
        let e: ApiError = ComplianceError::Solve(SolveError::DepthLimitExceeded { limit: 3 }).into();
        assert_eq!(e.status(), StatusCode::INTERNAL_SERVER_ERROR);
        assert!(e.to_string().contains("depth"));
        let e: ApiError = load_profile("p :- q.").unwrap_err().into();
        assert_eq!(e.status(), StatusCode::UNPROCESSABLE_ENTITY);
    }

    #[test]
    fn profile_hash_is_stable() {
        let a = load_profile("evidence(accf_stage_c). diagnosis(diabetes).").unwrap();
        let b = load_profile("diagnosis(diabetes).\nevidence(accf_stage_c).").unwrap();
        assert_eq!(profile_hash(&a), profile_hash(&b));
        assert_ne!(profile_hash(&a), profile_hash(&PatientProfile::default()));
    }
}
