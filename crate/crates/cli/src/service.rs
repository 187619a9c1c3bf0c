//! JSON API under `/api`.
//!
//! Reranking reads a snapshot of the requested profile; profile updates are
//! serialized, persisted with a temp-file rename, and only then published.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use profilerank_core::io::write_atomic;
use profilerank_core::profiles::profiles_to_jsonl;
use profilerank_core::rankers::{rerank_explained, TermContribution};
use profilerank_core::{CandidatePool, Engine, Error, Mu, RankerConfig, RankerKind, RunVariant, UserProfile};

use crate::CliError;

pub const DEFAULT_K: usize = 10;
const SNIPPET_CHARS: usize = 240;

pub struct AppState {
    engine: Engine,
    pools: BTreeMap<String, CandidatePool>,
    profiles: RwLock<BTreeMap<String, Arc<UserProfile>>>,
    profiles_path: Option<PathBuf>,
    defaults: RankerConfig,
    write_gate: tokio::sync::Mutex<()>,
}

impl AppState {
    pub fn new(
        engine: Engine,
        pools: Vec<CandidatePool>,
        profiles: BTreeMap<String, UserProfile>,
        profiles_path: Option<PathBuf>,
        defaults: RankerConfig,
    ) -> Arc<Self> {
        Arc::new(Self {
            engine,
            pools: pools.into_iter().map(|p| (p.query_id.clone(), p)).collect(),
            profiles: RwLock::new(profiles.into_iter().map(|(k, v)| (k, Arc::new(v))).collect()),
            profiles_path,
            defaults,
            write_gate: tokio::sync::Mutex::new(()),
        })
    }

    fn profile(&self, user_id: &str) -> Option<Arc<UserProfile>> {
        self.profiles.read().expect("profile lock poisoned").get(user_id).cloned()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::UnknownUser(_) | Error::UnknownQuery(_) | Error::UnknownDocument(_) => StatusCode::NOT_FOUND,
            Error::InvalidConfig(_)
            | Error::MissingEmbeddings
            | Error::MissingProfile
            | Error::MissingUserModel
            | Error::EmptyText
            | Error::ZeroProbability(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Error::UnknownField(_) | Error::InvalidInput(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryInfo {
    pub query_id: String,
    pub query_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RerankRequest {
    pub user_id: String,
    pub query_id: String,
    #[serde(default)]
    pub ranker: Option<RankerKind>,
    #[serde(default)]
    pub variant: Option<RunVariant>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub mu: Option<Mu>,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankItem {
    pub rank: usize,
    pub doc_id: String,
    pub title: String,
    pub snippet: String,
    pub score: f64,
    pub explanation: Vec<TermContribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankResponse {
    pub user_id: String,
    pub query_id: String,
    pub ranker: RankerKind,
    pub variant: RunVariant,
    /// The lambda actually applied (1 for query-only runs).
    pub lambda: f64,
    pub pool_size: usize,
    pub results: Vec<RerankItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocView {
    pub doc_id: String,
    pub title: String,
    pub summary: String,
    pub comments: Vec<String>,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/queries", get(list_queries))
        .route("/api/users", get(list_users))
        .route("/api/users/{id}/profile", get(get_profile).put(put_profile))
        .route("/api/rerank", post(post_rerank))
        .route("/api/docs/{id}", get(get_doc))
        .with_state(state)
}

async fn list_queries(State(s): State<Arc<AppState>>) -> Json<Vec<QueryInfo>> {
    Json(
        s.pools
            .values()
            .map(|p| QueryInfo {
                query_id: p.query_id.clone(),
                query_text: p.query_text.clone(),
            })
            .collect(),
    )
}

async fn list_users(State(s): State<Arc<AppState>>) -> Json<Vec<String>> {
    Json(s.profiles.read().expect("profile lock poisoned").keys().cloned().collect())
}

async fn get_profile(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<UserProfile> {
    let p = s.profile(&id).ok_or(Error::UnknownUser(id))?;
    Ok(Json((*p).clone()))
}

async fn put_profile(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<UserProfile>, JsonRejection>,
) -> ApiResult<UserProfile> {
    let Json(mut profile) = body?;
    if profile.user_id != id {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            format!("body user_id `{}` does not match path `{id}`", profile.user_id),
        ));
    }
    let _gate = s.write_gate.lock().await;
    let current = s.profile(&id).ok_or_else(|| Error::UnknownUser(id.clone()))?;
    // entity links are managed server-side
    profile.entities = current.entities.clone();
    profile.fill_toggles();
    let profile = Arc::new(profile);
    let mut next = s.profiles.read().expect("profile lock poisoned").clone();
    next.insert(id, profile.clone());
    if let Some(path) = &s.profiles_path {
        let text = profiles_to_jsonl(next.values().map(|p| &**p))?;
        write_atomic(path, text.as_bytes())?;
    }
    *s.profiles.write().expect("profile lock poisoned") = next;
    Ok(Json((*profile).clone()))
}

fn snippet(text: &str) -> String {
    match text.char_indices().nth(SNIPPET_CHARS) {
        Some((i, _)) => format!("{}...", text[..i].trim_end()),
        None => text.to_string(),
    }
}

async fn post_rerank(
    State(s): State<Arc<AppState>>,
    body: Result<Json<RerankRequest>, JsonRejection>,
) -> ApiResult<RerankResponse> {
    let Json(req) = body?;
    let pool = s
        .pools
        .get(&req.query_id)
        .ok_or_else(|| Error::UnknownQuery(req.query_id.clone()))?;
    let profile = s.profile(&req.user_id).ok_or_else(|| Error::UnknownUser(req.user_id.clone()))?;
    let mut cfg = RankerConfig {
        kind: req.ranker.unwrap_or(s.defaults.kind),
        ..s.defaults
    };
    if let Some(l) = req.lambda {
        cfg.lambda = l;
    }
    if let Some(m) = req.mu {
        cfg.mu = m;
    }
    cfg.validate()?;
    let variant = req
        .variant
        .unwrap_or(RunVariant::Profile(profilerank_core::ProfileVariant::Full));
    let engine = &s.engine;
    let explained = rerank_explained(engine, pool, &req.user_id, Some(&profile), &cfg, variant)?;
    let k = req.k.unwrap_or(DEFAULT_K).min(explained.run.len());
    let results = explained
        .run
        .entries
        .iter()
        .zip(explained.explanations)
        .take(k)
        .map(|(e, explanation)| {
            let doc = engine.corpus.get(&e.doc_id).expect("ranked docs come from the corpus");
            RerankItem {
                rank: e.rank,
                doc_id: e.doc_id.clone(),
                title: doc.title.clone(),
                snippet: snippet(&doc.summary),
                score: e.score,
                explanation,
            }
        })
        .collect();
    Ok(Json(RerankResponse {
        user_id: req.user_id,
        query_id: req.query_id,
        ranker: cfg.kind,
        variant,
        lambda: cfg.effective_lambda(variant),
        pool_size: pool.doc_ids.len(),
        results,
    }))
}

async fn get_doc(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<DocView> {
    let d = s.engine.corpus.get(&id).ok_or(Error::UnknownDocument(id))?;
    Ok(Json(DocView {
        doc_id: d.doc_id.clone(),
        title: d.title.clone(),
        summary: d.summary.clone(),
        comments: d.comments.clone(),
    }))
}

pub fn serve(state: Arc<AppState>, host: &str, port: u16, static_dir: Option<PathBuf>) -> Result<(), CliError> {
    let mut app = router(state);
    if let Some(dir) = static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    let addr = format!("{host}:{port}");
    let runtime = tokio::runtime::Runtime::new()
        .map_err(|e| CliError::Usage(format!("cannot start runtime: {e}")))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::Usage(format!("cannot bind {addr}: {e}")))?;
        eprintln!("listening on http://{addr}");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::Usage(format!("server error: {e}")))
    })
}
