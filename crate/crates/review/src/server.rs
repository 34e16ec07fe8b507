//! HTTP routes over a shared [`Session`].

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use tokio::net::TcpListener;

use dezh_core::decisions::Decision;

use crate::error::{Error, Result};
use crate::session::{Session, StatusFilter};

pub type SharedSession = Arc<Mutex<Session>>;

#[derive(Debug, Deserialize)]
struct CandidateQuery {
    status: Option<StatusFilter>,
}

/// `POST /decisions` body; the server assigns the timestamp.
#[derive(Debug, Deserialize)]
pub struct DecisionRequest {
    pub candidate_key: String,
    pub decision: Decision,
    #[serde(default)]
    pub annotator: String,
}

fn error_response(status: StatusCode, message: impl ToString) -> Response {
    (status, Json(serde_json::json!({ "error": message.to_string() }))).into_response()
}

fn lock(session: &SharedSession) -> std::sync::MutexGuard<'_, Session> {
    session.lock().unwrap_or_else(|p| p.into_inner())
}

async fn candidates(State(session): State<SharedSession>, Query(q): Query<CandidateQuery>) -> Response {
    let views = lock(&session).candidates(q.status.unwrap_or(StatusFilter::All));
    Json(views).into_response()
}

async fn decisions(State(session): State<SharedSession>, Json(req): Json<DecisionRequest>) -> Response {
    let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
    let result = lock(&session).record(&req.candidate_key, req.decision, &req.annotator, timestamp);
    match result {
        Ok(record) => (StatusCode::CREATED, Json(record)).into_response(),
        Err(e @ Error::UnknownCandidate { .. }) => error_response(StatusCode::NOT_FOUND, e),
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn export(State(session): State<SharedSession>) -> Response {
    let tsv = lock(&session).export().and_then(|c| Ok(c.to_tsv()?));
    match tsv {
        Ok(body) => (
            [
                (header::CONTENT_TYPE, "text/tab-separated-values; charset=utf-8"),
                (header::CONTENT_DISPOSITION, "attachment; filename=\"export.tsv\""),
            ],
            body,
        )
            .into_response(),
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn stats(State(session): State<SharedSession>) -> Response {
    Json(lock(&session).stats()).into_response()
}

pub fn router(session: SharedSession) -> Router {
    Router::new()
        .route("/candidates", get(candidates))
        .route("/decisions", post(decisions))
        .route("/export", get(export))
        .route("/stats", get(stats))
        .with_state(session)
}

/// Binds `addr`, failing immediately if it is taken.
pub async fn bind(addr: SocketAddr) -> Result<TcpListener> {
    TcpListener::bind(addr).await.map_err(|source| Error::Bind {
        addr: addr.to_string(),
        source,
    })
}

/// Serves `session` on `listener` until `shutdown` resolves.
pub async fn serve_with_shutdown(
    listener: TcpListener,
    session: Session,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<()> {
    let addr = listener.local_addr().ok();
    axum::serve(listener, router(Arc::new(Mutex::new(session))))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|source| Error::Bind {
            addr: addr.map(|a| a.to_string()).unwrap_or_default(),
            source,
        })
}
