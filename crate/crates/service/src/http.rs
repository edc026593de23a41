//! HTTP routes.
//!
//! - `POST /api/session`: client metadata in, session, game config and
//!   treatment out.
//! - `POST /api/trajectory`: an upload in, acceptance or a rejection reason
//!   out.
//! - `GET /api/summary`: per-arm counts and touch statistics.
//! - `GET /api/export`: accepted trajectories in the trajectory text format.

use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use kpirl_core::mdp::write_trajectory;
use serde::{Deserialize, Serialize};

use crate::model::{ClientMetadata, IngestOutcome, RejectReason, TrajectoryUpload};
use crate::{Service, ServiceError};

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/api/session", post(create_session))
        .route("/api/trajectory", post(ingest))
        .route("/api/summary", get(summary))
        .route("/api/export", get(export))
        .with_state(service)
}

struct Failure(ServiceError);

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        log::error!("{}", self.0);
        (StatusCode::INTERNAL_SERVER_ERROR, Json(serde_json::json!({ "error": self.0.to_string() }))).into_response()
    }
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, Failure> {
    tokio::task::spawn_blocking(f).await.map_err(|e| Failure(ServiceError::Store(e.to_string())))?.map_err(Failure)
}

async fn create_session(
    State(service): State<Arc<Service>>,
    Json(metadata): Json<ClientMetadata>,
) -> Result<Response, Failure> {
    let (_, body) = blocking(move || service.create_session(metadata)).await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

async fn ingest(
    State(service): State<Arc<Service>>,
    Json(upload): Json<TrajectoryUpload>,
) -> Result<Response, Failure> {
    let outcome = blocking(move || service.ingest(upload)).await?;
    let status = match &outcome {
        IngestOutcome::Accepted { .. } => StatusCode::OK,
        IngestOutcome::Rejected { reason: RejectReason::UnknownSession, .. } => StatusCode::NOT_FOUND,
        IngestOutcome::Rejected { reason: RejectReason::AlreadyRecorded, .. } => StatusCode::CONFLICT,
        IngestOutcome::Rejected { .. } => StatusCode::UNPROCESSABLE_ENTITY,
    };
    Ok((status, Json(outcome)).into_response())
}

async fn summary(State(service): State<Arc<Service>>) -> Response {
    Json(service.summary()).into_response()
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    arm: Option<String>,
}

#[derive(Debug, Serialize)]
struct ExportItem {
    session_id: uuid::Uuid,
    arm: String,
    phase: crate::model::Phase,
    trajectory: String,
}

async fn export(State(service): State<Arc<Service>>, Query(q): Query<ExportQuery>) -> Result<Response, Failure> {
    let items = blocking(move || {
        service
            .export(q.arm.as_deref())?
            .into_iter()
            .map(|e| {
                let mut text = Vec::new();
                write_trajectory(&mut text, &e.trajectory).map_err(|e| ServiceError::Store(e.to_string()))?;
                Ok(ExportItem {
                    session_id: e.session_id,
                    arm: e.arm,
                    phase: e.phase,
                    trajectory: String::from_utf8(text).expect("trajectory text is UTF-8"),
                })
            })
            .collect::<Result<Vec<_>, ServiceError>>()
    })
    .await?;
    Ok(Json(items).into_response())
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, service: Arc<Service>) -> std::io::Result<()> {
    axum::serve(listener, router(service)).await
}
