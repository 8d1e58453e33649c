//! HTTP routes.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/assignments` | every (annotator, batch) with progress |
//! | GET | `/api/tasks/{annotator}/{batch}` | task items in sheet order |
//! | POST | `/api/decisions` | record one decision |
//! | GET | `/api/export` | decision records TSV, filters `annotator`, `set`, `batch` |
//!
//! Anything else is served from the UI bundle directory when one is configured.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use lexext_core::analytics::records::to_tsv;
use tower_http::services::ServeDir;

use crate::config::ServiceConfig;
use crate::error::ServiceError;
use crate::state::{
    AppState, AssignmentView, ExportFilter, SubmitRequest, SubmitResponse, TaskItem,
};

type Shared = Arc<AppState>;

async fn assignments(State(state): State<Shared>) -> Json<Vec<AssignmentView>> {
    Json(state.assignments())
}

async fn tasks(
    State(state): State<Shared>,
    Path((annotator, batch)): Path<(String, u8)>,
) -> Result<Json<Vec<TaskItem>>, ServiceError> {
    Ok(Json(state.list_tasks(&annotator, batch)?))
}

async fn submit(
    State(state): State<Shared>,
    Json(req): Json<SubmitRequest>,
) -> Result<Json<SubmitResponse>, ServiceError> {
    let resp = tokio::task::spawn_blocking(move || state.submit(req))
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))??;
    Ok(Json(resp))
}

async fn export(
    State(state): State<Shared>,
    Query(filter): Query<ExportFilter>,
) -> Result<impl IntoResponse, ServiceError> {
    let records = state.export(&filter)?;
    Ok((
        [(
            header::CONTENT_TYPE,
            "text/tab-separated-values; charset=utf-8",
        )],
        to_tsv(&records),
    ))
}

pub fn router(state: Shared, ui_dir: Option<&std::path::Path>) -> Router {
    let api = Router::new()
        .route("/api/assignments", get(assignments))
        .route("/api/tasks/{annotator}/{batch}", get(tasks))
        .route("/api/decisions", post(submit))
        .route("/api/export", get(export))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Binds and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = Arc::new(AppState::open(&config.design, &config.log)?);
    let app = router(state, config.ui_dir.as_deref());
    let addr = format!("{}:{}", config.bind, config.port);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|e| ServiceError::Io(format!("bind {addr}: {e}")))?;
    log::info!("annotation service listening on http://{addr}");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| ServiceError::Io(e.to_string()))
}
