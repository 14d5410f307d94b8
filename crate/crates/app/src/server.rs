//! HTTP service over the store.
//!
//! | method | path | body / query | response |
//! |---|---|---|---|
//! | GET | `/models` | | `[{id, vertex_count, triangle_count}]` |
//! | GET | `/models/{id}` | | `{id, vertex_count, triangle_count}` |
//! | PUT | `/models/{id}` | PLY or OBJ bytes | `{id, vertex_count, triangle_count}` |
//! | GET | `/models/{id}/mesh` | | binary PLY |
//! | POST | `/models/{id}/measure` | `{center, normal, radius?, rays?, height?, h?}` | measurement |
//! | GET | `/patients/{id}/sessions` | | `[{session, timestamp, model_id}]` |
//! | POST | `/patients/{id}/sessions` | `{timestamp, model_id, session?, meta?}` | `{session, timestamp, model_id}` |
//! | GET | `/patients/{id}/compare` | `probe=<json>&sessions=a,b` | `[{session, timestamp, perimeter_cm, area_cm2}]` |
//!
//! Errors come back as `{"error": kind, "message": text}`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use girthkit::mesh::{mesh_from_bytes, MeshFormat, PlyEncoding};
use serde::Deserialize;

use crate::config::MeasureDefaults;
use crate::error::{AppError, AppResult};
use crate::store::Store;
use crate::wire::{render_measurement, ErrorBody, MeasureRequest, NewSession};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub measure: MeasureDefaults,
}

impl AppError {
    fn status(&self) -> StatusCode {
        use girthkit::Error as E;
        match self {
            AppError::UnknownModel(_) | AppError::UnknownPatient(_) | AppError::UnknownSession { .. } => {
                StatusCode::NOT_FOUND
            }
            AppError::Conflict(_) => StatusCode::CONFLICT,
            AppError::BadRequest(_) | AppError::Usage(_) => StatusCode::BAD_REQUEST,
            AppError::Core(E::InvalidParam(_) | E::Parse { .. } | E::EmptyMesh) => StatusCode::BAD_REQUEST,
            AppError::Core(E::NoSection { .. }) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        (self.status(), Json(ErrorBody::from(&self))).into_response()
    }
}

fn json_body<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> AppResult<T> {
    serde_json::from_slice(bytes).map_err(|e| AppError::BadRequest(format!("malformed JSON body: {e}")))
}

/// Runs store work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> AppResult<T> + Send + 'static) -> AppResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(AppError::Startup(format!("worker failed: {e}"))))
}

fn measurement_response(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

async fn list_models(State(s): State<AppState>) -> impl IntoResponse {
    Json(s.store.models())
}

async fn get_model(State(s): State<AppState>, Path(id): Path<String>) -> AppResult<impl IntoResponse> {
    Ok(Json(s.store.model(&id)?))
}

async fn put_model(State(s): State<AppState>, Path(id): Path<String>, body: Bytes) -> AppResult<impl IntoResponse> {
    let summary = blocking(move || {
        let format = if body.starts_with(b"ply") {
            MeshFormat::Ply(PlyEncoding::BinaryLittleEndian)
        } else {
            MeshFormat::Obj
        };
        let mesh = mesh_from_bytes(&body, format, &format!("upload {id}"))?;
        s.store.put_model(&id, &mesh)
    })
    .await?;
    Ok(Json(summary))
}

async fn model_mesh(State(s): State<AppState>, Path(id): Path<String>) -> AppResult<impl IntoResponse> {
    let bytes = blocking(move || s.store.model_bytes(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], bytes))
}

async fn measure_model(State(s): State<AppState>, Path(id): Path<String>, body: Bytes) -> AppResult<Response> {
    let request: MeasureRequest = json_body(&body)?;
    let text = blocking(move || {
        let bvh = s.store.model_bvh(&id)?;
        Ok(render_measurement(&request.measure(&bvh, &s.measure)?))
    })
    .await?;
    Ok(measurement_response(text))
}

async fn list_sessions(State(s): State<AppState>, Path(patient): Path<String>) -> AppResult<impl IntoResponse> {
    Ok(Json(s.store.sessions(&patient)?))
}

async fn add_session(
    State(s): State<AppState>,
    Path(patient): Path<String>,
    body: Bytes,
) -> AppResult<impl IntoResponse> {
    let new: NewSession = json_body(&body)?;
    let summary = blocking(move || s.store.add_session(&patient, new)).await?;
    Ok((StatusCode::CREATED, Json(summary)))
}

#[derive(Deserialize)]
struct CompareQuery {
    probe: String,
    sessions: Option<String>,
}

/// Splits a comma-separated session list, ignoring empty entries.
pub fn session_list(text: &str) -> Vec<String> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

async fn compare(
    State(s): State<AppState>,
    Path(patient): Path<String>,
    query: Result<Query<CompareQuery>, axum::extract::rejection::QueryRejection>,
) -> AppResult<impl IntoResponse> {
    let Query(q) = query.map_err(|e| AppError::BadRequest(e.body_text()))?;
    let request: MeasureRequest = json_body(q.probe.as_bytes())?;
    let only = q.sessions.as_deref().map(session_list);
    let series = blocking(move || s.store.compare(&patient, &request, only.as_deref(), &s.measure)).await?;
    Ok(Json(series))
}

async fn no_route() -> impl IntoResponse {
    let body = ErrorBody {
        error: "NotFound".into(),
        message: "no such endpoint".into(),
    };
    (StatusCode::NOT_FOUND, Json(body))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/models", get(list_models))
        .route("/models/{id}", get(get_model).put(put_model))
        .route("/models/{id}/mesh", get(model_mesh))
        .route("/models/{id}/measure", axum::routing::post(measure_model))
        .route("/patients/{id}/sessions", get(list_sessions).post(add_session))
        .route("/patients/{id}/compare", get(compare))
        .fallback(no_route)
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped. Binding failures,
/// a busy port among them, are startup errors.
pub async fn serve(state: AppState, addr: &str) -> AppResult<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| AppError::Startup(format!("cannot bind {addr}: {e}")))?;
    log::info!("serving {} on {}", state.store.root().display(), addr);
    axum::serve(listener, router(state))
        .await
        .map_err(|e| AppError::Startup(e.to_string()))
}
