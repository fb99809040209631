mod audio;
mod dictionary;
mod messages;
mod patients;
mod programs;
mod sessions;
mod therapists;
mod utterances;

use std::sync::Arc;
use std::time::Instant;

use axum::extract::{DefaultBodyLimit, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use therapy_core::api::Patient;

use crate::auth::Principal;
use crate::error::{ApiError, ApiResult};
use crate::store::Db;
use crate::AppState;

/// Every route the service answers, as `(method, path)`. The shipped
/// `openapi.json` is checked against this list.
pub const ROUTES: &[(&str, &str)] = &[
    ("GET", "/health"),
    ("POST", "/therapists"),
    ("GET", "/therapists/{id}/patients"),
    ("POST", "/patients"),
    ("GET", "/patients/{id}"),
    ("GET", "/patients/{id}/next-prompt"),
    ("POST", "/patients/{id}/utterances"),
    ("GET", "/patients/{id}/sessions"),
    ("GET", "/patients/{id}/program"),
    ("POST", "/patients/{id}/messages"),
    ("GET", "/patients/{id}/messages"),
    ("GET", "/sessions/{id}"),
    ("GET", "/utterances/{id}"),
    ("GET", "/utterances/{id}/features"),
    ("GET", "/utterances/{id}/spectrogram"),
    ("POST", "/audio"),
    ("GET", "/audio/{id}"),
    ("GET", "/programs/{id}"),
    ("PUT", "/programs/{id}"),
    ("GET", "/dictionary"),
    ("POST", "/dictionary/items"),
    ("PUT", "/dictionary/items/{id}"),
];

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.config.max_upload_bytes;
    Router::new()
        .route("/health", get(health))
        .route("/therapists", post(therapists::create))
        .route("/therapists/{id}/patients", get(therapists::patients))
        .route("/patients", post(patients::register))
        .route("/patients/{id}", get(patients::get_one))
        .route("/patients/{id}/next-prompt", get(patients::next_prompt))
        .route("/patients/{id}/utterances", post(utterances::upload))
        .route("/patients/{id}/sessions", get(sessions::list))
        .route("/patients/{id}/program", get(programs::of_patient))
        .route(
            "/patients/{id}/messages",
            post(messages::send).get(messages::list),
        )
        .route("/sessions/{id}", get(sessions::detail))
        .route("/utterances/{id}", get(utterances::get_one))
        .route("/utterances/{id}/features", get(utterances::features))
        .route("/utterances/{id}/spectrogram", get(utterances::spectrogram))
        .route("/audio", post(audio::upload))
        .route("/audio/{id}", get(audio::download))
        .route("/programs/{id}", get(programs::get_one).put(programs::edit))
        .route("/dictionary", get(dictionary::list))
        .route("/dictionary/items", post(dictionary::create))
        .route("/dictionary/items/{id}", put(dictionary::update))
        .fallback(no_route)
        .layer(DefaultBodyLimit::max(limit))
        .layer(middleware::from_fn(log_request))
        .with_state(state)
}

async fn health(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let (patients, items) = state.store.read(|db| (db.patients.len(), db.dictionary.len()));
    Json(serde_json::json!({ "status": "ok", "patients": patients, "dictionary_items": items }))
}

async fn no_route() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "no_route", "no such endpoint")
}

async fn log_request(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let path = req.uri().path().to_owned();
    let started = Instant::now();
    let res = next.run(req).await;
    tracing::info!(
        %method,
        path,
        status = res.status().as_u16(),
        elapsed_ms = started.elapsed().as_secs_f64() * 1e3,
        "request"
    );
    res
}

fn now(state: &AppState) -> DateTime<Utc> {
    state.clock.now()
}

fn idle(state: &AppState) -> chrono::Duration {
    chrono::Duration::minutes(state.config.session_idle_minutes)
}

fn patient<'a>(db: &'a Db, id: &str) -> ApiResult<&'a Patient> {
    db.patients.get(id).ok_or_else(|| ApiError::not_found("patient", id))
}

/// Looks the patient up (404) and checks the caller may see it (403).
fn accessible_patient(db: &Db, who: &Principal, id: &str) -> ApiResult<Patient> {
    let p = patient(db, id)?;
    if who.may_access(p) {
        Ok(p.clone())
    } else {
        Err(ApiError::forbidden())
    }
}

fn audio_url(id: &str) -> String {
    format!("/audio/{id}")
}

fn created<T: serde::Serialize>(body: T) -> Response {
    (StatusCode::CREATED, Json(body)).into_response()
}
