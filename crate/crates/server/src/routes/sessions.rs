use std::sync::Arc;

use axum::extract::{Path, State};
use axum::Json;
use therapy_core::api::{SessionDetail, SessionEntryDetail, SessionSummary};

use super::{accessible_patient, audio_url, idle, now};
use crate::auth::Principal;
use crate::error::{ApiError, ApiResult};
use crate::sessions::effective;
use crate::AppState;

/// Sessions of a patient, oldest first.
pub async fn list(
    State(state): State<Arc<AppState>>,
    who: Principal,
    Path(id): Path<String>,
) -> ApiResult<Json<Vec<SessionSummary>>> {
    let (now, idle) = (now(&state), idle(&state));
    state.store.read(|db| {
        accessible_patient(db, &who, &id)?;
        Ok(Json(
            db.sessions_of(&id)
                .into_iter()
                .map(|s| effective(s, now, idle).summary())
                .collect(),
        ))
    })
}

pub async fn detail(
    State(state): State<Arc<AppState>>,
    who: Principal,
    Path(id): Path<String>,
) -> ApiResult<Json<SessionDetail>> {
    let (now, idle) = (now(&state), idle(&state));
    let (session, utterances) = state.store.read(|db| {
        let s = db.sessions.get(&id).ok_or_else(|| ApiError::not_found("session", &id))?;
        accessible_patient(db, &who, &s.patient_id)?;
        let utterances: Vec<_> = s
            .entries
            .iter()
            .map(|e| db.utterances.get(&e.utterance_id).cloned())
            .collect::<Option<_>>()
            .ok_or_else(|| ApiError::internal(format!("session {id} references a missing utterance")))?;
        Ok::<_, ApiError>((effective(s, now, idle), utterances))
    })?;
    let mut entries = Vec::with_capacity(session.entries.len());
    for (entry, u) in session.entries.iter().zip(&utterances) {
        entries.push(SessionEntryDetail {
            entry: entry.clone(),
            audio_url: audio_url(&u.audio_ref),
            reference_audio_url: audio_url(&u.reference_audio_id),
            spectrogram_url: format!("/utterances/{}/spectrogram", u.id),
            features_url: format!("/utterances/{}/features", u.id),
            report: state.get_json(&u.report_ref).await?,
            feedback: state.get_json(&u.feedback_ref).await?,
        });
    }
    Ok(Json(SessionDetail {
        id: session.id,
        patient_id: session.patient_id,
        mode: session.mode,
        started_at: session.started_at,
        ended_at: session.ended_at,
        total_practice_seconds: session.total_practice_seconds,
        entries,
    }))
}
