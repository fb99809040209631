use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::response::Response;
use axum::Json;
use serde::Deserialize;
use therapy_core::api::{MessageKind, NewMessage, Party, TherapistMessage};

use super::{accessible_patient, audio_url, created, now};
use crate::auth::Principal;
use crate::error::{ApiError, ApiResult};
use crate::store::Op;
use crate::{new_id, AppState};

fn party(who: &Principal) -> Party {
    match who {
        Principal::Therapist(_) => Party::Therapist,
        Principal::Patient(_) => Party::Patient,
    }
}

pub async fn send(
    State(state): State<Arc<AppState>>,
    who: Principal,
    Path(id): Path<String>,
    Json(msg): Json<NewMessage>,
) -> ApiResult<Response> {
    state.store.read(|db| accessible_patient(db, &who, &id))?;
    let _guard = state.lock_patient(&id).await;
    let at = now(&state);
    let mut ops = Vec::new();
    let (kind, payload_ref, url) = match msg {
        NewMessage::Text { text } => {
            if text.trim().is_empty() {
                return Err(ApiError::validation(vec!["text".into()], "message text is empty"));
            }
            (MessageKind::Text, text, None)
        }
        NewMessage::Voice { audio_id } => {
            let meta = state.store.read(|db| db.audio.get(&audio_id).cloned()).ok_or_else(|| {
                ApiError::validation(vec!["audio_id".into()], format!("audio {audio_id} has not been uploaded"))
            })?;
            if !meta.uploaded_by.contains(&who.token()) {
                return Err(ApiError::forbidden());
            }
            ops.push(Op::AudioLink {
                id: audio_id.clone(),
                bytes: meta.bytes,
                at,
                uploader: None,
                patient: Some(id.clone()),
            });
            let url = audio_url(&audio_id);
            (MessageKind::Voice, audio_id, Some(url))
        }
    };
    let message = TherapistMessage {
        id: new_id(),
        from: party(&who),
        patient_id: id,
        kind,
        payload_ref,
        audio_url: url,
        created_at: at,
        delivered: false,
        delivered_at: None,
    };
    ops.push(Op::Message(message.clone()));
    state.commit(ops).await?;
    Ok(created(message))
}

#[derive(Debug, Default, Deserialize)]
pub struct InboxQuery {
    #[serde(default)]
    undelivered: bool,
}

/// Whole thread, or with `undelivered=true` the caller's pending inbox. A
/// message is marked delivered in the same commit that precedes the
/// response, so it is handed out exactly once.
pub async fn list(
    State(state): State<Arc<AppState>>,
    who: Principal,
    Path(id): Path<String>,
    Query(q): Query<InboxQuery>,
) -> ApiResult<Json<Vec<TherapistMessage>>> {
    state.store.read(|db| accessible_patient(db, &who, &id))?;
    if !q.undelivered {
        return Ok(Json(state.store.read(|db| {
            db.messages_of(&id).into_iter().cloned().collect()
        })));
    }
    let _guard = state.lock_patient(&id).await;
    let at = now(&state);
    let mine = party(&who);
    let pending: Vec<TherapistMessage> = state.store.read(|db| {
        db.messages_of(&id)
            .into_iter()
            .filter(|m| m.from != mine && !m.delivered)
            .map(|m| TherapistMessage {
                delivered: true,
                delivered_at: Some(at),
                ..m.clone()
            })
            .collect()
    });
    state.commit(pending.iter().cloned().map(Op::Message).collect()).await?;
    Ok(Json(pending))
}
