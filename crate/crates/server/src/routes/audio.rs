use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::header::CONTENT_TYPE;
use axum::response::{IntoResponse, Response};
use therapy_core::api::AudioUploaded;
use therapy_core::audio::decode_wav;

use super::{created, now};
use crate::auth::Principal;
use crate::error::{ApiError, ApiResult};
use crate::store::Op;
use crate::AppState;

/// Stores a raw WAV body, for reference recordings and voice notes.
pub async fn upload(State(state): State<Arc<AppState>>, who: Principal, body: Bytes) -> ApiResult<Response> {
    decode_wav(&body)?;
    let bytes = body.len() as u64;
    let id = state.put_blob(body.to_vec()).await?;
    state
        .commit(vec![Op::AudioLink {
            id: id.clone(),
            bytes,
            at: now(&state),
            uploader: Some(who.token()),
            patient: None,
        }])
        .await?;
    Ok(created(AudioUploaded { audio_id: id, bytes }))
}

/// Reference recordings are readable by anyone signed in; other audio only
/// by its uploader and by those who may see a patient it belongs to.
pub async fn download(State(state): State<Arc<AppState>>, who: Principal, Path(id): Path<String>) -> ApiResult<Response> {
    state.store.read(|db| {
        let meta = db.audio.get(&id).ok_or_else(|| ApiError::not_found("audio", &id))?;
        let allowed = db.is_reference_audio(&id)
            || meta.uploaded_by.contains(&who.token())
            || meta
                .patients
                .iter()
                .filter_map(|p| db.patients.get(p))
                .any(|p| who.may_access(p));
        if allowed {
            Ok(())
        } else {
            Err(ApiError::forbidden())
        }
    })?;
    let bytes = state.get_blob(&id).await?;
    Ok(([(CONTENT_TYPE, "audio/wav")], bytes).into_response())
}
