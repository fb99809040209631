use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::Response;
use axum::Json;
use therapy_core::program::WordItem;

use super::created;
use crate::auth::Principal;
use crate::error::{ApiError, ApiResult};
use crate::store::{Db, Op};
use crate::AppState;

pub async fn list(State(state): State<Arc<AppState>>) -> Json<Vec<WordItem>> {
    Json(state.store.read(|db| db.dictionary.items().to_vec()))
}

fn check(db: &Db, who: &Principal, item: &WordItem) -> ApiResult<()> {
    if who.therapist_id().is_none() {
        return Err(ApiError::forbidden());
    }
    item.validate()?;
    if !db.audio.contains_key(&item.reference_audio_id) {
        return Err(ApiError::validation(
            vec!["reference_audio_id".into()],
            format!("reference audio {} has not been uploaded", item.reference_audio_id),
        ));
    }
    Ok(())
}

pub async fn create(
    State(state): State<Arc<AppState>>,
    who: Principal,
    Json(item): Json<WordItem>,
) -> ApiResult<Response> {
    state.store.read(|db| {
        check(db, &who, &item)?;
        if db.dictionary.get(&item.id).is_some() {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "exists",
                format!("dictionary item {} already exists", item.id),
            ));
        }
        Ok(())
    })?;
    state.commit(vec![Op::Word(item.clone())]).await?;
    Ok(created(item))
}

/// Replaces an item. A new reference recording has a new content id, so
/// the cached features of the old one are never consulted for it.
pub async fn update(
    State(state): State<Arc<AppState>>,
    who: Principal,
    Path(id): Path<String>,
    Json(item): Json<WordItem>,
) -> ApiResult<Json<WordItem>> {
    if item.id != id {
        return Err(ApiError::validation(vec!["id".into()], "body id differs from the path"));
    }
    state.store.read(|db| {
        check(db, &who, &item)?;
        if db.dictionary.get(&id).is_none() {
            return Err(ApiError::not_found("dictionary item", &id));
        }
        Ok(())
    })?;
    state.commit(vec![Op::Word(item.clone())]).await?;
    Ok(Json(item))
}
