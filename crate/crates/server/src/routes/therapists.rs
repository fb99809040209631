use std::sync::Arc;

use axum::extract::{Path, State};
use axum::response::Response;
use axum::Json;
use therapy_core::api::{CreateTherapistRequest, PatientSummary, Therapist};

use super::{created, idle, now};
use crate::auth::Principal;
use crate::error::{ApiError, ApiResult};
use crate::sessions::effective;
use crate::store::{Db, Op};
use crate::{new_id, AppState};

pub async fn create(State(state): State<Arc<AppState>>, Json(req): Json<CreateTherapistRequest>) -> ApiResult<Response> {
    if req.name.trim().is_empty() {
        return Err(ApiError::validation(vec!["name".into()], "name is required"));
    }
    let t = Therapist {
        id: new_id(),
        name: req.name.trim().to_owned(),
        created_at: now(&state),
    };
    state.commit(vec![Op::Therapist(t.clone())]).await?;
    Ok(created(t))
}

/// Roster for the dashboard, most recently active first.
pub async fn patients(
    State(state): State<Arc<AppState>>,
    who: Principal,
    Path(id): Path<String>,
) -> ApiResult<Json<Vec<PatientSummary>>> {
    let (now, idle) = (now(&state), idle(&state));
    let mut list = state.store.read(|db| {
        if !db.therapists.contains_key(&id) {
            return Err(ApiError::not_found("therapist", &id));
        }
        if who.therapist_id() != Some(id.as_str()) {
            return Err(ApiError::forbidden());
        }
        Ok(db
            .patients_of(&id)
            .filter_map(|p| summary(db, &p.id, now, idle))
            .collect::<Vec<_>>())
    })?;
    list.sort_by(|a, b| {
        b.last_activity
            .cmp(&a.last_activity)
            .then_with(|| a.name.cmp(&b.name))
            .then_with(|| a.patient_id.cmp(&b.patient_id))
    });
    Ok(Json(list))
}

pub(super) fn summary(
    db: &Db,
    patient_id: &str,
    now: chrono::DateTime<chrono::Utc>,
    idle: chrono::Duration,
) -> Option<PatientSummary> {
    let p = db.patients.get(patient_id)?;
    let (program, state) = db.program_of(p)?;
    let sessions = db.sessions_of(&p.id);
    let last = sessions.last().map(|s| effective(s, now, idle));
    Some(PatientSummary {
        patient_id: p.id.clone(),
        name: p.name.clone(),
        disorder: p.disorder.clone(),
        program_id: program.id.clone(),
        cursor: state.cursor,
        total_items: program.items.len(),
        progress: state.progress(program),
        status: state.status,
        flagged: state.flagged.clone(),
        last_activity: last.as_ref().map(|s| s.last_activity),
        last_session: last.map(|s| s.summary()),
        total_practice_seconds: sessions.iter().map(|s| s.total_practice_seconds).sum(),
    })
}
