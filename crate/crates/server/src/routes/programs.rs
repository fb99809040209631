use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::Json;
use therapy_core::api::{ProgramEditRequest, ProgramView};
use therapy_core::program::apply_override;

use super::{accessible_patient, now, patient};
use crate::auth::Principal;
use crate::error::{ApiError, ApiResult};
use crate::store::{Db, Op};
use crate::AppState;

fn view(db: &Db, program_id: &str) -> ApiResult<ProgramView> {
    let program = db
        .programs
        .get(program_id)
        .ok_or_else(|| ApiError::not_found("program", program_id))?;
    let state = db
        .states
        .get(program_id)
        .ok_or_else(|| ApiError::internal(format!("program {program_id} has no state")))?;
    Ok(ProgramView {
        program: program.clone(),
        state: state.clone(),
    })
}

pub async fn of_patient(
    State(state): State<Arc<AppState>>,
    who: Principal,
    Path(id): Path<String>,
) -> ApiResult<Json<ProgramView>> {
    state.store.read(|db| {
        let p = accessible_patient(db, &who, &id)?;
        view(db, &p.program_id).map(Json)
    })
}

pub async fn get_one(
    State(state): State<Arc<AppState>>,
    who: Principal,
    Path(id): Path<String>,
) -> ApiResult<Json<ProgramView>> {
    state.store.read(|db| {
        let v = view(db, &id)?;
        accessible_patient(db, &who, &v.program.patient_id)?;
        Ok(Json(v))
    })
}

/// Applies one therapist edit; the program version moves by exactly one.
pub async fn edit(
    State(state): State<Arc<AppState>>,
    who: Principal,
    Path(id): Path<String>,
    Json(req): Json<ProgramEditRequest>,
) -> ApiResult<Json<ProgramView>> {
    let patient_id = state.store.read(|db| {
        let v = view(db, &id)?;
        let p = patient(db, &v.program.patient_id)?;
        match &who {
            Principal::Therapist(t) if *t == p.therapist_id => Ok(p.id.clone()),
            _ => Err(ApiError::forbidden()),
        }
    })?;
    let _guard = state.lock_patient(&patient_id).await;
    let at = now(&state);
    let therapist = who.therapist_id().unwrap_or_default().to_owned();
    let updated = state.store.read(|db| {
        let ProgramView { mut program, mut state } = view(db, &id)?;
        if let Some(expected) = req.expected_version {
            if expected != program.version {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    "version_conflict",
                    format!("program is at version {}, edit expected {expected}", program.version),
                ));
            }
        }
        apply_override(&mut program, &mut state, req.edit.clone(), &therapist, &db.dictionary, at)?;
        Ok(ProgramView { program, state })
    })?;
    state
        .commit(vec![
            Op::Program(updated.program.clone()),
            Op::State(updated.state.clone()),
        ])
        .await?;
    tracing::info!(program = %id, version = updated.program.version, "program edited");
    Ok(Json(updated))
}
