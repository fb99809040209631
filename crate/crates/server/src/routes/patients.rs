use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::response::Response;
use axum::Json;
use serde::Deserialize;
use serde_json::Value;
use therapy_core::api::{NextPromptResponse, Patient, RegisterPatientRequest, SessionHint, SessionMode};
use therapy_core::program::{build_program, next_prompt as sequence_next, Category, NextPrompt, ProgramSettings, ProgramState};

use super::{accessible_patient, audio_url, created, idle, now};
use crate::auth::{MaybePrincipal, Principal};
use crate::error::{ApiError, ApiResult};
use crate::sessions;
use crate::store::Op;
use crate::{new_id, AppState};

const REQUIRED: [&str; 5] = ["name", "age", "gender", "disorder", "therapist_id"];

/// Field-level checks on the raw body so a client learns every missing
/// field at once instead of the first serde error.
fn parse_registration(body: &[u8]) -> ApiResult<RegisterPatientRequest> {
    let value: Value =
        serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| ApiError::bad_request("registration body must be a JSON object"))?;
    let missing: Vec<String> = REQUIRED
        .iter()
        .filter(|k| match obj.get(**k) {
            None | Some(Value::Null) => true,
            Some(Value::String(s)) => s.trim().is_empty(),
            _ => false,
        })
        .map(|k| k.to_string())
        .collect();
    if !missing.is_empty() {
        let msg = format!("missing required fields: {}", missing.join(", "));
        return Err(ApiError::validation(missing, msg));
    }
    let req: RegisterPatientRequest =
        serde_json::from_value(value).map_err(|e| ApiError::validation(Vec::new(), e.to_string()))?;
    if req.age == 0 {
        return Err(ApiError::validation(vec!["age".into()], "age must be positive"));
    }
    if matches!(&req.template, Some(t) if t.is_empty()) {
        return Err(ApiError::validation(vec!["template".into()], "template has no stages"));
    }
    Ok(req)
}

pub async fn register(
    State(state): State<Arc<AppState>>,
    MaybePrincipal(who): MaybePrincipal,
    body: Bytes,
) -> ApiResult<Response> {
    let req = parse_registration(&body)?;
    match &who {
        None => {}
        Some(Principal::Therapist(t)) if *t == req.therapist_id => {}
        Some(_) => return Err(ApiError::forbidden()),
    }
    let patient_id = new_id();
    let program_id = new_id();
    let settings = ProgramSettings {
        pass_threshold: state.config.pass_threshold,
        max_repeats: state.config.max_repeats,
        language: req.language.clone().unwrap_or_else(|| state.config.language.clone()),
    };
    let template = req.template.clone().unwrap_or_else(|| Category::DEFAULT_TEMPLATE.to_vec());
    let program = state.store.read(|db| {
        if !db.therapists.contains_key(&req.therapist_id) {
            return Err(ApiError::not_found("therapist", &req.therapist_id));
        }
        build_program(
            &program_id,
            &patient_id,
            &req.therapist_id,
            &req.disorder,
            &db.dictionary,
            &template,
            &settings,
        )
        .map_err(ApiError::from)
    })?;
    let patient = Patient {
        id: patient_id,
        name: req.name.trim().to_owned(),
        age: req.age,
        gender: req.gender,
        medical_history: req.medical_history,
        disorder: req.disorder,
        surgery: req.surgery,
        therapist_id: req.therapist_id,
        registered_at: now(&state),
        program_id,
    };
    let program_state = ProgramState::new(&program);
    state
        .commit(vec![
            Op::Patient(patient.clone()),
            Op::Program(program),
            Op::State(program_state),
        ])
        .await?;
    tracing::info!(patient = %patient.id, therapist = %patient.therapist_id, "patient registered");
    Ok(created(patient))
}

pub async fn get_one(
    State(state): State<Arc<AppState>>,
    who: Principal,
    Path(id): Path<String>,
) -> ApiResult<Json<Patient>> {
    state.store.read(|db| accessible_patient(db, &who, &id)).map(Json)
}

#[derive(Debug, Deserialize)]
pub struct PromptQuery {
    #[serde(default)]
    mode: SessionMode,
}

/// Current prompt. When the patient asks, this also opens a session if none
/// is active; a therapist's preview leaves sessions alone.
pub async fn next_prompt(
    State(state): State<Arc<AppState>>,
    who: Principal,
    Path(id): Path<String>,
    Query(q): Query<PromptQuery>,
) -> ApiResult<Json<NextPromptResponse>> {
    let _guard = match who {
        Principal::Patient(_) => Some(state.lock_patient(&id).await),
        Principal::Therapist(_) => None,
    };
    let (now, idle) = (now(&state), idle(&state));
    let (mut response, total, position, attempts, max_repeats, ops, session) = state.store.read(|db| {
        let patient = accessible_patient(db, &who, &id)?;
        let (program, pstate) = db
            .program_of(&patient)
            .ok_or_else(|| ApiError::internal(format!("patient {id} has no program")))?;
        let response = match sequence_next(pstate, program, &db.dictionary)? {
            NextPrompt::Completed => NextPromptResponse {
                completed: true,
                item: None,
                prompt_image_id: None,
                reference_audio_url: None,
                session_hint: None,
            },
            NextPrompt::Item(item) => NextPromptResponse {
                completed: false,
                prompt_image_id: item.prompt_image_id.clone(),
                reference_audio_url: Some(audio_url(&item.reference_audio_id)),
                item: Some(item.clone()),
                session_hint: None,
            },
        };
        let (session, ops) = match (&who, response.completed) {
            (Principal::Patient(_), false) => {
                let (s, ops) = sessions::open_or_current(db, &id, q.mode, now, idle);
                (Some(s), ops)
            }
            _ => (sessions::active(db, &id, now, idle).cloned(), Vec::new()),
        };
        Ok::<_, ApiError>((
            response,
            program.items.len(),
            pstate.cursor,
            pstate.attempts_on_current,
            program.max_repeats,
            ops,
            session,
        ))
    })?;
    state.commit(ops).await?;
    if !response.completed {
        response.session_hint = session.map(|s| SessionHint {
            session_id: s.id,
            mode: s.mode,
            position,
            total_items: total,
            attempts_on_current: attempts,
            max_repeats,
        });
    }
    Ok(Json(response))
}
