use std::sync::Arc;

use axum::extract::{Multipart, Path, Query, State};
use axum::http::header::CONTENT_TYPE;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Deserialize;
use therapy_core::api::{SessionEntry, SessionMode, UploadResponse, UtteranceRecord};
use therapy_core::compare::{compare_utterances, make_feedback, ComparisonProfile};
use therapy_core::dsp::UtteranceFeatures;
use therapy_core::program::{record_attempt, ProgramStatus};
use therapy_core::ProgramError;

use super::{accessible_patient, idle, now};
use crate::auth::Principal;
use crate::error::{ApiError, ApiResult};
use crate::sessions;
use crate::store::{Db, Op};
use crate::{new_id, AppState};

struct UploadForm {
    item_id: String,
    audio: Vec<u8>,
    mode: SessionMode,
}

async fn read_form(mut form: Multipart) -> ApiResult<UploadForm> {
    let bad = |e: axum::extract::multipart::MultipartError| ApiError::new(e.status(), "bad_multipart", e.body_text());
    let (mut item_id, mut audio, mut mode) = (None, None, SessionMode::default());
    while let Some(field) = form.next_field().await.map_err(bad)? {
        match field.name() {
            Some("item_id") => item_id = Some(field.text().await.map_err(bad)?.trim().to_owned()),
            Some("audio") => audio = Some(field.bytes().await.map_err(bad)?.to_vec()),
            Some("mode") => {
                let text = field.text().await.map_err(bad)?;
                mode = serde_json::from_value(serde_json::Value::String(text.trim().to_owned()))
                    .map_err(|_| ApiError::validation(vec!["mode".into()], "mode must be offline_auto or online_guided"))?;
            }
            _ => {}
        }
    }
    let mut missing = Vec::new();
    if item_id.as_deref().is_none_or(str::is_empty) {
        missing.push("item_id".to_owned());
    }
    if audio.as_ref().is_none_or(Vec::is_empty) {
        missing.push("audio".to_owned());
    }
    if !missing.is_empty() {
        let msg = format!("missing multipart fields: {}", missing.join(", "));
        return Err(ApiError::validation(missing, msg));
    }
    Ok(UploadForm {
        item_id: item_id.unwrap(),
        audio: audio.unwrap(),
        mode,
    })
}

/// Checks the upload targets the current prompt; returns the item's
/// reference audio id.
fn check_current(db: &Db, patient_program: &str, item_id: &str) -> ApiResult<String> {
    let program = &db.programs[patient_program];
    let state = &db.states[patient_program];
    if state.status == ProgramStatus::Completed {
        return Err(ProgramError::Completed.into());
    }
    let current = state.current_item(program).ok_or(ProgramError::Completed)?;
    if current != item_id {
        return Err(ProgramError::StaleAttempt {
            expected: current.into(),
            got: item_id.into(),
        }
        .into());
    }
    let item = db
        .dictionary
        .get(item_id)
        .ok_or_else(|| ProgramError::UnknownItem(item_id.into()))?;
    Ok(item.reference_audio_id.clone())
}

/// Scores an attempt at the current prompt and advances the program.
///
/// Everything the attempt produces (stored audio, features, report,
/// feedback, the utterance record, the program state and the session entry)
/// becomes durable in one commit before the response is sent.
pub async fn upload(
    State(state): State<Arc<AppState>>,
    who: Principal,
    Path(id): Path<String>,
    form: Multipart,
) -> ApiResult<Response> {
    let patient = state.store.read(|db| accessible_patient(db, &who, &id))?;
    if who.therapist_id().is_some() {
        return Err(ApiError::new(
            StatusCode::FORBIDDEN,
            "forbidden",
            "attempts are submitted by the patient",
        ));
    }
    let form = read_form(form).await?;
    let _guard = state.lock_patient(&id).await;

    let reference_id = state.store.read(|db| check_current(db, &patient.program_id, &form.item_id))?;
    let features = state.analyze(form.audio.clone()).await?;
    let reference = state.reference_features(&reference_id).await?;

    let at = now(&state);
    let utterance_id = new_id();
    let (program, mut pstate, disorder) = state.store.read(|db| {
        (
            db.programs[&patient.program_id].clone(),
            db.states[&patient.program_id].clone(),
            patient.disorder.clone(),
        )
    });
    let profile = ComparisonProfile::for_disorder(&disorder).with_threshold(program.threshold_for(&form.item_id));
    let report = compare_utterances(&features, &reference, &profile);
    let decision = record_attempt(&mut pstate, &program, &form.item_id, report.closeness, &utterance_id, at)?;
    let feedback = make_feedback(&report, &reference_id);

    let bytes = form.audio.len() as u64;
    let audio_ref = state.put_blob(form.audio).await?;
    let features_ref = state.put_blob(to_json(&features)?).await?;
    let report_ref = state.put_blob(to_json(&report)?).await?;
    let feedback_ref = state.put_blob(to_json(&feedback)?).await?;

    let record = UtteranceRecord {
        id: utterance_id.clone(),
        patient_id: id.clone(),
        item_id: form.item_id.clone(),
        session_id: String::new(),
        audio_ref: audio_ref.clone(),
        features_ref,
        report_ref,
        feedback_ref: feedback_ref.clone(),
        reference_audio_id: reference_id,
        closeness: report.closeness,
        decision,
        duration_s: features.duration,
        created_at: at,
    };
    let (mut session, mut ops) =
        state.store.read(|db| sessions::open_or_current(db, &id, form.mode, at, idle(&state)));
    session.entries.push(SessionEntry {
        item_id: form.item_id,
        utterance_id: utterance_id.clone(),
        closeness: report.closeness,
        decision,
        feedback_id: feedback_ref,
        at,
    });
    session.last_activity = at;
    session.total_practice_seconds += features.duration;
    let record = UtteranceRecord {
        session_id: session.id.clone(),
        ..record
    };
    ops.extend([
        Op::AudioLink {
            id: audio_ref,
            bytes,
            at,
            uploader: Some(who.token()),
            patient: Some(id.clone()),
        },
        Op::Utterance(record),
        Op::State(pstate.clone()),
        Op::Session(session.clone()),
    ]);
    state.commit(ops).await?;
    tracing::info!(patient = %id, utterance = %utterance_id, closeness = report.closeness, ?decision, "attempt scored");

    let body = UploadResponse {
        utterance_id,
        session_id: session.id,
        decision,
        report,
        feedback,
        cursor: pstate.cursor,
        status: pstate.status,
    };
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

fn to_json<T: serde::Serialize>(v: &T) -> ApiResult<Vec<u8>> {
    serde_json::to_vec(v).map_err(ApiError::internal)
}

fn accessible_utterance(state: &AppState, who: &Principal, id: &str) -> ApiResult<UtteranceRecord> {
    state.store.read(|db| {
        let u = db.utterances.get(id).ok_or_else(|| ApiError::not_found("utterance", id))?;
        accessible_patient(db, who, &u.patient_id)?;
        Ok(u.clone())
    })
}

pub async fn get_one(
    State(state): State<Arc<AppState>>,
    who: Principal,
    Path(id): Path<String>,
) -> ApiResult<Json<UtteranceRecord>> {
    accessible_utterance(&state, &who, &id).map(Json)
}

pub async fn features(State(state): State<Arc<AppState>>, who: Principal, Path(id): Path<String>) -> ApiResult<Response> {
    let u = accessible_utterance(&state, &who, &id)?;
    let bytes = state.get_blob(&u.features_ref).await?;
    Ok(([(CONTENT_TYPE, "application/json")], bytes).into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Deserialize)]
pub struct SpectrogramQuery {
    #[serde(default)]
    format: MatrixFormat,
}

/// The dB matrix behind the console's spectrogram view; rows are frequency
/// bins, columns are frames.
pub async fn spectrogram(
    State(state): State<Arc<AppState>>,
    who: Principal,
    Path(id): Path<String>,
    Query(q): Query<SpectrogramQuery>,
) -> ApiResult<Response> {
    let u = accessible_utterance(&state, &who, &id)?;
    let features: UtteranceFeatures = state.get_json(&u.features_ref).await?;
    Ok(match q.format {
        MatrixFormat::Json => Json(features.spectrogram).into_response(),
        MatrixFormat::Csv => ([(CONTENT_TYPE, "text/csv")], features.spectrogram.to_csv()).into_response(),
    })
}
