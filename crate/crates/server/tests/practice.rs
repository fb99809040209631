mod common;

use chrono::Duration;
use common::{manual_clock, setup, silence_wav, TestServer};
use therapy_client::StatusCode;
use therapy_core::api::SessionMode;
use therapy_core::program::{Category, Decision, ProgramStatus};

#[tokio::test]
async fn prompts_follow_the_template_and_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let srv = TestServer::start(dir.path()).await;
    let s = setup(&srv.client, None).await;
    let a = s.patient.next_prompt(&s.patient_id, SessionMode::OfflineAuto).await.unwrap();
    let b = s.patient.next_prompt(&s.patient_id, SessionMode::OfflineAuto).await.unwrap();
    let item = a.item.clone().unwrap();
    assert_eq!(item.category, Category::SustainedSound);
    assert_eq!(item.id, "sus-t");
    assert_eq!(a.item, b.item);
    assert_eq!(a.reference_audio_url.as_deref(), Some(format!("/audio/{}", item.reference_audio_id).as_str()));
    let hint_a = a.session_hint.unwrap();
    assert_eq!(hint_a.session_id, b.session_hint.unwrap().session_id);
    assert_eq!((hint_a.position, hint_a.attempts_on_current, hint_a.max_repeats), (0, 0, 3));

    let reference = s.patient.fetch(a.reference_audio_url.as_deref().unwrap()).await.unwrap();
    assert_eq!(reference, s.wav_for("sus-t"));
}

#[tokio::test]
async fn identity_upload_scores_one_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let srv = TestServer::start(dir.path()).await;
    let s = setup(&srv.client, None).await;
    let r = s.practise_identity().await;
    assert_eq!(r.report.closeness, 1.0);
    assert_eq!(r.feedback.closeness, 1.0);
    assert_eq!(r.decision, Decision::Advance);
    assert_eq!(r.cursor, 1);

    let u = s.therapist.utterance(&r.utterance_id).await.unwrap();
    assert_eq!(u.item_id, "sus-t");
    assert_eq!(s.therapist.download_audio(&u.audio_ref).await.unwrap(), s.wav_for("sus-t"));

    let spec = s.therapist.spectrogram_json(&r.utterance_id).await.unwrap();
    let csv = s.therapist.spectrogram_csv(&r.utterance_id).await.unwrap();
    assert_eq!(csv.lines().count(), spec.rows() + 1);
    let features = s.therapist.utterance_features(&r.utterance_id).await.unwrap();
    assert_eq!(features["frame_count"].as_u64().unwrap() as usize, spec.columns());
}

#[tokio::test]
async fn rejected_uploads_consume_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let srv = TestServer::start(dir.path()).await;
    let s = setup(&srv.client, None).await;
    let before = s.patient.patient_program(&s.patient_id).await.unwrap();

    let err = s.patient.upload_utterance(&s.patient_id, "sus-t", silence_wav()).await.unwrap_err();
    assert_eq!((err.status(), err.code()), (Some(StatusCode::UNPROCESSABLE_ENTITY), Some("empty_speech")));

    let err = s.patient.upload_utterance(&s.patient_id, "sus-t", b"not audio".to_vec()).await.unwrap_err();
    assert_eq!(err.status(), Some(StatusCode::UNSUPPORTED_MEDIA_TYPE));

    let err = s.patient.upload_utterance(&s.patient_id, "num-one", s.wav_for("num-one")).await.unwrap_err();
    assert_eq!((err.status(), err.code()), (Some(StatusCode::CONFLICT), Some("stale_prompt")));

    let err = s.therapist.upload_utterance(&s.patient_id, "sus-t", s.wav_for("sus-t")).await.unwrap_err();
    assert_eq!(err.status(), Some(StatusCode::FORBIDDEN));

    let after = s.patient.patient_program(&s.patient_id).await.unwrap();
    assert_eq!(before.state, after.state);
    assert!(s.patient.sessions(&s.patient_id).await.unwrap().iter().all(|x| x.entry_count == 0));
}

#[tokio::test]
async fn mismatched_audio_repeats_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let srv = TestServer::start(dir.path()).await;
    let s = setup(&srv.client, Some(vec![Category::Number])).await;
    let wrong = therapy_core::audio::encode_wav_pcm16(&therapy_core::synth::white_noise(16_000, 0.2, 7), 16_000, 1);
    let mut decisions = Vec::new();
    for _ in 0..3 {
        let r = s.patient.upload_utterance(&s.patient_id, "num-one", wrong.clone()).await.unwrap();
        assert!(r.report.closeness < 0.6, "{}", r.report.closeness);
        assert!(!r.feedback.worst_features.is_empty());
        decisions.push(r.decision);
    }
    assert_eq!(decisions, [Decision::Repeat, Decision::Repeat, Decision::AdvanceFlagged]);
    let view = s.patient.patient_program(&s.patient_id).await.unwrap();
    assert_eq!(view.state.cursor, 1);
    assert_eq!(view.state.flagged, ["num-one"]);
    assert_eq!(view.state.history.len(), 3);
}

#[tokio::test]
async fn sessions_group_uploads_and_close_when_idle() {
    let dir = tempfile::tempdir().unwrap();
    let clock = manual_clock();
    let srv = TestServer::start_with(dir.path(), clock.clone()).await;
    let s = setup(&srv.client, None).await;

    let mut uploads = Vec::new();
    for _ in 0..3 {
        uploads.push(s.practise_identity().await);
        clock.advance(Duration::minutes(5));
    }
    let sessions = s.therapist.sessions(&s.patient_id).await.unwrap();
    assert_eq!(sessions.len(), 1);
    assert_eq!(sessions[0].entry_count, 3);
    assert!(sessions[0].ended_at.is_none());

    let detail = s.therapist.session(&sessions[0].id).await.unwrap();
    assert_eq!(detail.entries.len(), 3);
    for (e, u) in detail.entries.iter().zip(&uploads) {
        assert_eq!(e.entry.utterance_id, u.utterance_id);
        assert_eq!(e.report.closeness, 1.0);
        assert_eq!(e.feedback.graph_payload.pitch_hz.patient.len(), 100);
        let expected = s.wav_for(&e.entry.item_id);
        assert_eq!(s.therapist.fetch(&e.audio_url).await.unwrap(), expected);
        assert_eq!(s.therapist.fetch(&e.reference_audio_url).await.unwrap(), expected);
        s.therapist.fetch(&e.spectrogram_url).await.unwrap();
    }
    assert!(detail.entries.windows(2).all(|w| w[0].entry.at <= w[1].entry.at));
    let mut spoken = 0.0;
    for u in &uploads {
        spoken += s.therapist.utterance(&u.utterance_id).await.unwrap().duration_s;
    }
    assert!(spoken > 0.0);
    assert!((detail.total_practice_seconds - spoken).abs() < 1e-9);

    clock.advance(Duration::minutes(31));
    let sessions = s.therapist.sessions(&s.patient_id).await.unwrap();
    assert_eq!(sessions[0].ended_at, Some(detail.entries[2].entry.at));

    s.practise_identity().await;
    let sessions = s.therapist.sessions(&s.patient_id).await.unwrap();
    assert_eq!(sessions.len(), 2);
    assert_eq!(sessions[1].entry_count, 1);
    assert!(sessions[0].ended_at.unwrap() >= sessions[0].started_at);
}

#[tokio::test]
async fn numerals_program_completes() {
    let dir = tempfile::tempdir().unwrap();
    let srv = TestServer::start(dir.path()).await;
    let s = setup(&srv.client, Some(vec![Category::Number])).await;
    for k in 0..10 {
        let r = s.practise_identity().await;
        assert_eq!(r.report.closeness, 1.0);
        assert_eq!(r.cursor, k + 1);
    }
    let p = s.patient.next_prompt(&s.patient_id, SessionMode::OfflineAuto).await.unwrap();
    assert!(p.completed && p.item.is_none());
    let view = s.patient.patient_program(&s.patient_id).await.unwrap();
    assert_eq!(view.state.status, ProgramStatus::Completed);
    let err = s.patient.upload_utterance(&s.patient_id, "num-ten", s.wav_for("num-ten")).await.unwrap_err();
    assert_eq!(err.code(), Some("program_completed"));
}
