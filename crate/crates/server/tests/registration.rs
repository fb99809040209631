mod common;

use common::{registration, seed_full, TestServer};
use therapy_client::{Method, StatusCode};
use therapy_core::program::Category;

#[tokio::test]
async fn registration_builds_a_program_with_numerals() {
    let dir = tempfile::tempdir().unwrap();
    let srv = TestServer::start(dir.path()).await;
    let t = srv.client.create_therapist("Dr. Rao").await.unwrap();
    let therapist = srv.client.as_therapist(&t.id);
    seed_full(&therapist).await;

    let p = srv.client.register_patient(&registration(&t.id, None)).await.unwrap();
    assert_eq!(p.age, 6);
    let view = therapist.patient_program(&p.id).await.unwrap();
    let numbers: Vec<_> = view.program.items.iter().filter(|i| i.starts_with("num-")).cloned().collect();
    let expected: Vec<_> = ["one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"]
        .iter()
        .map(|n| format!("num-{n}"))
        .collect();
    assert_eq!(numbers, expected);
    assert_eq!(view.program.created_by, t.id);
    assert_eq!(view.state.cursor, 0);

    let again = srv.client.register_patient(&registration(&t.id, None)).await.unwrap();
    assert_ne!(again.id, p.id);
}

#[tokio::test]
async fn registration_errors() {
    let dir = tempfile::tempdir().unwrap();
    let srv = TestServer::start(dir.path()).await;
    let t = srv.client.create_therapist("Dr. Rao").await.unwrap();
    seed_full(&srv.client.as_therapist(&t.id)).await;

    let err = srv.client.register_patient(&registration("nobody", None)).await.unwrap_err();
    assert_eq!(err.status(), Some(StatusCode::NOT_FOUND));

    let res = srv
        .client
        .request(Method::POST, "/patients")
        .json(&serde_json::json!({ "name": "A", "age": 6 }))
        .send()
        .await
        .unwrap();
    assert_eq!(res.status(), StatusCode::UNPROCESSABLE_ENTITY);
    let body: serde_json::Value = res.json().await.unwrap();
    assert_eq!(body["code"], "validation");
    assert_eq!(body["fields"], serde_json::json!(["gender", "disorder", "therapist_id"]));

    let mut zero = registration(&t.id, None);
    zero.age = 0;
    let err = srv.client.register_patient(&zero).await.unwrap_err();
    assert_eq!(err.status(), Some(StatusCode::UNPROCESSABLE_ENTITY));

    let mut unknown_disorder = registration(&t.id, None);
    unknown_disorder.disorder = "stuttering".into();
    let err = srv.client.register_patient(&unknown_disorder).await.unwrap_err();
    assert_eq!(err.code(), Some("insufficient_dictionary"));

    let other = srv.client.create_therapist("Dr. Other").await.unwrap();
    let err = srv
        .client
        .as_therapist(&other.id)
        .register_patient(&registration(&t.id, None))
        .await
        .unwrap_err();
    assert_eq!(err.status(), Some(StatusCode::FORBIDDEN));
}

#[tokio::test]
async fn identities_are_required_and_checked() {
    let dir = tempfile::tempdir().unwrap();
    let srv = TestServer::start(dir.path()).await;
    let t = srv.client.create_therapist("Dr. Rao").await.unwrap();
    let therapist = srv.client.as_therapist(&t.id);
    seed_full(&therapist).await;
    let p = srv
        .client
        .register_patient(&registration(&t.id, Some(vec![Category::Number])))
        .await
        .unwrap();

    let err = srv.client.patient(&p.id).await.unwrap_err();
    assert_eq!(err.status(), Some(StatusCode::UNAUTHORIZED));
    let err = srv.client.as_patient("ghost").patient(&p.id).await.unwrap_err();
    assert_eq!(err.status(), Some(StatusCode::UNAUTHORIZED));
    let res = srv
        .client
        .request(Method::GET, &format!("/patients/{}", p.id))
        .header("authorization", "Basic abc")
        .send()
        .await
        .unwrap();
    assert_eq!(res.status(), StatusCode::UNAUTHORIZED);

    assert_eq!(therapist.patient(&p.id).await.unwrap().id, p.id);
    assert_eq!(srv.client.as_patient(&p.id).patient(&p.id).await.unwrap().id, p.id);

    let res = srv.client.request(Method::GET, "/nope").send().await.unwrap();
    assert_eq!(res.status(), StatusCode::NOT_FOUND);
    let body: serde_json::Value = res.json().await.unwrap();
    assert_eq!(body["code"], "no_route");
}

#[tokio::test]
async fn roster_lists_only_own_patients_with_progress() {
    let dir = tempfile::tempdir().unwrap();
    let srv = TestServer::start(dir.path()).await;
    let s = common::setup(&srv.client, Some(vec![Category::Number])).await;

    let other = srv.client.create_therapist("Dr. Other").await.unwrap();
    let other_client = srv.client.as_therapist(&other.id);
    assert!(other_client.therapist_patients(&other.id).await.unwrap().is_empty());
    let err = other_client.therapist_patients(&s.therapist_id).await.unwrap_err();
    assert_eq!(err.status(), Some(StatusCode::FORBIDDEN));
    let err = other_client.therapist_patients("missing").await.unwrap_err();
    assert_eq!(err.status(), Some(StatusCode::NOT_FOUND));

    for _ in 0..5 {
        s.practise_identity().await;
    }
    let roster = s.therapist.therapist_patients(&s.therapist_id).await.unwrap();
    assert_eq!(roster.len(), 1);
    assert_eq!(roster[0].patient_id, s.patient_id);
    assert_eq!((roster[0].cursor, roster[0].total_items), (5, 10));
    assert_eq!(roster[0].progress, 0.5);
    assert_eq!(roster[0].last_session.as_ref().unwrap().entry_count, 5);
    assert!(roster[0].total_practice_seconds > 0.0);

    let err = srv
        .client
        .register_patient(&registration(&other.id, Some(vec![])))
        .await
        .unwrap_err();
    assert_eq!(err.code(), Some("validation"));
}
