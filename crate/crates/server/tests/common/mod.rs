#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use therapy_client::Client;
use therapy_core::api::RegisterPatientRequest;
use therapy_core::audio::encode_wav_pcm16;
use therapy_core::program::{Category, WordItem};
use therapy_server::clock::{Clock, ManualClock, SystemClock};
use therapy_server::config::Config;
use therapy_server::demo::{self, DemoItem};
use therapy_server::AppState;
use tokio::task::JoinHandle;

pub struct TestServer {
    pub client: Client,
    pub state: Arc<AppState>,
    task: JoinHandle<()>,
}

impl TestServer {
    pub async fn start(data_dir: &Path) -> Self {
        Self::start_with(data_dir, Arc::new(SystemClock)).await
    }

    pub async fn start_with(data_dir: &Path, clock: Arc<dyn Clock>) -> Self {
        let config = Config {
            data_dir: data_dir.to_owned(),
            ..Config::default()
        };
        let state = AppState::open_with_clock(config, clock).expect("open state");
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let task = tokio::spawn({
            let state = state.clone();
            async move {
                therapy_server::serve_with(listener, state, std::future::pending()).await.unwrap();
            }
        });
        Self {
            client: Client::new(format!("http://{addr}")),
            state,
            task,
        }
    }

    /// Stops serving without any shutdown courtesy, as a crash would.
    pub fn kill(self) {
        self.task.abort();
    }
}

pub fn manual_clock() -> Arc<ManualClock> {
    let start: DateTime<Utc> = DateTime::from_timestamp(1_760_000_000, 0).unwrap();
    Arc::new(ManualClock::new(start))
}

/// Uploads each demo recording and adds its dictionary entry.
pub async fn seed(therapist: &Client, items: &[DemoItem]) -> Vec<WordItem> {
    let mut out = Vec::new();
    for d in items {
        let up = therapist.upload_audio(d.wav.clone()).await.unwrap();
        assert_eq!(up.audio_id, d.item.reference_audio_id);
        out.push(therapist.add_word(&d.item).await.unwrap());
    }
    out
}

pub async fn seed_full(therapist: &Client) -> Vec<DemoItem> {
    let items = demo::dictionary();
    seed(therapist, &items).await;
    items
}

pub fn registration(therapist_id: &str, template: Option<Vec<Category>>) -> RegisterPatientRequest {
    RegisterPatientRequest {
        name: "Asha".into(),
        age: 6,
        gender: "female".into(),
        medical_history: "repaired cleft palate".into(),
        disorder: demo::DISORDER.into(),
        surgery: None,
        therapist_id: therapist_id.into(),
        template,
        language: None,
    }
}

pub fn silence_wav() -> Vec<u8> {
    encode_wav_pcm16(&vec![0.0; 16_000], 16_000, 1)
}

/// A therapist with a seeded dictionary and one registered patient.
pub struct Setup {
    pub anon: Client,
    pub therapist: Client,
    pub therapist_id: String,
    pub patient: Client,
    pub patient_id: String,
    pub program_id: String,
    pub items: Vec<DemoItem>,
}

pub async fn setup(anon: &Client, template: Option<Vec<Category>>) -> Setup {
    let t = anon.create_therapist("Dr. Rao").await.unwrap();
    let therapist = anon.as_therapist(&t.id);
    let items = seed_full(&therapist).await;
    let p = anon.register_patient(&registration(&t.id, template)).await.unwrap();
    Setup {
        anon: anon.clone(),
        therapist,
        therapist_id: t.id,
        patient: anon.as_patient(&p.id),
        patient_id: p.id,
        program_id: p.program_id,
        items,
    }
}

impl Setup {
    pub fn wav_for(&self, item_id: &str) -> Vec<u8> {
        self.items
            .iter()
            .find(|d| d.item.id == item_id)
            .map(|d| d.wav.clone())
            .expect("demo item")
    }

    /// Uploads the reference recording of the current prompt.
    pub async fn practise_identity(&self) -> therapy_core::api::UploadResponse {
        let prompt = self
            .patient
            .next_prompt(&self.patient_id, Default::default())
            .await
            .unwrap();
        let item = prompt.item.expect("active program");
        self.patient
            .upload_utterance(&self.patient_id, &item.id, self.wav_for(&item.id))
            .await
            .unwrap()
    }
}
