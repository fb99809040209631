//! HTTP/JSON service for remote speech-therapy practice.
//!
//! Patients fetch prompts and upload recordings; each upload is analysed
//! against the item's reference recording, scored, and fed to the patient's
//! program state machine. Therapists review sessions, edit programs and
//! exchange messages with their patients.

pub mod auth;
pub mod clock;
pub mod config;
pub mod demo;
pub mod error;
pub mod routes;
pub mod seed;
pub mod sessions;
pub mod store;

use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::Mutex;
use therapy_core::dsp::{analyze_wav, AnalysisConfig, UtteranceFeatures};
use tokio::sync::OwnedMutexGuard;

use crate::clock::{Clock, SystemClock};
use crate::config::Config;
use crate::error::{ApiError, ApiResult};
use crate::store::{Op, Store};

pub use routes::router;

pub struct AppState {
    pub store: Arc<Store>,
    pub config: Config,
    pub clock: Arc<dyn Clock>,
    pub analysis: AnalysisConfig,
    patient_locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
    reference_cache: Mutex<HashMap<String, Arc<UtteranceFeatures>>>,
}

impl AppState {
    pub fn open(config: Config) -> anyhow::Result<Arc<Self>> {
        Self::open_with_clock(config, Arc::new(SystemClock))
    }

    pub fn open_with_clock(config: Config, clock: Arc<dyn Clock>) -> anyhow::Result<Arc<Self>> {
        let store = Arc::new(Store::open(&config.data_dir)?);
        let state = Arc::new(Self {
            store,
            config,
            clock,
            analysis: AnalysisConfig::default(),
            patient_locks: Mutex::new(HashMap::new()),
            reference_cache: Mutex::new(HashMap::new()),
        });
        if let Some(seed) = state.config.dictionary_seed.clone() {
            let added = seed::load_seed_file(&state, &seed)?;
            tracing::info!(added, path = %seed.display(), "dictionary seed loaded");
        }
        Ok(state)
    }

    /// Serializes mutations of one patient's records.
    pub async fn lock_patient(&self, patient_id: &str) -> OwnedMutexGuard<()> {
        let lock = self
            .patient_locks
            .lock()
            .entry(patient_id.to_owned())
            .or_default()
            .clone();
        lock.lock_owned().await
    }

    pub async fn commit(&self, ops: Vec<Op>) -> ApiResult<()> {
        let store = self.store.clone();
        tokio::task::spawn_blocking(move || store.commit(ops))
            .await
            .map_err(ApiError::internal)??;
        Ok(())
    }

    pub async fn put_blob(&self, bytes: Vec<u8>) -> ApiResult<String> {
        let store = self.store.clone();
        let id = tokio::task::spawn_blocking(move || store.blobs().put(&bytes))
            .await
            .map_err(ApiError::internal)??;
        Ok(id)
    }

    pub async fn get_blob(&self, id: &str) -> ApiResult<Vec<u8>> {
        let store = self.store.clone();
        let id = id.to_owned();
        let bytes = tokio::task::spawn_blocking(move || store.blobs().get(&id))
            .await
            .map_err(ApiError::internal)??;
        Ok(bytes)
    }

    pub async fn get_json<T: serde::de::DeserializeOwned>(&self, id: &str) -> ApiResult<T> {
        let bytes = self.get_blob(id).await?;
        serde_json::from_slice(&bytes).map_err(ApiError::internal)
    }

    pub async fn analyze(&self, bytes: Vec<u8>) -> ApiResult<UtteranceFeatures> {
        let cfg = self.analysis.clone();
        let features = tokio::task::spawn_blocking(move || analyze_wav(&bytes, &cfg))
            .await
            .map_err(ApiError::internal)??;
        Ok(features)
    }

    /// Features of a reference recording, keyed by its content id. A new
    /// reference recording has a new id, so edits never hit stale entries.
    pub async fn reference_features(&self, audio_id: &str) -> ApiResult<Arc<UtteranceFeatures>> {
        if let Some(f) = self.reference_cache.lock().get(audio_id) {
            return Ok(f.clone());
        }
        let stored = self.store.read(|db| db.reference_features.get(audio_id).cloned());
        let features = match stored {
            Some(blob) => self.get_json::<UtteranceFeatures>(&blob).await?,
            None => {
                let wav = self.get_blob(audio_id).await?;
                let features = self.analyze(wav).await.map_err(|e| {
                    ApiError::internal(format!("reference audio {audio_id} cannot be analysed: {}", e.body.message))
                })?;
                let json = serde_json::to_vec(&features).map_err(ApiError::internal)?;
                let blob = self.put_blob(json).await?;
                self.commit(vec![Op::ReferenceFeatures {
                    audio_id: audio_id.to_owned(),
                    blob,
                }])
                .await?;
                features
            }
        };
        let features = Arc::new(features);
        self.reference_cache.lock().insert(audio_id.to_owned(), features.clone());
        Ok(features)
    }
}

pub fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

/// Binds the listener and serves until ctrl-c.
pub async fn serve(config: Config) -> anyhow::Result<()> {
    let listen = config.listen;
    let state = AppState::open(config)?;
    let listener = tokio::net::TcpListener::bind(listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    serve_with(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}

pub async fn serve_with(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> anyhow::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}
