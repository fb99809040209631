//! Thin async client for the therapy service. Every method maps to one
//! endpoint; server rejections surface as [`ClientError::Api`] carrying the
//! status and the decoded error body.

use reqwest::{multipart, RequestBuilder};
pub use reqwest::{Method, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use therapy_core::api::*;
use therapy_core::program::{ProgramEdit, WordItem};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("cannot reach server: {0}")]
    Network(#[source] reqwest::Error),
    #[error("server returned {status}: {} ({})", body.message, body.code)]
    Api { status: StatusCode, body: ErrorBody },
    #[error("unexpected response: {0}")]
    Decode(String),
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            _ => None,
        }
    }

    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { body, .. } => Some(&body.code),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    http: reqwest::Client,
    base: String,
    token: Option<String>,
}

impl Client {
    pub fn new(base: impl Into<String>) -> Self {
        Self {
            http: reqwest::Client::new(),
            base: base.into().trim_end_matches('/').to_owned(),
            token: None,
        }
    }

    /// Same server, acting as `token` (`therapist:<id>` or `patient:<id>`).
    pub fn with_token(&self, token: impl Into<String>) -> Self {
        Self {
            token: Some(token.into()),
            ..self.clone()
        }
    }

    pub fn as_therapist(&self, id: &str) -> Self {
        self.with_token(format!("therapist:{id}"))
    }

    pub fn as_patient(&self, id: &str) -> Self {
        self.with_token(format!("patient:{id}"))
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    /// Builds a request for `path`, which may be a server-relative URL such
    /// as the `audio_url` fields of responses.
    pub fn request(&self, method: Method, path: &str) -> RequestBuilder {
        let rb = self.http.request(method, format!("{}{}", self.base, path));
        match &self.token {
            Some(t) => rb.bearer_auth(t),
            None => rb,
        }
    }

    async fn send(rb: RequestBuilder) -> Result<reqwest::Response> {
        let res = rb.send().await.map_err(ClientError::Network)?;
        let status = res.status();
        if status.is_success() {
            return Ok(res);
        }
        let bytes = res.bytes().await.map_err(ClientError::Network)?;
        let body = serde_json::from_slice(&bytes).unwrap_or_else(|_| ErrorBody {
            code: "http".into(),
            message: String::from_utf8_lossy(&bytes).into_owned(),
            fields: Vec::new(),
        });
        Err(ClientError::Api { status, body })
    }

    async fn json<T: DeserializeOwned>(rb: RequestBuilder) -> Result<T> {
        let bytes = Self::send(rb).await?.bytes().await.map_err(ClientError::Network)?;
        serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode(e.to_string()))
    }

    async fn raw(rb: RequestBuilder) -> Result<Vec<u8>> {
        let res = Self::send(rb).await?;
        Ok(res.bytes().await.map_err(ClientError::Network)?.to_vec())
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        Self::json(self.request(Method::GET, path)).await
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        Self::json(self.request(Method::POST, path).json(body)).await
    }

    async fn put<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        Self::json(self.request(Method::PUT, path).json(body)).await
    }

    pub async fn health(&self) -> Result<serde_json::Value> {
        self.get("/health").await
    }

    pub async fn create_therapist(&self, name: &str) -> Result<Therapist> {
        self.post("/therapists", &CreateTherapistRequest { name: name.into() }).await
    }

    pub async fn therapist_patients(&self, therapist_id: &str) -> Result<Vec<PatientSummary>> {
        self.get(&format!("/therapists/{therapist_id}/patients")).await
    }

    pub async fn register_patient(&self, req: &RegisterPatientRequest) -> Result<Patient> {
        self.post("/patients", req).await
    }

    pub async fn patient(&self, id: &str) -> Result<Patient> {
        self.get(&format!("/patients/{id}")).await
    }

    pub async fn next_prompt(&self, patient_id: &str, mode: SessionMode) -> Result<NextPromptResponse> {
        let mode = match mode {
            SessionMode::OfflineAuto => "offline_auto",
            SessionMode::OnlineGuided => "online_guided",
        };
        Self::json(
            self.request(Method::GET, &format!("/patients/{patient_id}/next-prompt"))
                .query(&[("mode", mode)]),
        )
        .await
    }

    pub async fn upload_utterance(&self, patient_id: &str, item_id: &str, wav: Vec<u8>) -> Result<UploadResponse> {
        self.upload_utterance_in(patient_id, item_id, wav, SessionMode::default()).await
    }

    /// Upload that opens a session in `mode` if none is active.
    pub async fn upload_utterance_in(
        &self,
        patient_id: &str,
        item_id: &str,
        wav: Vec<u8>,
        mode: SessionMode,
    ) -> Result<UploadResponse> {
        let part = multipart::Part::bytes(wav)
            .file_name("utterance.wav")
            .mime_str("audio/wav")
            .expect("static mime type");
        let mode = match mode {
            SessionMode::OfflineAuto => "offline_auto",
            SessionMode::OnlineGuided => "online_guided",
        };
        let form = multipart::Form::new()
            .text("item_id", item_id.to_owned())
            .text("mode", mode)
            .part("audio", part);
        Self::json(
            self.request(Method::POST, &format!("/patients/{patient_id}/utterances"))
                .multipart(form),
        )
        .await
    }

    pub async fn sessions(&self, patient_id: &str) -> Result<Vec<SessionSummary>> {
        self.get(&format!("/patients/{patient_id}/sessions")).await
    }

    pub async fn session(&self, session_id: &str) -> Result<SessionDetail> {
        self.get(&format!("/sessions/{session_id}")).await
    }

    pub async fn utterance(&self, id: &str) -> Result<UtteranceRecord> {
        self.get(&format!("/utterances/{id}")).await
    }

    pub async fn utterance_features(&self, id: &str) -> Result<serde_json::Value> {
        self.get(&format!("/utterances/{id}/features")).await
    }

    pub async fn spectrogram_json(&self, id: &str) -> Result<therapy_core::dsp::Spectrogram> {
        self.get(&format!("/utterances/{id}/spectrogram?format=json")).await
    }

    pub async fn spectrogram_csv(&self, id: &str) -> Result<String> {
        let bytes = Self::raw(self.request(Method::GET, &format!("/utterances/{id}/spectrogram?format=csv"))).await?;
        String::from_utf8(bytes).map_err(|e| ClientError::Decode(e.to_string()))
    }

    pub async fn upload_audio(&self, wav: Vec<u8>) -> Result<AudioUploaded> {
        Self::json(
            self.request(Method::POST, "/audio")
                .header(reqwest::header::CONTENT_TYPE, "audio/wav")
                .body(wav),
        )
        .await
    }

    pub async fn download_audio(&self, id: &str) -> Result<Vec<u8>> {
        self.fetch(&format!("/audio/{id}")).await
    }

    /// GETs a server-relative URL taken from a response.
    pub async fn fetch(&self, url: &str) -> Result<Vec<u8>> {
        Self::raw(self.request(Method::GET, url)).await
    }

    pub async fn send_message(&self, patient_id: &str, msg: &NewMessage) -> Result<TherapistMessage> {
        self.post(&format!("/patients/{patient_id}/messages"), msg).await
    }

    pub async fn messages(&self, patient_id: &str) -> Result<Vec<TherapistMessage>> {
        self.get(&format!("/patients/{patient_id}/messages")).await
    }

    /// Pending messages addressed to the caller; the server marks them
    /// delivered as it answers.
    pub async fn inbox(&self, patient_id: &str) -> Result<Vec<TherapistMessage>> {
        self.get(&format!("/patients/{patient_id}/messages?undelivered=true")).await
    }

    pub async fn patient_program(&self, patient_id: &str) -> Result<ProgramView> {
        self.get(&format!("/patients/{patient_id}/program")).await
    }

    pub async fn program(&self, program_id: &str) -> Result<ProgramView> {
        self.get(&format!("/programs/{program_id}")).await
    }

    pub async fn edit_program(
        &self,
        program_id: &str,
        edit: ProgramEdit,
        expected_version: Option<u32>,
    ) -> Result<ProgramView> {
        self.put(
            &format!("/programs/{program_id}"),
            &ProgramEditRequest { edit, expected_version },
        )
        .await
    }

    pub async fn dictionary(&self) -> Result<Vec<WordItem>> {
        self.get("/dictionary").await
    }

    pub async fn add_word(&self, item: &WordItem) -> Result<WordItem> {
        self.post("/dictionary/items", item).await
    }

    pub async fn update_word(&self, item: &WordItem) -> Result<WordItem> {
        self.put(&format!("/dictionary/items/{}", item.id), item).await
    }
}
