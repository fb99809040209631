//! JSON wire types shared by the HTTP service and its clients.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::compare::{ComparisonReport, FeedbackMessage};
use crate::program::{Category, Decision, ProgramEdit, ProgramState, ProgramStatus, TherapyProgram, WordItem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateTherapistRequest {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Therapist {
    pub id: String,
    pub name: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surgery {
    pub nature: String,
    pub date: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterPatientRequest {
    pub name: String,
    pub age: u32,
    pub gender: String,
    #[serde(default)]
    pub medical_history: String,
    pub disorder: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surgery: Option<Surgery>,
    pub therapist_id: String,
    /// Stage plan; the intake order is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<Vec<Category>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patient {
    pub id: String,
    pub name: String,
    pub age: u32,
    pub gender: String,
    pub medical_history: String,
    pub disorder: String,
    pub surgery: Option<Surgery>,
    pub therapist_id: String,
    pub registered_at: DateTime<Utc>,
    pub program_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioUploaded {
    pub audio_id: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionMode {
    #[default]
    OfflineAuto,
    OnlineGuided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHint {
    pub session_id: String,
    pub mode: SessionMode,
    /// Zero-based index of the prompt in the program.
    pub position: usize,
    pub total_items: usize,
    pub attempts_on_current: u32,
    pub max_repeats: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextPromptResponse {
    pub completed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item: Option<WordItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_image_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_audio_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_hint: Option<SessionHint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UploadResponse {
    pub utterance_id: String,
    pub session_id: String,
    pub decision: Decision,
    pub report: ComparisonReport,
    pub feedback: FeedbackMessage,
    pub cursor: usize,
    pub status: ProgramStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub id: String,
    pub patient_id: String,
    pub item_id: String,
    pub session_id: String,
    /// Content hash of the stored WAV.
    pub audio_ref: String,
    pub features_ref: String,
    pub report_ref: String,
    pub feedback_ref: String,
    pub reference_audio_id: String,
    pub closeness: f64,
    pub decision: Decision,
    pub duration_s: f64,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEntry {
    pub item_id: String,
    pub utterance_id: String,
    pub closeness: f64,
    pub decision: Decision,
    pub feedback_id: String,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub id: String,
    pub patient_id: String,
    pub mode: SessionMode,
    pub started_at: DateTime<Utc>,
    pub last_activity: DateTime<Utc>,
    /// Set once the session has been idle past the timeout.
    pub ended_at: Option<DateTime<Utc>>,
    pub entries: Vec<SessionEntry>,
    /// Sum of the speech durations of the uploads in this session.
    pub total_practice_seconds: f64,
}

impl SessionRecord {
    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            id: self.id.clone(),
            mode: self.mode,
            started_at: self.started_at,
            ended_at: self.ended_at,
            entry_count: self.entries.len(),
            total_practice_seconds: self.total_practice_seconds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: String,
    pub mode: SessionMode,
    pub started_at: DateTime<Utc>,
    pub ended_at: Option<DateTime<Utc>>,
    pub entry_count: usize,
    pub total_practice_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEntryDetail {
    #[serde(flatten)]
    pub entry: SessionEntry,
    pub audio_url: String,
    pub reference_audio_url: String,
    pub spectrogram_url: String,
    pub features_url: String,
    pub report: ComparisonReport,
    pub feedback: FeedbackMessage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDetail {
    pub id: String,
    pub patient_id: String,
    pub mode: SessionMode,
    pub started_at: DateTime<Utc>,
    pub ended_at: Option<DateTime<Utc>>,
    pub total_practice_seconds: f64,
    pub entries: Vec<SessionEntryDetail>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientSummary {
    pub patient_id: String,
    pub name: String,
    pub disorder: String,
    pub program_id: String,
    pub cursor: usize,
    pub total_items: usize,
    pub progress: f64,
    pub status: ProgramStatus,
    pub flagged: Vec<String>,
    pub last_session: Option<SessionSummary>,
    pub last_activity: Option<DateTime<Utc>>,
    pub total_practice_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Therapist,
    Patient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Text,
    Voice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NewMessage {
    Text { text: String },
    /// `audio_id` comes from `POST /audio`.
    Voice { audio_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TherapistMessage {
    pub id: String,
    pub from: Party,
    pub patient_id: String,
    pub kind: MessageKind,
    /// Message text, or the audio id of a voice note.
    pub payload_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_url: Option<String>,
    pub created_at: DateTime<Utc>,
    pub delivered: bool,
    pub delivered_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramEditRequest {
    #[serde(flatten)]
    pub edit: ProgramEdit,
    /// Rejects the edit with 409 if the program has moved on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_version: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramView {
    pub program: TherapyProgram,
    pub state: ProgramState,
}
