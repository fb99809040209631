//! Durable state: an in-memory document set rebuilt from the write-ahead
//! journal at start-up, plus a content-addressed blob directory for audio and
//! analysis results.

mod blobs;
mod journal;

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::path::Path;

use chrono::{DateTime, Utc};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use therapy_core::api::{Patient, SessionRecord, Therapist, TherapistMessage, UtteranceRecord};
use therapy_core::program::{Dictionary, ProgramState, TherapyProgram, WordItem};

pub use blobs::{content_id, BlobStore};
pub use journal::Journal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioMeta {
    pub id: String,
    pub bytes: u64,
    pub created_at: DateTime<Utc>,
    /// Principals (`therapist:<id>` / `patient:<id>`) that uploaded it.
    pub uploaded_by: BTreeSet<String>,
    /// Patients whose records reference this audio.
    pub patients: BTreeSet<String>,
}

/// One state change. A commit is a batch of these, applied all-or-nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "value", rename_all = "snake_case")]
pub enum Op {
    Therapist(Therapist),
    Patient(Patient),
    Program(TherapyProgram),
    State(ProgramState),
    Session(SessionRecord),
    Utterance(UtteranceRecord),
    Message(TherapistMessage),
    Word(WordItem),
    /// Registers audio or adds an uploader / patient link to it.
    AudioLink {
        id: String,
        bytes: u64,
        at: DateTime<Utc>,
        uploader: Option<String>,
        patient: Option<String>,
    },
    ReferenceFeatures {
        audio_id: String,
        blob: String,
    },
}

#[derive(Debug, Default)]
pub struct Db {
    pub therapists: BTreeMap<String, Therapist>,
    pub patients: BTreeMap<String, Patient>,
    pub programs: BTreeMap<String, TherapyProgram>,
    /// Keyed by program id.
    pub states: BTreeMap<String, ProgramState>,
    pub sessions: BTreeMap<String, SessionRecord>,
    pub utterances: BTreeMap<String, UtteranceRecord>,
    pub messages: BTreeMap<String, TherapistMessage>,
    pub audio: BTreeMap<String, AudioMeta>,
    pub dictionary: Dictionary,
    /// Audio content id to the blob holding its analysed features.
    pub reference_features: BTreeMap<String, String>,
}

impl Db {
    fn apply(&mut self, op: Op) {
        match op {
            Op::Therapist(t) => {
                self.therapists.insert(t.id.clone(), t);
            }
            Op::Patient(p) => {
                self.patients.insert(p.id.clone(), p);
            }
            Op::Program(p) => {
                self.programs.insert(p.id.clone(), p);
            }
            Op::State(s) => {
                self.states.insert(s.program_id.clone(), s);
            }
            Op::Session(s) => {
                self.sessions.insert(s.id.clone(), s);
            }
            Op::Utterance(u) => {
                self.utterances.insert(u.id.clone(), u);
            }
            Op::Message(m) => {
                self.messages.insert(m.id.clone(), m);
            }
            Op::Word(w) => {
                // validated before commit
                let _ = self.dictionary.upsert(w);
            }
            Op::AudioLink {
                id,
                bytes,
                at,
                uploader,
                patient,
            } => {
                let meta = self.audio.entry(id.clone()).or_insert_with(|| AudioMeta {
                    id,
                    bytes,
                    created_at: at,
                    uploaded_by: BTreeSet::new(),
                    patients: BTreeSet::new(),
                });
                meta.uploaded_by.extend(uploader);
                meta.patients.extend(patient);
            }
            Op::ReferenceFeatures { audio_id, blob } => {
                self.reference_features.insert(audio_id, blob);
            }
        }
    }

    pub fn patients_of(&self, therapist_id: &str) -> impl Iterator<Item = &Patient> {
        let id = therapist_id.to_owned();
        self.patients.values().filter(move |p| p.therapist_id == id)
    }

    /// Sessions of a patient, oldest first.
    pub fn sessions_of(&self, patient_id: &str) -> Vec<&SessionRecord> {
        let mut v: Vec<_> = self.sessions.values().filter(|s| s.patient_id == patient_id).collect();
        v.sort_by(|a, b| a.started_at.cmp(&b.started_at).then(a.id.cmp(&b.id)));
        v
    }

    /// Messages of a patient thread, oldest first.
    pub fn messages_of(&self, patient_id: &str) -> Vec<&TherapistMessage> {
        let mut v: Vec<_> = self.messages.values().filter(|m| m.patient_id == patient_id).collect();
        v.sort_by(|a, b| a.created_at.cmp(&b.created_at).then(a.id.cmp(&b.id)));
        v
    }

    pub fn program_of(&self, patient: &Patient) -> Option<(&TherapyProgram, &ProgramState)> {
        let program = self.programs.get(&patient.program_id)?;
        let state = self.states.get(&patient.program_id)?;
        Some((program, state))
    }

    pub fn is_reference_audio(&self, audio_id: &str) -> bool {
        self.dictionary.items().iter().any(|w| w.reference_audio_id == audio_id)
    }
}

pub struct Store {
    db: RwLock<Db>,
    journal: Mutex<Journal>,
    blobs: BlobStore,
}

impl Store {
    /// Opens `dir/journal.log` and `dir/blobs`, replaying the journal.
    pub fn open(dir: &Path) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let (journal, batches) = Journal::open::<Op>(&dir.join("journal.log"))?;
        let mut db = Db::default();
        for op in batches.into_iter().flatten() {
            db.apply(op);
        }
        Ok(Self {
            db: RwLock::new(db),
            journal: Mutex::new(journal),
            blobs: BlobStore::open(dir.join("blobs"))?,
        })
    }

    pub fn read<R>(&self, f: impl FnOnce(&Db) -> R) -> R {
        f(&self.db.read())
    }

    pub fn blobs(&self) -> &BlobStore {
        &self.blobs
    }

    /// Makes `ops` durable, then visible. Readers never see a batch that is
    /// not on disk, nor half of one.
    pub fn commit(&self, ops: Vec<Op>) -> io::Result<()> {
        if ops.is_empty() {
            return Ok(());
        }
        let mut journal = self.journal.lock();
        journal.append(&ops)?;
        let mut db = self.db.write();
        for op in ops {
            db.apply(op);
        }
        Ok(())
    }
}
