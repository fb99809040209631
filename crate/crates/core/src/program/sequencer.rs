//! Therapy programs and the per-patient sequencing state machine.
//!
//! A program is an ordered list of dictionary item ids. The state holds a
//! cursor into that list; each scored attempt either advances the cursor,
//! asks for a repeat, or, once `max_repeats` attempts have failed, advances
//! and flags the item for the therapist.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::dictionary::{Category, Dictionary, WordItem};
use crate::error::ProgramError;

pub const DEFAULT_PASS_THRESHOLD: f64 = 0.6;
pub const DEFAULT_MAX_REPEATS: u32 = 3;
pub const MAX_REPEATS_LIMIT: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ProgramEdit {
    /// New order; must be a permutation of the current items.
    Reorder { order: Vec<String> },
    Insert { item_id: String, position: usize },
    Remove { item_id: String },
    /// Program-wide threshold, or a per-item override when `item_id` is set.
    SetThreshold {
        threshold: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        item_id: Option<String>,
    },
    SetMaxRepeats { max_repeats: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub version: u32,
    pub therapist_id: String,
    pub edit: ProgramEdit,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TherapyProgram {
    pub id: String,
    pub patient_id: String,
    pub items: Vec<String>,
    /// Per-item thresholds; seeded from the dictionary and editable.
    #[serde(default)]
    pub threshold_overrides: BTreeMap<String, f64>,
    pub pass_threshold: f64,
    pub max_repeats: u32,
    pub created_by: String,
    pub language: String,
    pub version: u32,
    #[serde(default)]
    pub audit: Vec<AuditEntry>,
}

impl TherapyProgram {
    pub fn threshold_for(&self, item_id: &str) -> f64 {
        self.threshold_overrides
            .get(item_id)
            .copied()
            .unwrap_or(self.pass_threshold)
    }

    pub fn position(&self, item_id: &str) -> Option<usize> {
        self.items.iter().position(|i| i == item_id)
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        if self.items.is_empty() {
            return Err(ProgramError::InvalidEdit("program has no items".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.items.iter().find(|i| !seen.insert(i.as_str())) {
            return Err(ProgramError::InvalidEdit(format!("duplicate item {dup}")));
        }
        if !(1..=MAX_REPEATS_LIMIT).contains(&self.max_repeats) {
            return Err(ProgramError::InvalidEdit(format!(
                "max_repeats {} outside 1..={MAX_REPEATS_LIMIT}",
                self.max_repeats
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramSettings {
    pub pass_threshold: f64,
    pub max_repeats: u32,
    pub language: String,
}

impl Default for ProgramSettings {
    fn default() -> Self {
        Self {
            pass_threshold: DEFAULT_PASS_THRESHOLD,
            max_repeats: DEFAULT_MAX_REPEATS,
            language: "en".into(),
        }
    }
}

/// Filters the dictionary by disorder and orders it by template stage, then
/// by dictionary order within a stage.
pub fn build_program(
    program_id: &str,
    patient_id: &str,
    therapist_id: &str,
    disorder: &str,
    dictionary: &Dictionary,
    template: &[Category],
    settings: &ProgramSettings,
) -> Result<TherapyProgram, ProgramError> {
    let mut items = Vec::new();
    let mut overrides = BTreeMap::new();
    for &stage in template {
        let stage_items: Vec<&WordItem> = dictionary
            .items()
            .iter()
            .filter(|i| i.category == stage && i.is_tagged(disorder))
            .collect();
        if stage_items.is_empty() {
            return Err(ProgramError::InsufficientDictionary {
                stage: stage.name().into(),
                disorder: disorder.into(),
            });
        }
        for item in stage_items {
            if items.contains(&item.id) {
                continue;
            }
            if let Some(t) = item.pass_threshold_override {
                overrides.insert(item.id.clone(), t);
            }
            items.push(item.id.clone());
        }
    }
    let program = TherapyProgram {
        id: program_id.into(),
        patient_id: patient_id.into(),
        items,
        threshold_overrides: overrides,
        pass_threshold: settings.pass_threshold,
        max_repeats: settings.max_repeats,
        created_by: therapist_id.into(),
        language: settings.language.clone(),
        version: 1,
        audit: Vec::new(),
    };
    program.validate()?;
    Ok(program)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProgramStatus {
    Active,
    Completed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Advance,
    Repeat,
    AdvanceFlagged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub item_id: String,
    pub utterance_id: String,
    pub closeness: f64,
    pub at: DateTime<Utc>,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramState {
    pub program_id: String,
    pub cursor: usize,
    pub attempts_on_current: u32,
    pub history: Vec<AttemptRecord>,
    /// Items that were advanced past without a passing attempt.
    pub flagged: Vec<String>,
    pub status: ProgramStatus,
}

impl ProgramState {
    pub fn new(program: &TherapyProgram) -> Self {
        Self {
            program_id: program.id.clone(),
            cursor: 0,
            attempts_on_current: 0,
            history: Vec::new(),
            flagged: Vec::new(),
            status: if program.items.is_empty() {
                ProgramStatus::Completed
            } else {
                ProgramStatus::Active
            },
        }
    }

    pub fn history_for<'a>(&'a self, item_id: &'a str) -> impl Iterator<Item = &'a AttemptRecord> + 'a {
        self.history.iter().filter(move |h| h.item_id == item_id)
    }

    pub fn progress(&self, program: &TherapyProgram) -> f64 {
        if program.items.is_empty() {
            1.0
        } else {
            self.cursor as f64 / program.items.len() as f64
        }
    }

    pub fn current_item<'a>(&self, program: &'a TherapyProgram) -> Option<&'a str> {
        program.items.get(self.cursor).map(String::as_str)
    }

    fn sync_status(&mut self, program: &TherapyProgram) {
        self.status = if self.cursor >= program.items.len() {
            ProgramStatus::Completed
        } else {
            ProgramStatus::Active
        };
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NextPrompt<'a> {
    Item(&'a WordItem),
    Completed,
}

/// Item at the cursor. Has no side effects.
pub fn next_prompt<'a>(
    state: &ProgramState,
    program: &TherapyProgram,
    dictionary: &'a Dictionary,
) -> Result<NextPrompt<'a>, ProgramError> {
    if state.status == ProgramStatus::Completed {
        return Ok(NextPrompt::Completed);
    }
    let id = state.current_item(program).ok_or(ProgramError::Completed)?;
    dictionary
        .get(id)
        .map(NextPrompt::Item)
        .ok_or_else(|| ProgramError::UnknownItem(id.into()))
}

/// Scores one attempt at the current item and moves the cursor.
pub fn record_attempt(
    state: &mut ProgramState,
    program: &TherapyProgram,
    item_id: &str,
    closeness: f64,
    utterance_id: &str,
    at: DateTime<Utc>,
) -> Result<Decision, ProgramError> {
    if state.status == ProgramStatus::Completed {
        return Err(ProgramError::Completed);
    }
    let current = state.current_item(program).ok_or(ProgramError::Completed)?;
    if current != item_id {
        return Err(ProgramError::StaleAttempt {
            expected: current.into(),
            got: item_id.into(),
        });
    }
    if !(0.0..=1.0).contains(&closeness) {
        return Err(ProgramError::InvalidCloseness(closeness));
    }
    let decision = if closeness >= program.threshold_for(item_id) {
        Decision::Advance
    } else if state.attempts_on_current + 1 < program.max_repeats {
        Decision::Repeat
    } else {
        Decision::AdvanceFlagged
    };
    state.history.push(AttemptRecord {
        item_id: item_id.into(),
        utterance_id: utterance_id.into(),
        closeness,
        at,
        decision,
    });
    match decision {
        Decision::Repeat => state.attempts_on_current += 1,
        Decision::Advance | Decision::AdvanceFlagged => {
            if decision == Decision::AdvanceFlagged {
                state.flagged.push(item_id.into());
            }
            state.cursor += 1;
            state.attempts_on_current = 0;
        }
    }
    state.sync_status(program);
    Ok(decision)
}

/// Applies a therapist edit, bumps the version, appends to the audit log
/// and re-anchors the state's cursor to the same item (or, if that item was
/// removed, the next surviving one).
pub fn apply_override(
    program: &mut TherapyProgram,
    state: &mut ProgramState,
    edit: ProgramEdit,
    therapist_id: &str,
    dictionary: &Dictionary,
    at: DateTime<Utc>,
) -> Result<u32, ProgramError> {
    if therapist_id != program.created_by {
        return Err(ProgramError::Unauthorized(therapist_id.into()));
    }
    let mut next = program.clone();
    match &edit {
        ProgramEdit::Reorder { order } => {
            let mut a = order.clone();
            let mut b = next.items.clone();
            a.sort();
            b.sort();
            if a != b {
                return Err(ProgramError::InvalidEdit("reorder must be a permutation of the current items".into()));
            }
            next.items = order.clone();
        }
        ProgramEdit::Insert { item_id, position } => {
            let item = dictionary
                .get(item_id)
                .ok_or_else(|| ProgramError::UnknownItem(item_id.clone()))?;
            if next.position(item_id).is_some() {
                return Err(ProgramError::InvalidEdit(format!("{item_id} already in program")));
            }
            if *position > next.items.len() {
                return Err(ProgramError::InvalidEdit(format!("position {position} past the end")));
            }
            if let Some(t) = item.pass_threshold_override {
                next.threshold_overrides.entry(item_id.clone()).or_insert(t);
            }
            next.items.insert(*position, item_id.clone());
        }
        ProgramEdit::Remove { item_id } => {
            let pos = next
                .position(item_id)
                .ok_or_else(|| ProgramError::UnknownItem(item_id.clone()))?;
            if next.items.len() == 1 {
                return Err(ProgramError::InvalidEdit("cannot remove every item".into()));
            }
            next.items.remove(pos);
        }
        ProgramEdit::SetThreshold { threshold, item_id } => {
            if !(0.0..=1.0).contains(threshold) {
                return Err(ProgramError::InvalidEdit(format!("threshold {threshold} outside [0, 1]")));
            }
            match item_id {
                Some(id) => {
                    if next.position(id).is_none() {
                        return Err(ProgramError::UnknownItem(id.clone()));
                    }
                    next.threshold_overrides.insert(id.clone(), *threshold);
                }
                None => {
                    // program-wide change supersedes per-item overrides
                    next.pass_threshold = *threshold;
                    next.threshold_overrides.clear();
                }
            }
        }
        ProgramEdit::SetMaxRepeats { max_repeats } => {
            next.max_repeats = *max_repeats;
        }
    }
    next.validate()?;

    let mut new_state = state.clone();
    reanchor(&mut new_state, program, &next);
    if new_state.attempts_on_current >= next.max_repeats {
        new_state.attempts_on_current = next.max_repeats - 1;
    }

    next.version = program.version + 1;
    next.audit.push(AuditEntry {
        version: next.version,
        therapist_id: therapist_id.into(),
        edit,
        at,
    });
    *program = next;
    *state = new_state;
    Ok(program.version)
}

fn reanchor(state: &mut ProgramState, old: &TherapyProgram, new: &TherapyProgram) {
    if state.status == ProgramStatus::Completed {
        state.cursor = new.items.len();
        state.attempts_on_current = 0;
        return;
    }
    let current = &old.items[state.cursor];
    match new.position(current) {
        Some(pos) => state.cursor = pos,
        None => {
            state.attempts_on_current = 0;
            state.cursor = old.items[state.cursor + 1..]
                .iter()
                .find_map(|id| new.position(id))
                .unwrap_or(new.items.len());
        }
    }
    state.sync_status(new);
}
