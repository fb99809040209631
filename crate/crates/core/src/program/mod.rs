//! Word dictionary and therapy program sequencing.

pub mod dictionary;
pub mod sequencer;

pub use dictionary::{Category, Dictionary, WordItem};
pub use sequencer::{
    apply_override, build_program, next_prompt, record_attempt, AttemptRecord, AuditEntry, Decision, NextPrompt,
    ProgramEdit, ProgramSettings, ProgramState, ProgramStatus, TherapyProgram, DEFAULT_MAX_REPEATS,
    DEFAULT_PASS_THRESHOLD, MAX_REPEATS_LIMIT,
};
