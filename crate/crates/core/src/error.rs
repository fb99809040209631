use thiserror::Error;

/// Failures of audio decoding and acoustic analysis.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DspError {
    #[error("malformed WAV: {0}")]
    Decode(String),
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("audio payload is empty")]
    EmptyAudio,
    #[error("invalid analysis configuration: {0}")]
    Config(String),
    #[error("signal too short: {0}")]
    TooShort(String),
    #[error("degenerate frame: {0}")]
    DegenerateFrame(&'static str),
    #[error("need at least 2 cycles, found {0}")]
    InsufficientCycles(usize),
    #[error("no speech above the silence floor")]
    EmptySpeech,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompareError {
    #[error("cannot align an empty contour")]
    EmptyInput,
    #[error("utterance has no voiced frames")]
    NoVowel,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProgramError {
    #[error("dictionary has no items for stage {stage} and disorder {disorder}")]
    InsufficientDictionary { stage: String, disorder: String },
    #[error("invalid dictionary: {0}")]
    InvalidDictionary(String),
    #[error("attempt for item {got} but current item is {expected}")]
    StaleAttempt { expected: String, got: String },
    #[error("program already completed")]
    Completed,
    #[error("closeness {0} outside [0, 1]")]
    InvalidCloseness(f64),
    #[error("therapist {0} is not assigned to this program")]
    Unauthorized(String),
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
    #[error("unknown item {0}")]
    UnknownItem(String),
}
