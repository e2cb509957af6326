use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("utterance too short: {samples} samples, need at least one window of {window}")]
    UtteranceTooShort { samples: usize, window: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid feature config: {0}")]
    InvalidFeatureConfig(String),

    #[error("empty spectrogram")]
    EmptySpectrogram,

    #[error("spectrogram is not normalized to [0, 1]")]
    NotNormalized,

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("score {0} outside the open interval (0, 1)")]
    ScoreOutOfRange(f64),

    #[error("zero vector in cosine similarity")]
    ZeroVector,

    #[error("non-finite loss component `{0}`")]
    NonFiniteLoss(String),

    #[error("manifest line {line}: {message}")]
    ManifestLine { line: usize, message: String },

    #[error("duplicate record id `{0}`")]
    DuplicateId(String),

    #[error("protected class `{0}` absent from manifest")]
    ProtectedClassAbsent(String),

    #[error("need at least two distinct sessions, found {0}")]
    TooFewSessions(usize),

    #[error("no valence mapping for emotion(s): {0}")]
    UnmappedEmotion(String),

    #[error("invalid fraction: {0}")]
    InvalidFraction(String),

    #[error("triplet sampling impossible: {0}")]
    TripletSampling(String),

    #[error("need at least two classes, found {0}")]
    TooFewClasses(usize),

    #[error("record `{id}` has no {kind} label")]
    MissingLabel { id: String, kind: &'static str },

    #[error("missing feature for record `{0}`")]
    MissingFeature(String),

    #[error("unknown module `{0}`")]
    UnknownModule(String),

    #[error("non-finite loss at iteration {iteration}, phase {phase}: {snapshot}")]
    Diverged {
        iteration: u64,
        phase: &'static str,
        snapshot: String,
    },

    #[error("checkpoint format version mismatch: file has {found}, expected {expected}")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("corrupt checkpoint {path}: {message}")]
    CorruptCheckpoint { path: PathBuf, message: String },

    #[error("corrupt feature container: {0}")]
    CorruptContainer(String),

    #[error("reference class `{0}` has no instances")]
    EmptyReferenceClass(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("inconsistent class sets: {0}")]
    InconsistentClasses(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("missing {path}: run the `{stage}` stage first")]
    MissingStage { stage: &'static str, path: PathBuf },

    #[error("wav decode: {0}")]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Tensor(#[from] candle_core::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Errors caused by the inputs (config, manifests, stage order) rather than by a run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidFeatureConfig(_)
                | Error::ManifestLine { .. }
                | Error::DuplicateId(_)
                | Error::ProtectedClassAbsent(_)
                | Error::TooFewSessions(_)
                | Error::UnmappedEmotion(_)
                | Error::InvalidFraction(_)
                | Error::TooFewClasses(_)
                | Error::MissingLabel { .. }
                | Error::Config(_)
                | Error::MissingStage { .. }
        )
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
