//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: input is empty")]
    EmptyInput { op: &'static str },

    #[error("{op}: invalid value {value} at index {index}")]
    InvalidValue {
        op: &'static str,
        index: usize,
        value: f64,
    },

    #[error("{op}: length mismatch ({left} vs {right})")]
    LengthMismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },

    #[error("distribution sums to {sum}, expected 1 within tolerance")]
    NotNormalized { sum: f64 },

    #[error("{op}: non-positive concentration {value} at index {index}")]
    NonPositiveConcentration {
        op: &'static str,
        index: usize,
        value: f64,
    },

    #[error("{what}: index {index} out of range (< {bound} required)")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("observation impossible under the model: zero posterior mass after modality {modality} (observed outcome {outcome})")]
    ImpossibleObservation { modality: usize, outcome: usize },

    #[error("modality {0} has no learnable concentrations")]
    NotLearnable(usize),

    #[error("failed to parse {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("invalid config:\n{}", .0.join("\n"))]
    ConfigInvalid(Vec<String>),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("iteration {iteration}, trial {trial}: {source}")]
    Trial {
        iteration: u32,
        trial: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn in_trial(self, iteration: u32, trial: usize) -> Self {
        Error::Trial {
            iteration,
            trial,
            source: Box::new(self),
        }
    }
}
