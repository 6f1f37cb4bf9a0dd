use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("state index {index} out of range 0..={max}")]
    StateOutOfRange { index: usize, max: usize },

    #[error("states {from} and {to} are not nearest neighbours")]
    NotNeighbours { from: usize, to: usize },

    #[error("time step {dt} too large: jump probability {prob} per step exceeds 0.1")]
    StepTooLarge { dt: f64, prob: f64 },

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("total trace underflow at step {step} (trace = {trace:e})")]
    TraceUnderflow { step: usize, trace: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("retrodicted weights all non-positive; forward and backward states are out of sync")]
    DesyncedPqs,

    #[error("empty homodyne record")]
    EmptyRecord,

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("malformed record file: {0}")]
    Record(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
