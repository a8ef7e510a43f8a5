//! Error type shared by every module, plus the CLI exit-code mapping.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{key}`: {msg}")]
    Invalid { key: String, msg: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("corrupted spectral data: {0}")]
    CorruptSpectrum(String),

    #[error("CFL violation at step {step_index}: max|u| = {max_u}, dt = {dt}, Courant number {courant} > 0.5")]
    Cfl { step_index: u64, max_u: f64, dt: f64, courant: f64 },

    #[error("non-finite state detected at step {step_index}")]
    NonFinite { step_index: u64 },

    #[error("no stationarity after {steps} steps (last relative change of the windowed energy {last_change:.3e})")]
    NoStationarity { steps: u64, last_change: f64 },

    #[error("empty snapshot list")]
    NoSnapshots,

    #[error("separation l = {l} exceeds the admissible range (max {max})")]
    SeparationRange { l: f64, max: f64 },

    #[error("{0} samples are too few for an uncertainty estimate (need at least 10)")]
    TooFewSamples(usize),

    #[error("series changes sign inside [{lo}, {hi}]: no clean scaling range")]
    SignChange { lo: f64, hi: f64 },

    #[error("snapshot {path}: checksum mismatch (stored {stored:#018x}, computed {computed:#018x})")]
    Checksum { path: PathBuf, stored: u64, computed: u64 },

    #[error("snapshot {path}: unsupported format version {found} (expected {expected})")]
    Version { path: PathBuf, found: u16, expected: u16 },

    #[error("snapshot {path}: truncated file ({len} bytes, expected {expected})")]
    Truncated { path: PathBuf, len: usize, expected: usize },

    #[error("snapshot {path}: bad magic bytes")]
    BadMagic { path: PathBuf },

    #[error("snapshot {path}: header mismatch: {msg}")]
    HeaderMismatch { path: PathBuf, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io { context: String, #[source] source: std::io::Error },
}

impl Error {
    pub fn invalid(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Invalid { key: key.into(), msg: msg.into() }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }

    /// Process exit code: 2 validation/input, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Cfl { .. } | Error::NonFinite { .. } | Error::NoStationarity { .. } => 3,
            _ => 2,
        }
    }
}
