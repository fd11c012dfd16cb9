use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown scenario preset `{0}` (expected one of: los, nlos, mixed)")]
    UnknownPreset(String),

    #[error("codec: {0}")]
    Codec(#[from] CodecError),

    #[error("beamforming: {0}")]
    Beamforming(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("invalid codec parameters: {0}")]
    InvalidParams(String),

    #[error("input columns are not orthonormal (deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("malformed angle set: expected {expected_phi} phi / {expected_psi} psi, got {got_phi} / {got_psi}")]
    AngleCount {
        expected_phi: usize,
        expected_psi: usize,
        got_phi: usize,
        got_psi: usize,
    },

    #[error("malformed report: {0}")]
    Malformed(String),

    #[error("truncated buffer: need {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },

    #[error("trailing data after report ({0})")]
    Trailing(String),

    #[error("bad golden record: {0}")]
    Golden(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
