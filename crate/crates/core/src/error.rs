use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::model::{StorageKey, UserId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("invalid storage key: {0}")]
    InvalidKey(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OverlayError {
    #[error("stale write to {key:?}: stored version {stored}, attempted {attempted}")]
    StaleWrite {
        key: StorageKey,
        stored: u64,
        attempted: u64,
    },
    #[error("invalid envelope: {0}")]
    InvalidEnvelope(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum SocialError {
    #[error("user {0} is not tracked in the MUC list")]
    UnknownUser(UserId),
    #[error("social score weights must not both be zero (alpha={alpha}, beta={beta})")]
    InvalidWeights { alpha: f64, beta: f64 },
    #[error("subscription diff would hold {would_hold} channels, limit is {limit}")]
    CapExceeded { would_hold: usize, limit: usize },
}

#[derive(Debug, Error)]
pub enum PeerError {
    #[error("no tier could answer {0:?}")]
    NotFound(StorageKey),
    #[error("{peer} cannot write {key:?}, owned by another user")]
    NotOwner { peer: UserId, key: StorageKey },
    #[error(transparent)]
    Overlay(#[from] OverlayError),
    #[error(transparent)]
    Social(#[from] SocialError),
}

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("trace line {line}: {message}")]
    TraceFormat { line: usize, message: String },
    #[error("trace line {line}: time goes backwards")]
    TraceOrder { line: usize },
    #[error("cannot read trace {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Configuration problem, always attributed to one key.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("config key `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            key: key.into(),
            message: message.into(),
        }
    }
}

/// Anything that can stop an experiment.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Peer(#[from] PeerError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
