use std::io;

use splitfov_core::{CodecError, GeometryError, RenderError, Violations, WireError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("wire: {0}")]
    Wire(#[from] WireError),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("codec: {0}")]
    Codec(#[from] CodecError),
    #[error("render: {0}")]
    Render(#[from] RenderError),
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("{0}")]
    Partition(#[from] Violations),
    #[error("protocol version mismatch: local {local}, peer {peer}")]
    VersionMismatch { local: u16, peer: u16 },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("peer disconnected: {0}")]
    Disconnected(String),
    #[error("display: {0}")]
    Display(io::Error),
    #[error("configuration: {0}")]
    Config(String),
}

impl SessionError {
    pub fn is_protocol(&self) -> bool {
        match self {
            SessionError::Wire(w) => w.is_protocol(),
            SessionError::Protocol(_) | SessionError::VersionMismatch { .. } => true,
            _ => false,
        }
    }
}
