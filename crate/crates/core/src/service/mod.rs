//! Session service: one progressive [`RenderSession`](crate::stream::RenderSession)
//! per WebSocket connection, plus volume discovery.
//!
//! Control messages are JSON text frames tagged by `type`; rendered views are
//! binary frames holding a length-prefixed JSON header followed by a PNG.

mod catalog;
mod client;
mod config;
mod protocol;
mod server;

pub use catalog::{list_volumes, VolumeInfo, VolumeListing, VolumeWarning};
pub use client::{Client, ClientError, Incoming, QuiltAssembler};
pub use config::ServiceConfig;
pub use protocol::{
    decode_frame, encode_frame, CameraState, ClientMessage, ErrorCode, ServerMessage, PROTOCOL_VERSION,
};
pub use server::{BackgroundServer, Server};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("invalid service config: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("server thread failed: {0}")]
    Thread(String),
}
