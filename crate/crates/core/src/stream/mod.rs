//! Progressive multi-view rendering.
//!
//! A [`RenderSession`] owns the camera, settings and assembled quilt. Every
//! mutation bumps its generation; view renders are handed out as [`ViewJob`]s,
//! run anywhere, and come back as [`ViewUpdate`]s which the session accepts
//! only if they were rendered under its current generation.

mod order;
mod session;
mod worker;

pub use order::{largest_gap, view_order};
pub use session::{RenderSession, SessionManager, ViewStatus};
pub use worker::{drive_to_completion, GenerationToken, ViewJob, WorkerPool};

use crate::frame::Frame;
use crate::multiview::MultiviewError;
use crate::volume::VolumeError;

pub type SessionId = u64;

/// A finished view render addressed to a session.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewUpdate {
    pub session: SessionId,
    pub view: usize,
    pub generation: u64,
    pub frame: Frame,
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("unknown session {0}")]
    UnknownSession(SessionId),
    #[error("update addressed to session {actual}, delivered to {expected}")]
    WrongSession { expected: SessionId, actual: SessionId },
    #[error("view frame is {actual:?}, layout tile is {expected:?}")]
    TileSize {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("view {view} out of range for {n_views} views")]
    ViewIndex { view: usize, n_views: usize },
    #[error(transparent)]
    Timepoint(#[from] VolumeError),
    #[error(transparent)]
    Multiview(#[from] MultiviewError),
    #[error("{0}")]
    Invalid(String),
}
