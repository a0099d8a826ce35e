use std::net::SocketAddr;
use std::path::PathBuf;

use super::ServiceError;
use crate::multiview::QuiltLayout;
use crate::raycast::{RenderSettings, ViewRig};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Port 0 binds an ephemeral port.
    pub listen: SocketAddr,
    pub volume_dir: PathBuf,
    pub rig: ViewRig,
    pub layout: QuiltLayout,
    pub settings: RenderSettings,
    pub max_sessions: usize,
    /// Render worker threads shared by all sessions.
    pub threads: usize,
    /// Directory served over plain HTTP for browser clients.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 8765)),
            volume_dir: PathBuf::from("."),
            rig: ViewRig::default(),
            layout: QuiltLayout {
                columns: 8,
                rows: 6,
                tile_width: 384,
                tile_height: 512,
                n_views: 45,
            },
            settings: RenderSettings::default(),
            max_sessions: 4,
            threads: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            static_dir: None,
        }
    }
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<(), ServiceError> {
        let bad = |m: String| Err(ServiceError::Config(m));
        if self.max_sessions < 1 {
            return bad("max_sessions must be at least 1".into());
        }
        if self.threads < 1 {
            return bad("threads must be at least 1".into());
        }
        self.rig.validate().map_err(ServiceError::Config)?;
        self.layout
            .validate()
            .map_err(|e| ServiceError::Config(e.to_string()))?;
        if self.layout.n_views != self.rig.n_views {
            return bad(format!(
                "layout holds {} views but the rig has {}",
                self.layout.n_views, self.rig.n_views
            ));
        }
        self.settings.validate().map_err(ServiceError::Config)?;
        Ok(())
    }
}
