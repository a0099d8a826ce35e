use serde::{Deserialize, Serialize};

use super::catalog::VolumeInfo;
use crate::math::Vec3;
use crate::multiview::{QuiltLayout, StereoParams};
use crate::raycast::{Camera, Projection, RenderMode, ViewRig};

pub const PROTOCOL_VERSION: u32 = 1;

/// Client to server, JSON text frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Hello {
        protocol_version: u32,
        /// Sidecar name as reported by the volume listing.
        volume: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        layout: Option<QuiltLayout>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rig: Option<ViewRig>,
    },
    /// Omitted fields keep their current value.
    SetCamera {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        azimuth: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        elevation: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distance: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        projection: Option<Projection>,
    },
    SetSettings {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mode: Option<RenderMode>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        layering: Option<bool>,
        /// Per-channel `[low, high]` intensity windows.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        thresholds: Option<Vec<[f32; 2]>>,
        /// Per-channel gamma.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<Vec<f32>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sample_step: Option<f64>,
    },
    /// Enabled, the session renders a left/right pair as views 0 and 1.
    SetStereo {
        enabled: bool,
        #[serde(default)]
        params: StereoParams,
    },
    SetRig {
        n_views: usize,
        step_deg: f64,
    },
    SetTimepoint {
        t: usize,
    },
    AutofocusRequest {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<f32>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraState {
    pub azimuth: f64,
    pub elevation: f64,
    pub distance: f64,
    pub center: [f64; 3],
    pub projection: Projection,
    pub aspect: f64,
}

impl From<&Camera> for CameraState {
    fn from(c: &Camera) -> Self {
        CameraState {
            azimuth: c.azimuth,
            elevation: c.elevation,
            distance: c.distance,
            center: c.rotation_center.to_array(),
            projection: c.projection,
            aspect: c.aspect,
        }
    }
}

impl From<CameraState> for Camera {
    fn from(s: CameraState) -> Self {
        Camera {
            rotation_center: Vec3::from_array(s.center),
            azimuth: s.azimuth,
            elevation: s.elevation,
            distance: s.distance,
            projection: s.projection,
            aspect: s.aspect,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Malformed or out-of-sequence message; the server disconnects.
    ProtocolViolation,
    VersionMismatch,
    SessionLimit,
    UnknownVolume,
    /// Well-formed request with unusable values; the session continues.
    InvalidRequest,
    Internal,
}

impl ErrorCode {
    /// Whether the server closes the connection after reporting this error.
    pub fn is_fatal(self) -> bool {
        !matches!(self, ErrorCode::InvalidRequest)
    }
}

/// Server to client. Every variant except `view_frame` travels as a JSON text
/// frame; `view_frame` is the header of a binary frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    SessionAck {
        protocol_version: u32,
        session: u64,
        volume: VolumeInfo,
        layout: QuiltLayout,
        generation: u64,
        camera: CameraState,
    },
    /// Sent after every change that bumps the generation, before any frame
    /// of the new generation.
    SessionState {
        generation: u64,
        camera: CameraState,
        layout: QuiltLayout,
        timepoint: usize,
        stereo: bool,
    },
    ViewFrame {
        view: usize,
        generation: u64,
        width: usize,
        height: usize,
        encoding: String,
    },
    FocusResult {
        /// Generation after the request was handled.
        generation: u64,
        hit: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        point: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distance: Option<f64>,
    },
    Error {
        code: ErrorCode,
        text: String,
    },
}

impl ServerMessage {
    pub fn error(code: ErrorCode, text: impl Into<String>) -> Self {
        ServerMessage::Error {
            code,
            text: text.into(),
        }
    }
}

/// `[u32 LE header length][JSON header][payload]`
pub fn encode_frame(header: &ServerMessage, payload: &[u8]) -> Vec<u8> {
    let json = serde_json::to_vec(header).expect("server messages serialize");
    let mut out = Vec::with_capacity(4 + json.len() + payload.len());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(payload);
    out
}

pub fn decode_frame(bytes: &[u8]) -> Result<(ServerMessage, &[u8]), String> {
    let len_bytes: [u8; 4] = bytes
        .get(..4)
        .and_then(|b| b.try_into().ok())
        .ok_or("binary frame shorter than its length prefix")?;
    let len = u32::from_le_bytes(len_bytes) as usize;
    let header = bytes
        .get(4..4 + len)
        .ok_or("binary frame truncated inside its header")?;
    let msg = serde_json::from_slice(header).map_err(|e| format!("bad frame header: {e}"))?;
    Ok((msg, &bytes[4 + len..]))
}
