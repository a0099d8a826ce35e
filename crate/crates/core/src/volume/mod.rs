//! Multi-channel intensity volumes.
//!
//! Samples are stored normalized to `[0, 1]`, x-fastest, then y, then z.
//! World coordinates are micrometers with the volume occupying the box
//! `[0, nx*sx] x [0, ny*sy] x [0, nz*sz]`; the value of voxel `(i, j, k)`
//! lives at voxel coordinate `(i + 0.5, j + 0.5, k + 0.5)`.

mod io;
pub(crate) mod sampling;
mod synthetic;
mod transfer;

use std::sync::Arc;

pub use io::{load_volume, read_meta, save_volume, VolumeMeta, META_FORMAT};
pub use sampling::sample_trilinear;
pub use synthetic::{make_synthetic, SyntheticScene, SyntheticShape};
pub use transfer::{TransferFunction, TransferMode};

use crate::math::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum VolumeError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: unsupported dtype `{dtype}` (expected u8 or u16le)")]
    UnsupportedDtype { path: String, dtype: String },
    #[error("{path}: payload size mismatch: expected {expected} bytes, found {actual}")]
    SizeMismatch { path: String, expected: u64, actual: u64 },
    #[error("invalid dimensions {0:?}: every axis needs at least one voxel")]
    InvalidDims([usize; 3]),
    #[error("invalid spacing {0:?}: every component must be positive")]
    InvalidSpacing([f64; 3]),
    #[error("{path}:{line}: {message}")]
    Meta { path: String, line: usize, message: String },
    #[error("channel `{name}` has {actual} samples, expected {expected}")]
    SampleCount {
        name: String,
        expected: usize,
        actual: usize,
    },
    #[error("channels disagree on dims or spacing")]
    ChannelMismatch,
    #[error("volume needs at least one channel")]
    NoChannels,
    #[error("timepoint {index} out of range ({count} available)")]
    TimepointOutOfRange { index: usize, count: usize },
    #[error("unknown synthetic shape `{0}`")]
    UnknownShape(String),
    #[error("bad synthetic scene descriptor: {0}")]
    BadScene(String),
}

/// Storage type of the raw payload a channel was loaded from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleType {
    U8,
    U16Le,
}

impl SampleType {
    pub fn bytes_per_sample(self) -> usize {
        match self {
            SampleType::U8 => 1,
            SampleType::U16Le => 2,
        }
    }

    pub fn max_value(self) -> f32 {
        match self {
            SampleType::U8 => 255.0,
            SampleType::U16Le => 65535.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SampleType::U8 => "u8",
            SampleType::U16Le => "u16le",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "u8" => Some(SampleType::U8),
            "u16le" | "u16" => Some(SampleType::U16Le),
            _ => None,
        }
    }

    /// Snaps a normalized value onto this type's quantization grid.
    pub fn quantize(self, v: f32) -> f32 {
        let max = self.max_value();
        (v.clamp(0.0, 1.0) * max).round() / max
    }
}

/// Voxel grid extent and physical spacing shared by every channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dims: [usize; 3],
    /// Micrometers per voxel along x, y, z.
    pub spacing: [f64; 3],
}

impl Grid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self, VolumeError> {
        if dims.contains(&0) {
            return Err(VolumeError::InvalidDims(dims));
        }
        if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(VolumeError::InvalidSpacing(spacing));
        }
        Ok(Grid { dims, spacing })
    }

    pub fn voxel_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    /// World-space extent of the volume box in micrometers.
    pub fn extent(&self) -> Vec3 {
        Vec3::new(
            self.dims[0] as f64 * self.spacing[0],
            self.dims[1] as f64 * self.spacing[1],
            self.dims[2] as f64 * self.spacing[2],
        )
    }

    pub fn center(&self) -> Vec3 {
        self.extent() * 0.5
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// World position of a voxel center.
    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(
            (i as f64 + 0.5) * self.spacing[0],
            (j as f64 + 0.5) * self.spacing[1],
            (k as f64 + 0.5) * self.spacing[2],
        )
    }
}

/// One intensity channel of a volume.
#[derive(Debug, Clone)]
pub struct VolumeChannel {
    pub name: String,
    pub grid: Grid,
    samples: Arc<[f32]>,
}

impl VolumeChannel {
    pub fn new(name: impl Into<String>, grid: Grid, samples: Vec<f32>) -> Result<Self, VolumeError> {
        let name = name.into();
        if samples.len() != grid.voxel_count() {
            return Err(VolumeError::SampleCount {
                name,
                expected: grid.voxel_count(),
                actual: samples.len(),
            });
        }
        let samples: Arc<[f32]> = samples
            .into_iter()
            .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) })
            .collect();
        Ok(VolumeChannel { name, grid, samples })
    }

    /// Builds a channel by evaluating `f` at every voxel index.
    pub fn from_fn(name: impl Into<String>, grid: Grid, mut f: impl FnMut(usize, usize, usize) -> f32) -> Self {
        let [nx, ny, nz] = grid.dims;
        let mut samples = Vec::with_capacity(grid.voxel_count());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    samples.push(f(i, j, k));
                }
            }
        }
        VolumeChannel::new(name, grid, samples).expect("sample count matches grid")
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.grid.spacing
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    #[inline]
    pub fn voxel(&self, i: usize, j: usize, k: usize) -> f32 {
        self.samples[self.grid.index(i, j, k)]
    }

    pub fn max_value(&self) -> f32 {
        self.samples.iter().cloned().fold(0.0, f32::max)
    }

    fn with_samples(&self, samples: Arc<[f32]>) -> Self {
        VolumeChannel {
            name: self.name.clone(),
            grid: self.grid,
            samples,
        }
    }
}

/// Ordered channels (first = bottom layer) plus optional time sequence.
#[derive(Debug, Clone)]
pub struct Volume {
    channels: Vec<VolumeChannel>,
    /// `timepoints[t][c]`; empty for a static volume.
    timepoints: Vec<Vec<Arc<[f32]>>>,
    sample_type: SampleType,
}

impl Volume {
    pub fn new(channels: Vec<VolumeChannel>) -> Result<Self, VolumeError> {
        let first = channels.first().ok_or(VolumeError::NoChannels)?;
        if channels.iter().any(|c| c.grid != first.grid) {
            return Err(VolumeError::ChannelMismatch);
        }
        Ok(Volume {
            channels,
            timepoints: Vec::new(),
            sample_type: SampleType::U16Le,
        })
    }

    /// Single-channel convenience constructor.
    pub fn from_fn(grid: Grid, f: impl FnMut(usize, usize, usize) -> f32) -> Self {
        Volume::new(vec![VolumeChannel::from_fn("ch0", grid, f)]).expect("one channel")
    }

    /// Attaches a time sequence; `frames[t][c]` holds channel `c` at time `t`.
    /// Timepoint 0 replaces the current channel samples.
    pub fn with_timepoints(mut self, frames: Vec<Vec<Vec<f32>>>) -> Result<Self, VolumeError> {
        let grid = self.grid();
        let mut tps = Vec::with_capacity(frames.len());
        for frame in frames {
            if frame.len() != self.channels.len() {
                return Err(VolumeError::ChannelMismatch);
            }
            let mut row = Vec::with_capacity(frame.len());
            for (c, samples) in frame.into_iter().enumerate() {
                let ch = VolumeChannel::new(self.channels[c].name.clone(), grid, samples)?;
                row.push(ch.samples);
            }
            tps.push(row);
        }
        if let Some(first) = tps.first() {
            for (ch, s) in self.channels.iter_mut().zip(first) {
                ch.samples = s.clone();
            }
        }
        self.timepoints = if tps.len() > 1 { tps } else { Vec::new() };
        Ok(self)
    }

    pub fn with_sample_type(mut self, t: SampleType) -> Self {
        self.sample_type = t;
        self
    }

    pub fn sample_type(&self) -> SampleType {
        self.sample_type
    }

    pub fn channels(&self) -> &[VolumeChannel] {
        &self.channels
    }

    pub fn channel(&self, c: usize) -> &VolumeChannel {
        &self.channels[c]
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn grid(&self) -> Grid {
        self.channels[0].grid
    }

    pub fn timepoint_count(&self) -> usize {
        self.timepoints.len().max(1)
    }

    /// The volume with its channels switched to the sample arrays of timepoint `t`.
    pub fn at_timepoint(&self, t: usize) -> Result<Volume, VolumeError> {
        let count = self.timepoint_count();
        if t >= count {
            return Err(VolumeError::TimepointOutOfRange { index: t, count });
        }
        if self.timepoints.is_empty() {
            return Ok(self.clone());
        }
        let channels = self
            .channels
            .iter()
            .zip(&self.timepoints[t])
            .map(|(ch, s)| ch.with_samples(s.clone()))
            .collect();
        Ok(Volume {
            channels,
            timepoints: self.timepoints.clone(),
            sample_type: self.sample_type,
        })
    }

    /// Samples of channel `c` at timepoint `t`.
    pub fn timepoint_samples(&self, t: usize, c: usize) -> &[f32] {
        if self.timepoints.is_empty() {
            self.channels[c].samples()
        } else {
            &self.timepoints[t][c]
        }
    }

    /// Single-channel volume holding channel `c`, keeping its time sequence.
    pub fn select_channel(&self, c: usize) -> Volume {
        Volume {
            channels: vec![self.channels[c].clone()],
            timepoints: self.timepoints.iter().map(|row| vec![row[c].clone()]).collect(),
            sample_type: self.sample_type,
        }
    }

    pub fn max_value(&self) -> f32 {
        self.channels.iter().map(|c| c.max_value()).fold(0.0, f32::max)
    }
}
