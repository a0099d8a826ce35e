use serde::{Deserialize, Serialize};

use crate::volume::TransferFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderMode {
    #[default]
    Mip,
    EmissionAbsorption,
}

/// Gradient shading is not implemented; the flag only has an `Off` state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shading {
    #[default]
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderSettings {
    pub mode: RenderMode,
    /// Render channels separately and composite them in channel order.
    pub layering: bool,
    /// Micrometers between samples along a ray.
    pub sample_step: f64,
    /// Straight (non-premultiplied) RGBA in `[0,1]`.
    pub background: [f32; 4],
    #[serde(default)]
    pub shading: Shading,
    /// Per-channel transfer functions; missing entries fall back to the palette.
    #[serde(default)]
    pub transfer: Vec<TransferFunction>,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            mode: RenderMode::Mip,
            layering: false,
            sample_step: 0.5,
            background: [0.0, 0.0, 0.0, 1.0],
            shading: Shading::Off,
            transfer: Vec::new(),
        }
    }
}

impl RenderSettings {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.sample_step > 0.0) || !self.sample_step.is_finite() {
            return Err(format!("sample_step must be positive (got {})", self.sample_step));
        }
        for tf in &self.transfer {
            tf.validate()?;
        }
        Ok(())
    }

    pub fn transfer_for(&self, c: usize, n_channels: usize) -> TransferFunction {
        self.transfer
            .get(c)
            .copied()
            .unwrap_or_else(|| TransferFunction::for_channel(c, n_channels))
    }

    /// Transfer functions resolved for every channel.
    pub fn resolved_transfer(&self, n_channels: usize) -> Vec<TransferFunction> {
        (0..n_channels).map(|c| self.transfer_for(c, n_channels)).collect()
    }
}

impl RenderSettings {
    /// Overrides `[low, high]` windows and gammas channel by channel; channels
    /// past the end of either list keep their current transfer function.
    pub fn with_transfer_overrides(mut self, n_channels: usize, windows: &[[f32; 2]], gammas: &[f32]) -> Self {
        if windows.is_empty() && gammas.is_empty() {
            return self;
        }
        let mut tfs = self.resolved_transfer(n_channels);
        for (tf, w) in tfs.iter_mut().zip(windows) {
            tf.low = w[0];
            tf.high = w[1];
        }
        for (tf, g) in tfs.iter_mut().zip(gammas) {
            tf.gamma = *g;
        }
        self.transfer = tfs;
        self
    }
}
