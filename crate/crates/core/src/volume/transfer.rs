use serde::{Deserialize, Serialize};

/// Which compositing path a transfer function is tuned for. Both paths use
/// the same mapping; the flag travels with the function so presets survive
/// a mode switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferMode {
    #[default]
    Mip,
    EmissionAbsorption,
}

/// Threshold/gamma intensity-to-color map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction {
    pub low: f32,
    pub high: f32,
    pub gamma: f32,
    pub color: [f32; 3],
    pub alpha_scale: f32,
    #[serde(default)]
    pub mode: TransferMode,
}

impl Default for TransferFunction {
    fn default() -> Self {
        TransferFunction {
            low: 0.0,
            high: 1.0,
            gamma: 1.0,
            color: [1.0, 1.0, 1.0],
            alpha_scale: 1.0,
            mode: TransferMode::Mip,
        }
    }
}

/// Default channel colors in layering order: red, green, blue, then the secondaries.
pub const CHANNEL_PALETTE: [[f32; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [1.0, 0.0, 1.0],
    [0.0, 1.0, 1.0],
    [1.0, 1.0, 0.0],
];

impl TransferFunction {
    pub fn with_color(color: [f32; 3]) -> Self {
        TransferFunction {
            color,
            ..Default::default()
        }
    }

    /// Palette color for channel `c` of a volume with `n` channels; a
    /// single-channel volume renders white.
    pub fn for_channel(c: usize, n: usize) -> Self {
        if n == 1 {
            TransferFunction::default()
        } else {
            TransferFunction::with_color(CHANNEL_PALETTE[c % CHANNEL_PALETTE.len()])
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let unit = |v: f32| (0.0..=1.0).contains(&v);
        if !unit(self.low) || !unit(self.high) || self.low > self.high {
            return Err(format!(
                "thresholds must satisfy 0 <= low <= high <= 1 (got {} / {})",
                self.low, self.high
            ));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(format!("gamma must be positive (got {})", self.gamma));
        }
        if !unit(self.alpha_scale) || !self.color.iter().all(|&c| unit(c)) {
            return Err("color and alpha_scale must lie in [0, 1]".into());
        }
        Ok(())
    }

    /// Normalized, gamma-shaped magnitude `m` for intensity `s`.
    #[inline]
    pub fn magnitude(&self, s: f32) -> f32 {
        let t = if self.high > self.low {
            ((s - self.low) / (self.high - self.low)).clamp(0.0, 1.0)
        } else if s >= self.low {
            1.0
        } else {
            0.0
        };
        if t == 0.0 || t == 1.0 || self.gamma == 1.0 {
            t
        } else {
            t.powf(self.gamma)
        }
    }

    /// Maps intensity to `(color * m, alpha_scale * m)`.
    #[inline]
    pub fn apply(&self, s: f32) -> [f32; 4] {
        let m = self.magnitude(s);
        [
            self.color[0] * m,
            self.color[1] * m,
            self.color[2] * m,
            self.alpha_scale * m,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn below_threshold_is_transparent_black() {
        let tf = TransferFunction {
            low: 0.4,
            ..Default::default()
        };
        assert_eq!(tf.apply(0.3), [0.0; 4]);
    }

    #[test]
    fn identity_mapping() {
        let tf = TransferFunction::default();
        assert_eq!(tf.apply(0.3), [0.3, 0.3, 0.3, 0.3]);
    }

    #[test]
    fn gamma_half() {
        let tf = TransferFunction {
            gamma: 0.5,
            ..Default::default()
        };
        assert_eq!(tf.magnitude(0.25), 0.5);
    }

    #[test]
    fn degenerate_thresholds_are_a_step() {
        let tf = TransferFunction {
            low: 0.5,
            high: 0.5,
            ..Default::default()
        };
        assert_eq!(tf.magnitude(0.49), 0.0);
        assert_eq!(tf.magnitude(0.5), 1.0);
        assert_eq!(tf.magnitude(0.9), 1.0);
    }

    proptest! {
        #[test]
        fn monotone_in_intensity(
            low in 0.0f32..1.0, span in 0.0f32..1.0, gamma in 0.05f32..8.0,
            r in 0.0f32..1.0, g in 0.0f32..1.0, b in 0.0f32..1.0, a in 0.0f32..1.0,
            s1 in 0.0f32..1.0, s2 in 0.0f32..1.0,
        ) {
            let high = (low + span).min(1.0);
            let tf = TransferFunction { low, high, gamma, color: [r, g, b], alpha_scale: a, mode: TransferMode::Mip };
            let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
            let (x, y) = (tf.apply(lo), tf.apply(hi));
            for c in 0..4 {
                prop_assert!(x[c] <= y[c], "component {c}: {x:?} vs {y:?}");
            }
        }
    }
}
