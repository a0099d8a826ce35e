use serde::{Deserialize, Serialize};

/// Per-eye panel resolution and field of view of a head-mounted or flat display.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplaySpec {
    pub res: (f64, f64),
    /// Degrees.
    pub fov: (f64, f64),
    /// Degrees covered by foveal vision.
    pub foveal_deg: f64,
}

pub const FOVEAL_DEG: f64 = 2.0;

impl DisplaySpec {
    pub fn new(res: (f64, f64), fov: (f64, f64)) -> Self {
        DisplaySpec {
            res,
            fov,
            foveal_deg: FOVEAL_DEG,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let all = [self.res.0, self.res.1, self.fov.0, self.fov.1, self.foveal_deg];
        if all.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err("resolution, field of view and foveal angle must be positive".into());
        }
        if self.foveal_deg > self.fov.0.min(self.fov.1) {
            return Err("foveal angle exceeds the field of view".into());
        }
        Ok(())
    }
}

/// Pixels falling inside the foveal angle, per axis.
pub fn foveal_pixels(spec: &DisplaySpec) -> (u64, u64) {
    let px = (spec.res.0 / spec.fov.0 * spec.foveal_deg).round() as u64;
    let py = (spec.res.1 / spec.fov.1 * spec.foveal_deg).round() as u64;
    (px, py)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headset_figures() {
        assert_eq!(
            foveal_pixels(&DisplaySpec::new((1832.0, 1920.0), (97.0, 93.0))),
            (38, 41)
        );
        assert_eq!(
            foveal_pixels(&DisplaySpec::new((1440.0, 936.0), (43.0, 29.0))),
            (67, 65)
        );
    }

    #[test]
    fn full_foveal_field() {
        let s = DisplaySpec {
            res: (120.0, 80.0),
            fov: (2.0, 2.0),
            foveal_deg: 2.0,
        };
        assert!(s.validate().is_ok());
        assert_eq!(foveal_pixels(&s), (120, 80));
        let bad = DisplaySpec { foveal_deg: 3.0, ..s };
        assert!(bad.validate().is_err());
    }
}
