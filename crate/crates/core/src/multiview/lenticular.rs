//! Slanted lenticular interleaving.
//!
//! Each output subpixel `(x, y, c)` has a lens phase
//!
//! ```text
//! u = (x + 0.5 + shift(c)) / screen_width
//! v = (y + 0.5) / screen_height
//! f = fract((u + v * tilt) * pitch - center)      (1 - f when inverted)
//! view = min(floor(f * n_views), n_views - 1)
//! ```
//!
//! where `shift(c) = (position of c in the panel's subpixel order - 1) / 3`,
//! and 0 when the panel order is unknown (`none`).

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MultiviewError;
use crate::frame::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubpixelOrder {
    #[default]
    Rgb,
    Bgr,
    None,
}

impl SubpixelOrder {
    fn shift(self, c: usize) -> f64 {
        match self {
            SubpixelOrder::Rgb => (c as f64 - 1.0) / 3.0,
            SubpixelOrder::Bgr => ((2 - c) as f64 - 1.0) / 3.0,
            SubpixelOrder::None => 0.0,
        }
    }

    fn name(self) -> &'static str {
        match self {
            SubpixelOrder::Rgb => "rgb",
            SubpixelOrder::Bgr => "bgr",
            SubpixelOrder::None => "none",
        }
    }
}

impl FromStr for SubpixelOrder {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rgb" => Ok(SubpixelOrder::Rgb),
            "bgr" => Ok(SubpixelOrder::Bgr),
            "none" => Ok(SubpixelOrder::None),
            other => Err(format!("unknown subpixel order `{other}`")),
        }
    }
}

/// Lens-array parameters measured for one physical display.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LenticularCalibration {
    pub screen_width: usize,
    pub screen_height: usize,
    /// Lens periods across the screen width.
    pub pitch: f64,
    /// Horizontal phase shift per unit of normalized vertical distance.
    pub tilt: f64,
    pub center: f64,
    pub invert_views: bool,
    pub subpixel_order: SubpixelOrder,
    pub n_views: usize,
}

impl LenticularCalibration {
    pub fn validate(&self) -> Result<(), MultiviewError> {
        if self.screen_width == 0 || self.screen_height == 0 {
            return Err(MultiviewError::Calibration(
                "screen dimensions must be at least 1".into(),
            ));
        }
        if !(self.pitch > 0.0) || !self.pitch.is_finite() {
            return Err(MultiviewError::Calibration(format!(
                "pitch must be positive (got {})",
                self.pitch
            )));
        }
        if !self.tilt.is_finite() || !self.center.is_finite() {
            return Err(MultiviewError::Calibration("tilt and center must be finite".into()));
        }
        if self.n_views == 0 {
            return Err(MultiviewError::Calibration("n_views must be at least 1".into()));
        }
        Ok(())
    }

    /// Lens phase in `[0, 1)` of subpixel `(x, y, c)`, before inversion.
    #[inline]
    pub fn phase(&self, x: usize, y: usize, c: usize) -> f64 {
        let u = (x as f64 + 0.5 + self.subpixel_order.shift(c)) / self.screen_width as f64;
        let v = (y as f64 + 0.5) / self.screen_height as f64;
        let z = (u + v * self.tilt) * self.pitch - self.center;
        z - z.floor()
    }

    #[inline]
    fn view_of(&self, x: usize, y: usize, c: usize) -> usize {
        let mut f = self.phase(x, y, c);
        if self.invert_views {
            f = 1.0 - f;
        }
        ((f * self.n_views as f64).floor() as usize).min(self.n_views - 1)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "screen_width = {}", self.screen_width);
        let _ = writeln!(s, "screen_height = {}", self.screen_height);
        let _ = writeln!(s, "pitch = {}", self.pitch);
        let _ = writeln!(s, "tilt = {}", self.tilt);
        let _ = writeln!(s, "center = {}", self.center);
        let _ = writeln!(s, "invert_views = {}", self.invert_views);
        let _ = writeln!(s, "subpixel_order = {}", self.subpixel_order.name());
        let _ = writeln!(s, "n_views = {}", self.n_views);
        s
    }

    /// Parses the `key = value` calibration file format. `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self, MultiviewError> {
        let bad = |m: String| MultiviewError::Calibration(m);
        let mut kv = std::collections::HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected `key = value`", n + 1)))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        fn field<T: FromStr>(kv: &std::collections::HashMap<String, String>, k: &str) -> Result<T, MultiviewError> {
            let v = kv
                .get(k)
                .ok_or_else(|| MultiviewError::Calibration(format!("missing `{k}`")))?;
            v.parse()
                .map_err(|_| MultiviewError::Calibration(format!("`{k}` has invalid value `{v}`")))
        }
        let invert = match kv.get("invert_views").map(String::as_str) {
            None | Some("false") | Some("0") => false,
            Some("true") | Some("1") => true,
            Some(o) => return Err(bad(format!("`invert_views` has invalid value `{o}`"))),
        };
        let order = match kv.get("subpixel_order") {
            Some(s) => s.parse().map_err(bad)?,
            None => SubpixelOrder::Rgb,
        };
        let calib = LenticularCalibration {
            screen_width: field(&kv, "screen_width")?,
            screen_height: field(&kv, "screen_height")?,
            pitch: field(&kv, "pitch")?,
            tilt: field(&kv, "tilt")?,
            center: field(&kv, "center")?,
            invert_views: invert,
            subpixel_order: order,
            n_views: field(&kv, "n_views")?,
        };
        calib.validate()?;
        Ok(calib)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MultiviewError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| MultiviewError::Calibration(format!("{}: {e}", path.display())))?;
        LenticularCalibration::from_text(&text)
    }
}

pub fn view_index_for_subpixel(
    calib: &LenticularCalibration,
    x: usize,
    y: usize,
    c: usize,
) -> Result<usize, MultiviewError> {
    if x >= calib.screen_width || y >= calib.screen_height || c > 2 {
        return Err(MultiviewError::SubpixelOutOfRange { x, y, c });
    }
    Ok(calib.view_of(x, y, c))
}

/// Native display frame: every subpixel takes its channel from the view its
/// lens phase selects, bilinearly sampled at the pixel's normalized position.
pub fn interleave(views: &[Frame], calib: &LenticularCalibration) -> Result<Frame, MultiviewError> {
    calib.validate()?;
    if views.len() != calib.n_views {
        return Err(MultiviewError::ViewCount {
            expected: calib.n_views,
            actual: views.len(),
        });
    }
    for v in &views[1..] {
        views[0].ensure_same_size(v)?;
    }
    let (w, h) = (calib.screen_width, calib.screen_height);
    let same_size = views[0].size() == (w, h);
    let mut out = Frame::new(w, h);
    out.pixels_mut().par_chunks_mut(4 * w).enumerate().for_each(|(y, row)| {
        let v = (y as f64 + 0.5) / h as f64;
        for x in 0..w {
            let u = (x as f64 + 0.5) / w as f64;
            let px = &mut row[4 * x..4 * x + 4];
            for c in 0..3 {
                let view = &views[calib.view_of(x, y, c)];
                px[c] = if same_size {
                    view.pixel(x, y)[c]
                } else {
                    view.sample_bilinear(u, v)[c]
                };
            }
            px[3] = 255;
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn calib(n_views: usize) -> LenticularCalibration {
        LenticularCalibration {
            screen_width: 6,
            screen_height: 1,
            pitch: 2.0,
            tilt: 0.0,
            center: 0.0,
            invert_views: false,
            subpixel_order: SubpixelOrder::None,
            n_views,
        }
    }

    /// Direct evaluation of the phase formula, written out per term.
    fn oracle(c: &LenticularCalibration, x: usize, y: usize, ch: usize) -> usize {
        let pos = match c.subpixel_order {
            SubpixelOrder::Rgb => ch as f64,
            SubpixelOrder::Bgr => 2.0 - ch as f64,
            SubpixelOrder::None => 1.0,
        };
        let u = (x as f64 + 0.5 + (pos - 1.0) / 3.0) / c.screen_width as f64;
        let v = (y as f64 + 0.5) / c.screen_height as f64;
        let lin = (u + v * c.tilt) * c.pitch - c.center;
        let mut f = lin.rem_euclid(1.0);
        if c.invert_views {
            f = 1.0 - f;
        }
        ((f * c.n_views as f64) as usize).min(c.n_views - 1)
    }

    #[test]
    fn six_pixel_strip() {
        let c = calib(3);
        let got: Vec<usize> = (0..6).map(|x| view_index_for_subpixel(&c, x, 0, 0).unwrap()).collect();
        assert_eq!(got, vec![0, 1, 2, 0, 1, 2]);
        let inv = LenticularCalibration {
            invert_views: true,
            ..c
        };
        let got: Vec<usize> = (0..6)
            .map(|x| view_index_for_subpixel(&inv, x, 0, 0).unwrap())
            .collect();
        assert_eq!(got, vec![2, 1, 0, 2, 1, 0]);
        for x in 0..6 {
            assert_eq!(view_index_for_subpixel(&c, x, 0, 1).unwrap(), oracle(&c, x, 0, 1));
        }
    }

    #[test]
    fn out_of_range_subpixel() {
        let c = calib(3);
        assert!(view_index_for_subpixel(&c, 6, 0, 0).is_err());
        assert!(view_index_for_subpixel(&c, 0, 1, 0).is_err());
        assert!(view_index_for_subpixel(&c, 0, 0, 3).is_err());
    }

    #[test]
    fn tilt_shifts_phase_linearly() {
        let c = LenticularCalibration {
            screen_width: 32,
            screen_height: 32,
            pitch: 3.7,
            tilt: -0.29,
            center: 0.13,
            invert_views: false,
            subpixel_order: SubpixelOrder::Rgb,
            n_views: 45,
        };
        for y in 0..32 {
            for x in 0..32 {
                for ch in 0..3 {
                    assert_eq!(view_index_for_subpixel(&c, x, y, ch).unwrap(), oracle(&c, x, y, ch));
                    if y + 1 < 32 {
                        let dv = 1.0 / 32.0;
                        let expected = (c.tilt * dv * c.pitch).rem_euclid(1.0);
                        let d = (c.phase(x, y + 1, ch) - c.phase(x, y, ch)).rem_euclid(1.0);
                        let err = (d - expected).abs();
                        assert!(err < 1e-9 || (1.0 - err) < 1e-9, "{x},{y}: {d} vs {expected}");
                    }
                }
            }
        }
    }

    #[test]
    fn periodic_and_monotone_within_period() {
        let c = LenticularCalibration {
            screen_width: 240,
            screen_height: 1,
            pitch: 4.0,
            tilt: 0.0,
            center: 0.3,
            invert_views: false,
            subpixel_order: SubpixelOrder::None,
            n_views: 12,
        };
        // one period is 60 pixels
        for x in 0..180 {
            assert_eq!(c.view_of(x, 0, 0), c.view_of(x + 60, 0, 0));
        }
        let seq: Vec<usize> = (0..60).map(|x| c.view_of(x, 0, 0)).collect();
        let drops = seq.windows(2).filter(|w| w[1] < w[0]).count();
        assert!(drops <= 1, "{seq:?}");
        let inv = LenticularCalibration {
            invert_views: true,
            ..c
        };
        let seq: Vec<usize> = (0..60).map(|x| inv.view_of(x, 0, 0)).collect();
        assert!(seq.windows(2).filter(|w| w[1] > w[0]).count() <= 1);
    }

    #[test]
    fn single_view_is_identity_or_resample() {
        let mut v = Frame::new(4, 3);
        v.set_pixel(1, 2, [9, 8, 7, 255]);
        let c = LenticularCalibration {
            screen_width: 4,
            screen_height: 3,
            n_views: 1,
            ..calib(1)
        };
        let out = interleave(&[v.clone()], &c).unwrap();
        assert_eq!(out.pixel(1, 2), [9, 8, 7, 255]);
        assert_eq!(out.pixel(0, 0), [0, 0, 0, 255]);
        let big = LenticularCalibration {
            screen_width: 8,
            screen_height: 6,
            ..c
        };
        assert_eq!(
            interleave(&[Frame::filled(4, 3, [5, 6, 7, 255])], &big).unwrap(),
            Frame::filled(8, 6, [5, 6, 7, 255])
        );
        assert!(matches!(
            interleave(&[v.clone(), v], &c),
            Err(MultiviewError::ViewCount { .. })
        ));
    }

    #[test]
    fn center_is_periodic() {
        let c = LenticularCalibration {
            screen_width: 16,
            screen_height: 16,
            pitch: 5.3,
            tilt: 0.4,
            center: 0.25,
            invert_views: true,
            subpixel_order: SubpixelOrder::Bgr,
            n_views: 5,
        };
        let views: Vec<Frame> = (0..5)
            .map(|k| Frame::filled(7, 7, [k * 50, 255 - k * 50, k, 255]))
            .collect();
        let shifted = LenticularCalibration { center: 1.25, ..c };
        assert_eq!(interleave(&views, &c).unwrap(), interleave(&views, &shifted).unwrap());
    }

    #[test]
    fn calibration_text_round_trip() {
        let c = LenticularCalibration {
            screen_width: 1536,
            screen_height: 2048,
            pitch: 354.42,
            tilt: -0.1153,
            center: 0.042,
            invert_views: true,
            subpixel_order: SubpixelOrder::Bgr,
            n_views: 45,
        };
        assert_eq!(LenticularCalibration::from_text(&c.to_text()).unwrap(), c);
        assert!(LenticularCalibration::from_text("screen_width = 4\n").is_err());
        let bad = c.to_text().replace("pitch = 354.42", "pitch = 0");
        assert!(LenticularCalibration::from_text(&bad).is_err());
    }
}
