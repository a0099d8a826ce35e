use serde::{Deserialize, Serialize};

use super::MultiviewError;
use crate::frame::Frame;
use crate::raycast::{turntable_cameras, Camera, ViewRig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StereoMode {
    /// Eyes displaced along the camera right vector, both aimed at the rotation center.
    #[default]
    Shift,
    /// Eyes rotated about the rotation center by half the eye angle each.
    Turntable,
}

/// Stereo pair parameters. Both eyes converge at the rotation center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StereoParams {
    pub mode: StereoMode,
    /// Micrometers between the eyes (shift mode).
    pub eye_distance: f64,
    /// Degrees between the eyes (turntable mode).
    pub eye_angle: f64,
}

impl Default for StereoParams {
    fn default() -> Self {
        StereoParams {
            mode: StereoMode::Shift,
            eye_distance: 0.0,
            eye_angle: 0.0,
        }
    }
}

impl StereoParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.eye_distance >= 0.0) || !(self.eye_angle >= 0.0) {
            return Err("eye distance and eye angle must be non-negative".into());
        }
        if self.mode == StereoMode::Turntable && self.eye_angle > 90.0 {
            return Err(format!("eye angle {}° exceeds 90°", self.eye_angle));
        }
        Ok(())
    }
}

/// Left and right eye cameras; left sees from the left.
pub fn stereo_cameras(base: &Camera, p: &StereoParams) -> (Camera, Camera) {
    match p.mode {
        StereoMode::Shift => {
            if p.eye_distance == 0.0 {
                return (*base, *base);
            }
            let b = base.basis();
            let half = b.right * (p.eye_distance / 2.0);
            (base.looking_from(b.eye - half), base.looking_from(b.eye + half))
        }
        StereoMode::Turntable => {
            if p.eye_angle == 0.0 {
                return (*base, *base);
            }
            let cams = turntable_cameras(
                base,
                &ViewRig {
                    n_views: 2,
                    step_deg: p.eye_angle,
                },
            );
            (cams[0], cams[1])
        }
    }
}

/// Pixel size of each eye inside a `(w, h)` side-by-side frame.
pub fn sbs_eye_size(frame: (usize, usize)) -> (usize, usize) {
    (frame.0 / 2, frame.1)
}

/// Camera for one eye rendered at half width inside a `(w, h)` side-by-side
/// frame. Enabled, the projection keeps the full frame's `w:h` aspect so the
/// display's 2x horizontal stretch restores geometry; disabled, the eye gets
/// square pixels at `(w/2):h`.
pub fn compensate_aspect(camera: &Camera, frame: (usize, usize), enabled: bool) -> Camera {
    let (w, h) = (frame.0 as f64, frame.1 as f64);
    let aspect = if enabled { w / h } else { (frame.0 / 2) as f64 / h };
    if camera.aspect == aspect {
        return *camera;
    }
    Camera { aspect, ..*camera }
}

/// Packs two full-size eye frames into one frame of the same size, each eye
/// downsampled 2:1 horizontally with a box filter.
pub fn pack_side_by_side(left: &Frame, right: &Frame) -> Result<Frame, MultiviewError> {
    left.ensure_same_size(right)?;
    let (w, h) = left.size();
    if w % 2 != 0 {
        return Err(MultiviewError::OddWidth(w));
    }
    let half = w / 2;
    let mut out = Frame::new(w, h);
    for y in 0..h {
        for k in 0..w {
            let (src, col) = if k < half { (left, k) } else { (right, k - half) };
            let a = src.pixel(2 * col, y);
            let b = src.pixel(2 * col + 1, y);
            let mut px = [0u8; 4];
            for c in 0..4 {
                px[c] = (a[c] as u16 + b[c] as u16).div_ceil(2) as u8;
            }
            out.set_pixel(k, y, px);
        }
    }
    Ok(out)
}

/// Places two half-width eye frames next to each other.
pub fn concat_side_by_side(left: &Frame, right: &Frame) -> Result<Frame, MultiviewError> {
    left.ensure_same_size(right)?;
    let (w, h) = left.size();
    let mut out = Frame::new(2 * w, h);
    out.blit(left, 0, 0)?;
    out.blit(right, w, 0)?;
    Ok(out)
}

/// Rec. 601 luma of an RGBA8 pixel.
#[inline]
pub fn luminance(px: [u8; 4]) -> u8 {
    (0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64)
        .round()
        .clamp(0.0, 255.0) as u8
}

/// Red from the left eye's luminance, green and blue from the right eye's.
pub fn anaglyph(left: &Frame, right: &Frame) -> Result<Frame, MultiviewError> {
    left.ensure_same_size(right)?;
    let (w, h) = left.size();
    let mut out = Frame::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let l = luminance(left.pixel(x, y));
            let r = luminance(right.pixel(x, y));
            out.set_pixel(x, y, [l, r, r, 255]);
        }
    }
    Ok(out)
}
