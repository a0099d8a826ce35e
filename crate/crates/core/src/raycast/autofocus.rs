use serde::{Deserialize, Serialize};

use super::camera::Camera;
use super::render::Renderer;
use super::settings::RenderSettings;
use crate::math::Vec3;
use crate::volume::Volume;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FocusResult {
    /// `distance` is measured along the center ray from its origin.
    Hit {
        point: Vec3,
        distance: f64,
    },
    NoHit,
}

impl FocusResult {
    /// Camera re-centered on the hit point; unchanged on a miss.
    pub fn apply(&self, camera: &Camera) -> Camera {
        match *self {
            FocusResult::Hit { point, .. } => Camera {
                rotation_center: point,
                ..*camera
            },
            FocusResult::NoHit => *camera,
        }
    }

    pub fn hit_point(&self) -> Option<Vec3> {
        match self {
            FocusResult::Hit { point, .. } => Some(*point),
            FocusResult::NoHit => None,
        }
    }

    pub fn hit_distance(&self) -> Option<f64> {
        match self {
            FocusResult::Hit { distance, .. } => Some(*distance),
            FocusResult::NoHit => None,
        }
    }
}

const REFINE_ITERATIONS: usize = 12;

/// Casts the view-center ray and reports the first point where any channel
/// reaches `threshold`.
///
/// Samples sit at entry + k*step; once a sample crosses the threshold, the
/// crossing is bisected between it and the previous sample.
pub fn autofocus(volume: &Volume, camera: &Camera, settings: &RenderSettings, threshold: f32) -> FocusResult {
    let renderer = Renderer::new(volume, settings);
    autofocus_with(&renderer, camera, threshold)
}

pub fn autofocus_with(renderer: &Renderer<'_>, camera: &Camera, threshold: f32) -> FocusResult {
    let ray = camera.center_ray();
    let Some((t0, t1, vr)) = renderer.clip(&ray) else {
        return FocusResult::NoHit;
    };
    if threshold > renderer.volume().max_value() {
        return FocusResult::NoHit;
    }
    let n = renderer.volume().n_channels();
    let above = |t: f64| {
        let p = vr.at(t);
        (0..n).any(|c| renderer.sample(c, p) >= threshold)
    };
    let step = renderer.settings().sample_step;
    let count = ((t1 - t0) / step).floor() as usize + 1;
    for k in 0..count {
        let t = t0 + k as f64 * step;
        if !above(t) {
            continue;
        }
        let mut hit = t;
        if k > 0 {
            let mut lo = t - step;
            for _ in 0..REFINE_ITERATIONS {
                let mid = 0.5 * (lo + hit);
                if above(mid) {
                    hit = mid;
                } else {
                    lo = mid;
                }
            }
        }
        return FocusResult::Hit {
            point: ray.at(hit),
            distance: hit,
        };
    }
    FocusResult::NoHit
}
