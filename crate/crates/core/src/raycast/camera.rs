use serde::{Deserialize, Serialize};

use crate::math::{Ray, Vec3};
use crate::volume::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Projection {
    /// Height of the view window in micrometers.
    Orthographic { view_height: f64 },
    /// Vertical field of view in degrees.
    Perspective { vfov: f64 },
}

/// Turntable camera orbiting `rotation_center`.
///
/// Azimuth rotates about world +y; azimuth 0, elevation 0 puts the eye on the
/// +z side looking toward -z with +x to the right and +y up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub rotation_center: Vec3,
    pub azimuth: f64,
    pub elevation: f64,
    pub distance: f64,
    pub projection: Projection,
    /// Width / height of the projection window.
    pub aspect: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CameraBasis {
    pub eye: Vec3,
    pub forward: Vec3,
    pub right: Vec3,
    pub up: Vec3,
}

impl Camera {
    /// Orthographic camera framing the whole volume box, aimed at its center.
    pub fn framing(grid: &Grid, aspect: f64) -> Camera {
        let ext = grid.extent();
        let diag = ext.length();
        Camera {
            rotation_center: grid.center(),
            azimuth: 0.0,
            elevation: 0.0,
            distance: diag * 1.5,
            projection: Projection::Orthographic { view_height: diag },
            aspect,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.distance > 0.0) {
            return Err(format!("camera distance must be positive (got {})", self.distance));
        }
        if !(self.aspect > 0.0) || !self.aspect.is_finite() {
            return Err(format!("aspect must be positive (got {})", self.aspect));
        }
        if !(self.elevation.abs() < 90.0) {
            return Err(format!(
                "elevation must lie strictly within (-90, 90) (got {})",
                self.elevation
            ));
        }
        match self.projection {
            Projection::Orthographic { view_height } if !(view_height > 0.0) => {
                Err(format!("view_height must be positive (got {view_height})"))
            }
            Projection::Perspective { vfov } if !(vfov > 0.0 && vfov < 180.0) => {
                Err(format!("vfov must lie in (0, 180) (got {vfov})"))
            }
            _ => Ok(()),
        }
    }

    /// Unit vector from the rotation center toward the eye.
    pub fn back_vector(&self) -> Vec3 {
        let (az, el) = (self.azimuth.to_radians(), self.elevation.to_radians());
        Vec3::new(el.cos() * az.sin(), el.sin(), el.cos() * az.cos())
    }

    pub fn position(&self) -> Vec3 {
        self.rotation_center + self.back_vector() * self.distance
    }

    pub fn basis(&self) -> CameraBasis {
        let forward = -self.back_vector();
        let right = forward.cross(Vec3::Y).normalized();
        let up = right.cross(forward);
        CameraBasis {
            eye: self.position(),
            forward,
            right,
            up,
        }
    }

    /// Camera at world position `eye`, aimed at `rotation_center`.
    pub fn looking_from(&self, eye: Vec3) -> Camera {
        let v = eye - self.rotation_center;
        let distance = v.length();
        Camera {
            azimuth: v.x.atan2(v.z).to_degrees(),
            elevation: (v.y / distance).clamp(-1.0, 1.0).asin().to_degrees(),
            distance,
            ..*self
        }
    }

    /// Ray through normalized device coordinates `(nx, ny)` in `[-1, 1]^2`,
    /// +ny up.
    pub fn ray_ndc(&self, nx: f64, ny: f64) -> Ray {
        let b = self.basis();
        match self.projection {
            Projection::Orthographic { view_height } => {
                let half_h = view_height / 2.0;
                let half_w = half_h * self.aspect;
                Ray {
                    origin: b.eye + b.right * (nx * half_w) + b.up * (ny * half_h),
                    direction: b.forward,
                }
            }
            Projection::Perspective { vfov } => {
                let th = (vfov.to_radians() / 2.0).tan();
                let d = b.forward + b.right * (nx * th * self.aspect) + b.up * (ny * th);
                Ray {
                    origin: b.eye,
                    direction: d.normalized(),
                }
            }
        }
    }

    /// Ray through the center of pixel `(x, y)` of a `width x height` frame.
    pub fn ray(&self, x: usize, y: usize, width: usize, height: usize) -> Ray {
        let nx = 2.0 * (x as f64 + 0.5) / width as f64 - 1.0;
        let ny = 1.0 - 2.0 * (y as f64 + 0.5) / height as f64;
        self.ray_ndc(nx, ny)
    }

    /// Ray through the view center.
    pub fn center_ray(&self) -> Ray {
        self.ray_ndc(0.0, 0.0)
    }
}

/// Ray through the center of pixel `pixel` of a `size` frame.
pub fn camera_ray(camera: &Camera, pixel: (usize, usize), size: (usize, usize)) -> Ray {
    camera.ray(pixel.0, pixel.1, size.0, size.1)
}

/// Multi-view rig: `n_views` cameras spaced `step_deg` apart in azimuth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewRig {
    pub n_views: usize,
    pub step_deg: f64,
}

pub const MAX_VIEWS: usize = 128;

impl Default for ViewRig {
    fn default() -> Self {
        ViewRig {
            n_views: 45,
            step_deg: 1.0,
        }
    }
}

impl ViewRig {
    pub fn new(n_views: usize, step_deg: f64) -> Result<Self, String> {
        let rig = ViewRig { n_views, step_deg };
        rig.validate()?;
        Ok(rig)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(1..=MAX_VIEWS).contains(&self.n_views) {
            return Err(format!("view count must lie in 1..={MAX_VIEWS} (got {})", self.n_views));
        }
        if !(self.step_deg > 0.0) {
            return Err(format!("step must be positive (got {})", self.step_deg));
        }
        if self.cone_deg() > 90.0 {
            return Err(format!("view cone {}° exceeds 90°", self.cone_deg()));
        }
        Ok(())
    }

    /// Angle between the outermost views.
    pub fn cone_deg(&self) -> f64 {
        (self.n_views as f64 - 1.0) * self.step_deg
    }

    pub fn offset_deg(&self, i: usize) -> f64 {
        (i as f64 - (self.n_views as f64 - 1.0) / 2.0) * self.step_deg
    }
}

/// Cameras for every view of `rig`, view 0 leftmost.
pub fn turntable_cameras(base: &Camera, rig: &ViewRig) -> Vec<Camera> {
    (0..rig.n_views)
        .map(|i| Camera {
            azimuth: base.azimuth + rig.offset_deg(i),
            ..*base
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam(projection: Projection) -> Camera {
        Camera {
            rotation_center: Vec3::new(3.0, -2.0, 5.0),
            azimuth: 30.0,
            elevation: 20.0,
            distance: 40.0,
            projection,
            aspect: 1.0,
        }
    }

    fn distance_to_line(p: Vec3, r: &Ray) -> f64 {
        let v = p - r.origin;
        (v - r.direction * v.dot(r.direction)).length()
    }

    #[test]
    fn center_pixel_passes_through_rotation_center() {
        for proj in [
            Projection::Orthographic { view_height: 10.0 },
            Projection::Perspective { vfov: 40.0 },
        ] {
            let c = cam(proj);
            let r = camera_ray(&c, (3, 3), (7, 7));
            assert!(distance_to_line(c.rotation_center, &r) < 1e-9);
        }
    }

    #[test]
    fn orthographic_rays_are_parallel() {
        let c = cam(Projection::Orthographic { view_height: 10.0 });
        let a = c.ray(0, 0, 8, 8);
        let b = c.ray(7, 5, 8, 8);
        assert!((a.direction - b.direction).length() < 1e-12);
        assert!((a.origin - b.origin).length() > 1.0);
    }

    #[test]
    fn perspective_vfov_90_top_center() {
        let c = cam(Projection::Perspective { vfov: 90.0 });
        let n = 101;
        let r = c.ray(50, 0, n, n);
        let angle = r.direction.dot(c.basis().forward).acos().to_degrees();
        let half_pixel = (1.0f64 / n as f64).atan().to_degrees();
        assert!((angle - 45.0).abs() <= half_pixel, "{angle}");
    }

    #[test]
    fn default_rig_spans_44_degrees() {
        let rig = ViewRig::default();
        let base = cam(Projection::Orthographic { view_height: 10.0 });
        let cams = turntable_cameras(&base, &rig);
        assert_eq!(cams.len(), 45);
        assert_eq!(rig.cone_deg(), 44.0);
        assert_eq!(cams[0].azimuth, base.azimuth - 22.0);
        assert_eq!(cams[44].azimuth, base.azimuth + 22.0);
        assert_eq!(cams[22], base);
        for c in &cams {
            assert!(((c.position() - c.rotation_center).length() - base.distance).abs() < 1e-9);
        }
    }

    #[test]
    fn single_view_rig_is_base() {
        let base = cam(Projection::Perspective { vfov: 30.0 });
        assert_eq!(turntable_cameras(&base, &ViewRig::new(1, 1.0).unwrap()), vec![base]);
    }

    #[test]
    fn rig_limits() {
        assert!(ViewRig::new(0, 1.0).is_err());
        assert!(ViewRig::new(10, 0.0).is_err());
        assert!(ViewRig::new(92, 1.0).is_err());
        assert!(ViewRig::new(91, 1.0).is_ok());
    }

    #[test]
    fn looking_from_round_trips_position() {
        let c = cam(Projection::Orthographic { view_height: 4.0 });
        let back = c.looking_from(c.position());
        assert!((back.position() - c.position()).length() < 1e-9);
    }
}
