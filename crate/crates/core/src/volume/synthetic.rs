//! Deterministic test scenes standing in for microscopy scans.
//!
//! Geometry is expressed in voxel coordinates (voxel `i` centered at `i + 0.5`).
//! Samples are snapped to the u16 grid so a saved scene reloads bit-exactly.

use std::f64::consts::TAU;
use std::str::FromStr;

use super::{Grid, SampleType, Volume, VolumeChannel, VolumeError};
use crate::math::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticShape {
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    /// Voxels whose center coordinate along `axis` lies in `[lo, hi]`.
    Slab {
        axis: usize,
        lo: f64,
        hi: f64,
    },
    /// Tubes winding around the z axis through the xy center; the tube is
    /// defined by its horizontal cross-section (a disc at every z).
    HelixBundle {
        count: usize,
        bundle_radius: f64,
        tube_radius: f64,
        pitch: f64,
    },
    /// Binary tree of capsules growing along +y from the bottom center.
    Branching {
        depth: usize,
        length: f64,
        radius: f64,
        angle_deg: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub shape: SyntheticShape,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    /// Linear falloff width in voxels outside the shape; 0 gives a hard edge.
    pub falloff: f64,
}

impl SyntheticScene {
    pub fn new(shape: SyntheticShape, dims: [usize; 3]) -> Self {
        SyntheticScene {
            shape,
            dims,
            spacing: [1.0; 3],
            falloff: 0.0,
        }
    }

    pub fn sphere(dims: [usize; 3], center: [f64; 3], radius: f64) -> Self {
        SyntheticScene::new(SyntheticShape::Sphere { center, radius }, dims)
    }

    pub fn with_falloff(mut self, falloff: f64) -> Self {
        self.falloff = falloff;
        self
    }

    pub fn with_spacing(mut self, spacing: [f64; 3]) -> Self {
        self.spacing = spacing;
        self
    }

    /// Distance from `p` (voxel coordinates) to the shape surface; <= 0 inside.
    pub fn outside_distance(&self, p: Vec3, segments: &[(Vec3, Vec3, f64)]) -> f64 {
        match &self.shape {
            SyntheticShape::Sphere { center, radius } => (p - Vec3::from_array(*center)).length() - radius,
            SyntheticShape::Slab { axis, lo, hi } => {
                let v = p.axis(*axis);
                (lo - v).max(v - hi)
            }
            SyntheticShape::HelixBundle {
                count,
                bundle_radius,
                tube_radius,
                pitch,
            } => {
                let (cx, cy) = (self.dims[0] as f64 / 2.0, self.dims[1] as f64 / 2.0);
                (0..*count)
                    .map(|k| {
                        let phase = TAU * p.z / pitch + TAU * k as f64 / *count as f64;
                        let hx = cx + bundle_radius * phase.cos();
                        let hy = cy + bundle_radius * phase.sin();
                        (p.x - hx).hypot(p.y - hy) - tube_radius
                    })
                    .fold(f64::INFINITY, f64::min)
            }
            SyntheticShape::Branching { .. } => segments
                .iter()
                .map(|&(a, b, r)| segment_distance(p, a, b) - r)
                .fold(f64::INFINITY, f64::min),
        }
    }

    fn intensity(&self, d: f64) -> f32 {
        if d <= 0.0 {
            1.0
        } else if self.falloff > 0.0 && d < self.falloff {
            (1.0 - d / self.falloff) as f32
        } else {
            0.0
        }
    }

    /// Capsules of the branching tree; empty for other shapes.
    pub fn branch_segments(&self) -> Vec<(Vec3, Vec3, f64)> {
        let SyntheticShape::Branching {
            depth,
            length,
            radius,
            angle_deg,
        } = self.shape
        else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let root = Vec3::new(self.dims[0] as f64 / 2.0, 0.5, self.dims[2] as f64 / 2.0);
        grow(
            &mut out,
            root,
            Vec3::Y,
            length,
            radius,
            angle_deg.to_radians(),
            depth,
            0,
        );
        out
    }
}

#[allow(clippy::too_many_arguments)]
fn grow(
    out: &mut Vec<(Vec3, Vec3, f64)>,
    start: Vec3,
    dir: Vec3,
    length: f64,
    radius: f64,
    angle: f64,
    remaining: usize,
    level: usize,
) {
    let end = start + dir * length;
    out.push((start, end, radius));
    if remaining <= 1 {
        return;
    }
    // alternate the branching plane between levels
    let axis = if level.is_multiple_of(2) {
        Vec3::new(0.0, 0.0, 1.0)
    } else {
        Vec3::new(1.0, 0.0, 0.0)
    };
    for sign in [-1.0, 1.0] {
        let child = rotate(dir, axis, sign * angle);
        grow(
            out,
            end,
            child,
            length * 0.7,
            radius * 0.75,
            angle,
            remaining - 1,
            level + 1,
        );
    }
}

/// Rodrigues rotation of `v` about unit `axis`.
fn rotate(v: Vec3, axis: Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c))
}

fn segment_distance(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
    (p - (a + ab * t)).length()
}

pub fn make_synthetic(scene: &SyntheticScene) -> Result<Volume, VolumeError> {
    let grid = Grid::new(scene.dims, scene.spacing)?;
    let segments = scene.branch_segments();
    let ch = VolumeChannel::from_fn(shape_name(&scene.shape), grid, |i, j, k| {
        let p = Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5);
        SampleType::U16Le.quantize(scene.intensity(scene.outside_distance(p, &segments)))
    });
    Ok(Volume::new(vec![ch])?.with_sample_type(SampleType::U16Le))
}

fn shape_name(s: &SyntheticShape) -> &'static str {
    match s {
        SyntheticShape::Sphere { .. } => "sphere",
        SyntheticShape::Slab { .. } => "slab",
        SyntheticShape::HelixBundle { .. } => "helix-bundle",
        SyntheticShape::Branching { .. } => "branching",
    }
}

/// Parses `shape[:key=value,...]`, e.g.
/// `sphere:dims=64x64x64,radius=20,center=32/32/32,falloff=1.5`.
/// Vector values use `/` or `x` as separators.
impl FromStr for SyntheticScene {
    type Err = VolumeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = std::collections::HashMap::new();
        for item in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| VolumeError::BadScene(format!("expected key=value, got `{item}`")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let num = |k: &str, default: f64| -> Result<f64, VolumeError> {
            kv.get(k).map_or(Ok(default), |v| {
                v.parse()
                    .map_err(|_| VolumeError::BadScene(format!("`{k}` is not a number: `{v}`")))
            })
        };
        let vec3 = |k: &str| -> Result<Option<Vec<f64>>, VolumeError> {
            kv.get(k)
                .map(|v| {
                    let parts: Result<Vec<f64>, _> = v.split(['/', 'x']).map(|t| t.trim().parse::<f64>()).collect();
                    match parts {
                        Ok(p) if p.len() == 3 => Ok(p),
                        _ => Err(VolumeError::BadScene(format!("`{k}` needs three components: `{v}`"))),
                    }
                })
                .transpose()
        };

        let dims = match vec3("dims")? {
            Some(d) => {
                if d.iter().any(|&x| x < 1.0 || x.fract() != 0.0) {
                    let clamp = |v: f64| v.max(0.0) as usize;
                    return Err(VolumeError::InvalidDims([clamp(d[0]), clamp(d[1]), clamp(d[2])]));
                }
                [d[0] as usize, d[1] as usize, d[2] as usize]
            }
            None => [64, 64, 64],
        };
        let [nx, ny, nz] = dims.map(|d| d as f64);
        let shape = match name.trim() {
            "sphere" => {
                let center = vec3("center")?.unwrap_or_else(|| vec![nx / 2.0, ny / 2.0, nz / 2.0]);
                SyntheticShape::Sphere {
                    center: [center[0], center[1], center[2]],
                    radius: num("radius", nx.min(ny).min(nz) * 0.3)?,
                }
            }
            "slab" => SyntheticShape::Slab {
                axis: num("axis", 2.0)? as usize % 3,
                lo: num("lo", nz * 0.25)?,
                hi: num("hi", nz * 0.75)?,
            },
            "helix-bundle" => SyntheticShape::HelixBundle {
                count: num("count", 3.0)? as usize,
                bundle_radius: num("bundle_radius", nx.min(ny) * 0.2)?,
                tube_radius: num("tube_radius", nx.min(ny) * 0.06)?,
                pitch: num("pitch", nz * 0.5)?,
            },
            "branching" => SyntheticShape::Branching {
                depth: num("depth", 4.0)? as usize,
                length: num("length", ny * 0.35)?,
                radius: num("radius", nx.min(nz) * 0.04)?,
                angle_deg: num("angle", 35.0)?,
            },
            other => return Err(VolumeError::UnknownShape(other.to_string())),
        };
        let spacing = vec3("spacing")?.unwrap_or_else(|| vec![1.0; 3]);
        Ok(SyntheticScene {
            shape,
            dims,
            spacing: [spacing[0], spacing[1], spacing[2]],
            falloff: num("falloff", 0.0)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_center_and_exterior() {
        let scene = SyntheticScene::sphere([16, 16, 16], [8.5, 8.5, 8.5], 4.0).with_falloff(1.5);
        let v = make_synthetic(&scene).unwrap();
        let ch = v.channel(0);
        assert_eq!(ch.voxel(8, 8, 8), 1.0);
        // distance from (8.5,8.5,8.5) to voxel (14,8,8) center is 6 > 4 + 1.5
        assert_eq!(ch.voxel(14, 8, 8), 0.0);
    }

    #[test]
    fn helix_bundle_matches_point_in_tube_count() {
        let (count, r_bundle, r_tube, pitch) = (3usize, 6.0f64, 2.0f64, 16.0f64);
        let scene = SyntheticScene::new(
            SyntheticShape::HelixBundle {
                count,
                bundle_radius: r_bundle,
                tube_radius: r_tube,
                pitch,
            },
            [32, 32, 24],
        );
        let v = make_synthetic(&scene).unwrap();
        let nonzero = v.channel(0).samples().iter().filter(|&&s| s > 0.0).count();

        // independent classification: rotate the voxel into each tube's frame
        // (undo the helix phase) and test against a fixed disc center
        let mut expected = 0;
        for k in 0..24 {
            for j in 0..32 {
                for i in 0..32 {
                    let (x, y, z) = (i as f64 + 0.5 - 16.0, j as f64 + 0.5 - 16.0, k as f64 + 0.5);
                    let inside = (0..count).any(|t| {
                        let theta = -(z / pitch + t as f64 / count as f64) * std::f64::consts::TAU;
                        let rx = x * theta.cos() - y * theta.sin();
                        let ry = x * theta.sin() + y * theta.cos();
                        (rx - r_bundle).powi(2) + ry * ry <= r_tube * r_tube
                    });
                    expected += inside as usize;
                }
            }
        }
        assert!(expected > 0);
        assert_eq!(nonzero, expected);
    }

    #[test]
    fn deterministic() {
        let scene: SyntheticScene = "branching:dims=24x32x24,depth=3".parse().unwrap();
        let a = make_synthetic(&scene).unwrap();
        let b = make_synthetic(&scene).unwrap();
        assert_eq!(a.channel(0).samples(), b.channel(0).samples());
        assert!(a.max_value() == 1.0);
    }

    #[test]
    fn descriptor_errors() {
        assert!(matches!(
            "torus:dims=8x8x8".parse::<SyntheticScene>(),
            Err(VolumeError::UnknownShape(_))
        ));
        assert!(matches!(
            "sphere:dims=8x0x8".parse::<SyntheticScene>(),
            Err(VolumeError::InvalidDims(_))
        ));
        let s: SyntheticScene = "slab:dims=4x4x8,axis=2,lo=2,hi=5".parse().unwrap();
        assert_eq!(
            s.shape,
            SyntheticShape::Slab {
                axis: 2,
                lo: 2.0,
                hi: 5.0
            }
        );
    }
}
