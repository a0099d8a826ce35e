//! Tile-parallel CPU ray caster.
//!
//! Every pixel is a pure function of (volume, settings, camera, pixel), so
//! output is identical for any tile schedule or worker count. Empty-space
//! skipping only ever skips samples that cannot change the accumulator, and
//! keeps the remaining samples on the same parameter grid.

use rayon::prelude::*;

use super::camera::Camera;
use super::settings::{RenderMode, RenderSettings};
use crate::frame::Frame;
use crate::math::{Ray, Vec3};
use crate::volume::sampling::sample_raw;
use crate::volume::{TransferFunction, Volume};

pub const TILE_SIZE: usize = 32;
/// Accumulated opacity at which front-to-back compositing stops.
pub const EARLY_TERMINATION_ALPHA: f32 = 0.999;
/// Edge length, in voxels, of the empty-space skipping cells.
const CELL: usize = 8;
/// Margin for rounding when comparing interpolated samples to a cell maximum.
const CELL_MARGIN: f32 = 1.0 + 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("render cancelled")]
pub struct Cancelled;

/// Per-channel maxima over the trilinear support of each skipping cell.
struct SkipGrid {
    cells: [usize; 3],
    /// `max[c][cell]`
    max: Vec<Vec<f32>>,
}

impl SkipGrid {
    fn build(volume: &Volume) -> SkipGrid {
        let dims = volume.grid().dims;
        let cells = [dims[0].div_ceil(CELL), dims[1].div_ceil(CELL), dims[2].div_ceil(CELL)];
        let max = volume
            .channels()
            .iter()
            .map(|ch| {
                let s = ch.samples();
                let mut out = vec![0f32; cells[0] * cells[1] * cells[2]];
                for cz in 0..cells[2] {
                    let (z0, z1) = support(cz, dims[2]);
                    for cy in 0..cells[1] {
                        let (y0, y1) = support(cy, dims[1]);
                        for cx in 0..cells[0] {
                            let (x0, x1) = support(cx, dims[0]);
                            let mut m = 0f32;
                            for k in z0..z1 {
                                for j in y0..y1 {
                                    let row = dims[0] * (j + dims[1] * k);
                                    for &v in &s[row + x0..row + x1] {
                                        m = m.max(v);
                                    }
                                }
                            }
                            out[cx + cells[0] * (cy + cells[1] * cz)] = m;
                        }
                    }
                }
                out
            })
            .collect();
        SkipGrid { cells, max }
    }

    #[inline]
    fn cell_of(&self, p: [f64; 3]) -> [usize; 3] {
        let mut c = [0usize; 3];
        for a in 0..3 {
            c[a] = ((p[a].max(0.0) as usize) / CELL).min(self.cells[a] - 1);
        }
        c
    }

    #[inline]
    fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.cells[0] * (c[1] + self.cells[1] * c[2])
    }
}

/// Voxel range whose values can influence a trilinear sample inside cell `c`.
fn support(c: usize, n: usize) -> (usize, usize) {
    let lo = (c * CELL).saturating_sub(1);
    let hi = ((c + 1) * CELL + 1).min(n);
    (lo, hi)
}

/// Ray expressed in voxel coordinates, parameterized by world distance.
#[derive(Clone, Copy)]
pub(crate) struct VoxelRay {
    origin: [f64; 3],
    dir: [f64; 3],
}

impl VoxelRay {
    #[inline]
    pub(crate) fn at(&self, t: f64) -> [f64; 3] {
        [
            self.origin[0] + self.dir[0] * t,
            self.origin[1] + self.dir[1] * t,
            self.origin[2] + self.dir[2] * t,
        ]
    }

    /// Parameter at which the ray leaves the skipping cell `c`.
    #[inline]
    fn cell_exit(&self, c: [usize; 3]) -> f64 {
        let mut t = f64::INFINITY;
        for ((&d, &o), &ca) in self.dir.iter().zip(&self.origin).zip(&c) {
            if d > 0.0 {
                t = t.min((((ca + 1) * CELL) as f64 - o) / d);
            } else if d < 0.0 {
                t = t.min(((ca * CELL) as f64 - o) / d);
            }
        }
        t
    }
}

/// Renders frames of one volume under one set of render settings.
pub struct Renderer<'a> {
    volume: &'a Volume,
    settings: &'a RenderSettings,
    transfer: Vec<TransferFunction>,
    skip: SkipGrid,
    inv_spacing: [f64; 3],
    extent: Vec3,
    reference_step: f64,
}

impl<'a> Renderer<'a> {
    pub fn new(volume: &'a Volume, settings: &'a RenderSettings) -> Self {
        let grid = volume.grid();
        Renderer {
            volume,
            settings,
            transfer: settings.resolved_transfer(volume.n_channels()),
            skip: SkipGrid::build(volume),
            inv_spacing: [1.0 / grid.spacing[0], 1.0 / grid.spacing[1], 1.0 / grid.spacing[2]],
            extent: grid.extent(),
            reference_step: grid.min_spacing(),
        }
    }

    pub fn volume(&self) -> &Volume {
        self.volume
    }

    pub fn settings(&self) -> &RenderSettings {
        self.settings
    }

    /// World distance at which opacity is taken at face value.
    pub fn reference_step(&self) -> f64 {
        self.reference_step
    }

    /// Entry/exit parameters of `ray` through the volume box.
    pub(crate) fn clip(&self, ray: &Ray) -> Option<(f64, f64, VoxelRay)> {
        let (t0, t1) = ray.intersect_box(Vec3::ZERO, self.extent)?;
        let vr = VoxelRay {
            origin: [
                ray.origin.x * self.inv_spacing[0],
                ray.origin.y * self.inv_spacing[1],
                ray.origin.z * self.inv_spacing[2],
            ],
            dir: [
                ray.direction.x * self.inv_spacing[0],
                ray.direction.y * self.inv_spacing[1],
                ray.direction.z * self.inv_spacing[2],
            ],
        };
        Some((t0, t1, vr))
    }

    #[inline]
    pub(crate) fn sample(&self, c: usize, p: [f64; 3]) -> f32 {
        let ch = self.volume.channel(c);
        sample_raw(ch.samples(), ch.dims(), p)
    }

    /// Index of the first sample at or after `k` that is not provably skippable,
    /// where sample `k` sits at `t_of(k)` and `skippable(cell)` decides a cell.
    #[inline]
    fn next_live(
        &self,
        vr: &VoxelRay,
        mut k: usize,
        count: usize,
        t_of: impl Fn(usize) -> f64,
        k_at: impl Fn(f64) -> usize,
        skippable: impl Fn(usize) -> bool,
    ) -> usize {
        while k < count {
            let cell = self.skip.cell_of(vr.at(t_of(k)));
            if !skippable(self.skip.index(cell)) {
                return k;
            }
            k = k_at(vr.cell_exit(cell)).max(k + 1);
        }
        count
    }

    /// Per-channel maximum intensity along `ray` (samples at entry + k*step).
    pub(crate) fn ray_max(&self, ray: &Ray, channels: &[usize], out: &mut [f32]) {
        out.iter_mut().for_each(|m| *m = 0.0);
        let Some((t0, t1, vr)) = self.clip(ray) else {
            return;
        };
        let step = self.settings.sample_step;
        let count = ((t1 - t0) / step).floor() as usize + 1;
        let t_of = |k: usize| t0 + k as f64 * step;
        let k_at = |t: f64| ((t - t0) / step).ceil().max(0.0) as usize;
        let mut k = 0;
        loop {
            k = self.next_live(&vr, k, count, t_of, k_at, |cell| {
                channels
                    .iter()
                    .zip(out.iter())
                    .all(|(&c, &m)| self.skip.max[c][cell] * CELL_MARGIN <= m)
            });
            if k >= count {
                break;
            }
            let p = vr.at(t_of(k));
            for (slot, &c) in out.iter_mut().zip(channels) {
                let s = self.sample(c, p);
                if s > *slot {
                    *slot = s;
                }
            }
            k += 1;
        }
    }

    fn mip_pixel(&self, ray: &Ray, channels: &[usize]) -> [f32; 4] {
        let mut maxima = [0f32; 16];
        let mut heap;
        let buf: &mut [f32] = if channels.len() <= maxima.len() {
            &mut maxima[..channels.len()]
        } else {
            heap = vec![0f32; channels.len()];
            &mut heap
        };
        self.ray_max(ray, channels, buf);
        let mut rgba = [0f32; 4];
        for (&c, &m) in channels.iter().zip(buf.iter()) {
            let mapped = self.transfer[c].apply(m);
            for i in 0..4 {
                rgba[i] = rgba[i].max(mapped[i]);
            }
        }
        rgba
    }

    /// Front-to-back emission-absorption with midpoint sampling; returns
    /// premultiplied RGBA.
    pub(crate) fn ea_pixel(&self, ray: &Ray, channels: &[usize]) -> [f32; 4] {
        let mut acc = [0f32; 4];
        let Some((t0, t1, vr)) = self.clip(ray) else {
            return acc;
        };
        let step = self.settings.sample_step;
        let len = t1 - t0;
        if !(len > 0.0) {
            return acc;
        }
        let count = (len / step).ceil() as usize;
        let seg_start = |k: usize| t0 + k as f64 * step;
        let seg_len = |k: usize| if k + 1 == count { t1 - seg_start(k) } else { step };
        let t_mid = |k: usize| seg_start(k) + seg_len(k) * 0.5;
        let k_at = |t: f64| (((t - t0) / step) - 0.5).ceil().max(0.0) as usize;
        let transparent = |cell: usize| {
            channels.iter().all(|&c| {
                let m = self.skip.max[c][cell];
                m == 0.0 || self.transfer[c].apply(m * CELL_MARGIN)[3] == 0.0
            })
        };
        let single = channels.len() == 1;
        let mut k = 0;
        loop {
            k = self.next_live(&vr, k, count, t_mid, k_at, transparent);
            if k >= count {
                break;
            }
            let p = vr.at(t_mid(k));
            let exponent = seg_len(k) / self.reference_step;
            // combined opacity and premultiplied color of this segment
            let (mut a_seg, mut col) = (0f32, [0f32; 3]);
            if single {
                let c = channels[0];
                let rgba = self.transfer[c].apply(self.sample(c, p));
                let a = correct_opacity(rgba[3], exponent);
                a_seg = a;
                col = [rgba[0] * a, rgba[1] * a, rgba[2] * a];
            } else {
                let mut keep = 1f32;
                let mut weight = 0f32;
                let mut sum = [0f32; 3];
                for &c in channels {
                    let rgba = self.transfer[c].apply(self.sample(c, p));
                    let a = correct_opacity(rgba[3], exponent);
                    keep *= 1.0 - a;
                    weight += a;
                    for i in 0..3 {
                        sum[i] += a * rgba[i];
                    }
                }
                if weight > 0.0 {
                    a_seg = 1.0 - keep;
                    let scale = a_seg / weight;
                    col = [sum[0] * scale, sum[1] * scale, sum[2] * scale];
                }
            }
            if a_seg > 0.0 {
                let w = 1.0 - acc[3];
                acc[0] += w * col[0];
                acc[1] += w * col[1];
                acc[2] += w * col[2];
                acc[3] += w * a_seg;
                if acc[3] >= EARLY_TERMINATION_ALPHA {
                    break;
                }
            }
            k += 1;
        }
        acc
    }

    fn integrate(&self, ray: &Ray, channels: &[usize]) -> [f32; 4] {
        match self.settings.mode {
            RenderMode::Mip => self.mip_pixel(ray, channels),
            RenderMode::EmissionAbsorption => self.ea_pixel(ray, channels),
        }
    }

    /// Premultiplied RGBA of one ray before the background is applied.
    pub fn shade_ray(&self, ray: &Ray) -> [f32; 4] {
        let n = self.volume.n_channels();
        if self.settings.layering {
            let mut acc = [0f32; 4];
            for c in 0..n {
                let layer = self.integrate(ray, &[c]);
                acc = over(layer, acc);
            }
            acc
        } else {
            let all: Vec<usize> = (0..n).collect();
            self.integrate(ray, &all)
        }
    }

    fn finish(&self, premul: [f32; 4]) -> [u8; 4] {
        let bg = self.settings.background;
        let bg_p = [bg[0] * bg[3], bg[1] * bg[3], bg[2] * bg[3], bg[3]];
        let out = over(clamp4(premul), bg_p);
        let a = out[3].clamp(0.0, 1.0);
        let straight = |v: f32| if a > 0.0 { v / a } else { 0.0 };
        [
            quantize(straight(out[0])),
            quantize(straight(out[1])),
            quantize(straight(out[2])),
            quantize(a),
        ]
    }

    pub fn render(&self, camera: &Camera, size: (usize, usize)) -> Frame {
        self.render_cancellable(camera, size, &|| false)
            .expect("render without cancellation cannot be cancelled")
    }

    /// Renders in 32x32 tiles scheduled on the current rayon pool, checking
    /// `cancelled` before each tile. A cancelled render discards partial output.
    pub fn render_cancellable(
        &self,
        camera: &Camera,
        size: (usize, usize),
        cancelled: &(dyn Fn() -> bool + Sync),
    ) -> Result<Frame, Cancelled> {
        let (w, h) = size;
        let tiles = tiles(w, h);
        let done: Vec<Option<Vec<u8>>> = tiles
            .par_iter()
            .map(|&(tx, ty, tw, th)| {
                if cancelled() {
                    return None;
                }
                let mut buf = Vec::with_capacity(4 * tw * th);
                for y in ty..ty + th {
                    for x in tx..tx + tw {
                        let ray = camera.ray(x, y, w, h);
                        buf.extend_from_slice(&self.finish(self.shade_ray(&ray)));
                    }
                }
                Some(buf)
            })
            .collect();
        let mut frame = Frame::new(w, h);
        let stride = 4 * w;
        for (&(tx, ty, tw, th), buf) in tiles.iter().zip(done) {
            let buf = buf.ok_or(Cancelled)?;
            let px = frame.pixels_mut();
            for row in 0..th {
                let d = (ty + row) * stride + 4 * tx;
                px[d..d + 4 * tw].copy_from_slice(&buf[4 * tw * row..4 * tw * (row + 1)]);
            }
        }
        Ok(frame)
    }

    /// Pre-transfer per-channel maxima for every pixel, `[channel][y * w + x]`.
    pub fn max_intensity_image(&self, camera: &Camera, size: (usize, usize)) -> Vec<Vec<f32>> {
        let (w, h) = size;
        let n = self.volume.n_channels();
        let all: Vec<usize> = (0..n).collect();
        let per_pixel: Vec<Vec<f32>> = (0..w * h)
            .into_par_iter()
            .map(|i| {
                let mut m = vec![0f32; n];
                self.ray_max(&camera.ray(i % w, i / w, w, h), &all, &mut m);
                m
            })
            .collect();
        (0..n).map(|c| per_pixel.iter().map(|m| m[c]).collect()).collect()
    }
}

fn tiles(w: usize, h: usize) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    for ty in (0..h).step_by(TILE_SIZE) {
        for tx in (0..w).step_by(TILE_SIZE) {
            out.push((tx, ty, TILE_SIZE.min(w - tx), TILE_SIZE.min(h - ty)));
        }
    }
    out
}

/// Opacity of a segment `exponent` reference steps long.
#[inline]
pub fn correct_opacity(alpha: f32, exponent: f64) -> f32 {
    if alpha <= 0.0 {
        0.0
    } else if alpha >= 1.0 {
        1.0
    } else if exponent == 1.0 {
        alpha
    } else {
        (1.0 - ((1.0 - alpha as f64).powf(exponent)) as f32).clamp(0.0, 1.0)
    }
}

/// Premultiplied "over".
#[inline]
pub fn over(src: [f32; 4], dst: [f32; 4]) -> [f32; 4] {
    let k = 1.0 - src[3];
    [
        src[0] + k * dst[0],
        src[1] + k * dst[1],
        src[2] + k * dst[2],
        src[3] + k * dst[3],
    ]
}

#[inline]
fn clamp4(v: [f32; 4]) -> [f32; 4] {
    v.map(|x| x.clamp(0.0, 1.0))
}

#[inline]
pub fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn render_mip(volume: &Volume, camera: &Camera, settings: &RenderSettings, size: (usize, usize)) -> Frame {
    let s = RenderSettings {
        mode: RenderMode::Mip,
        ..settings.clone()
    };
    Renderer::new(volume, &s).render(camera, size)
}

pub fn render_emission_absorption(
    volume: &Volume,
    camera: &Camera,
    settings: &RenderSettings,
    size: (usize, usize),
) -> Frame {
    let s = RenderSettings {
        mode: RenderMode::EmissionAbsorption,
        ..settings.clone()
    };
    Renderer::new(volume, &s).render(camera, size)
}

pub fn render_layered(volume: &Volume, camera: &Camera, settings: &RenderSettings, size: (usize, usize)) -> Frame {
    let s = RenderSettings {
        layering: true,
        ..settings.clone()
    };
    Renderer::new(volume, &s).render(camera, size)
}

/// Dispatches on `settings.mode` and `settings.layering`.
pub fn render(volume: &Volume, camera: &Camera, settings: &RenderSettings, size: (usize, usize)) -> Frame {
    Renderer::new(volume, settings).render(camera, size)
}
