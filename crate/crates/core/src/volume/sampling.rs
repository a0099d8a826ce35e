use super::VolumeChannel;

/// Trilinear interpolation at continuous voxel coordinate `p`.
///
/// Voxel `(i, j, k)` is located at `(i + 0.5, j + 0.5, k + 0.5)`. Points outside
/// `[0, n]` on any axis return 0; inside, neighbours past the outermost voxel
/// centers clamp to the edge voxel.
pub fn sample_trilinear(channel: &VolumeChannel, p: [f64; 3]) -> f32 {
    sample_raw(channel.samples(), channel.dims(), p)
}

#[inline]
pub(crate) fn sample_raw(samples: &[f32], dims: [usize; 3], p: [f64; 3]) -> f32 {
    let mut i0 = [0usize; 3];
    let mut i1 = [0usize; 3];
    let mut f = [0f32; 3];
    for a in 0..3 {
        let n = dims[a];
        let x = p[a];
        if !(x >= 0.0 && x <= n as f64) {
            return 0.0;
        }
        let q = x - 0.5;
        let fl = q.floor();
        let lo = fl as i64;
        f[a] = (q - fl) as f32;
        let last = n as i64 - 1;
        i0[a] = lo.clamp(0, last) as usize;
        i1[a] = (lo + 1).clamp(0, last) as usize;
    }
    let nx = dims[0];
    let nxy = dims[0] * dims[1];
    let at = |i: usize, j: usize, k: usize| samples[i + nx * j + nxy * k];

    let c00 = lerp(at(i0[0], i0[1], i0[2]), at(i1[0], i0[1], i0[2]), f[0]);
    let c10 = lerp(at(i0[0], i1[1], i0[2]), at(i1[0], i1[1], i0[2]), f[0]);
    let c01 = lerp(at(i0[0], i0[1], i1[2]), at(i1[0], i0[1], i1[2]), f[0]);
    let c11 = lerp(at(i0[0], i1[1], i1[2]), at(i1[0], i1[1], i1[2]), f[0]);
    let c0 = lerp(c00, c10, f[1]);
    let c1 = lerp(c01, c11, f[1]);
    lerp(c0, c1, f[2])
}

#[inline]
fn lerp(a: f32, b: f32, t: f32) -> f32 {
    a + (b - a) * t
}
