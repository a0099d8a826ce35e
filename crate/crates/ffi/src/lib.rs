//! C ABI over the voxview renderer.
//!
//! Volumes and frames cross the boundary as opaque handles owned by the
//! caller once returned; release them with `voxview_volume_free` and
//! `voxview_frame_free`. Every fallible call returns a [`VoxviewStatus`];
//! on failure the message is available from `voxview_last_error` on the
//! same thread until the next failing call.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use voxview::multiview::{foveal_pixels, interleave, DisplaySpec, LenticularCalibration, QuiltLayout, SubpixelOrder};
use voxview::pipeline::{render_quilt, ViewSource};
use voxview::raycast::autofocus;
use voxview::volume::SyntheticScene;
use voxview::{Camera, Frame, Projection, RenderMode, RenderSettings, Renderer, ViewRig, Volume};

/// Opaque volume handle.
pub struct VoxviewVolume(Volume);

/// Opaque RGBA8 frame handle.
pub struct VoxviewFrame(Frame);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoxviewStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoxviewProjection {
    Orthographic = 0,
    Perspective = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxviewCamera {
    pub center: [f64; 3],
    /// Degrees.
    pub azimuth: f64,
    /// Degrees.
    pub elevation: f64,
    pub distance: f64,
    pub projection: VoxviewProjection,
    /// View height in micrometers (orthographic) or vertical field of view in degrees (perspective).
    pub projection_param: f64,
    pub aspect: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoxviewRenderMode {
    Mip = 0,
    EmissionAbsorption = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxviewSettings {
    pub mode: VoxviewRenderMode,
    pub layering: bool,
    pub sample_step: f64,
    /// Straight RGBA in [0, 1].
    pub background: [f32; 4],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoxviewSubpixelOrder {
    Rgb = 0,
    Bgr = 1,
    None = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxviewCalibration {
    pub screen_width: usize,
    pub screen_height: usize,
    pub pitch: f64,
    pub tilt: f64,
    pub center: f64,
    pub invert_views: bool,
    pub subpixel_order: VoxviewSubpixelOrder,
    pub n_views: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxviewQuilt {
    pub n_views: usize,
    /// Degrees between neighbouring views.
    pub step_deg: f64,
    pub columns: usize,
    pub rows: usize,
    pub tile_width: usize,
    pub tile_height: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(VoxviewStatus, String);

impl Failure {
    fn invalid(msg: impl ToString) -> Self {
        Failure(VoxviewStatus::InvalidArgument, msg.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VoxviewStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VoxviewStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            VoxviewStatus::Panic
        }
    }
}

unsafe fn reference<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(VoxviewStatus::NullArgument, format!("`{name}` is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(VoxviewStatus::NullArgument, format!("`{name}` is null")))
}

unsafe fn string(p: *const c_char, name: &str) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure(VoxviewStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure::invalid(format!("`{name}` is not valid UTF-8")))
}

fn volume_failure(e: voxview::VolumeError) -> Failure {
    let status = match e {
        voxview::VolumeError::Io { .. } => VoxviewStatus::Io,
        voxview::VolumeError::UnknownShape(_) | voxview::VolumeError::BadScene(_) => VoxviewStatus::InvalidArgument,
        _ => VoxviewStatus::Format,
    };
    Failure(status, e.to_string())
}

fn give<T>(out: &mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

impl VoxviewCamera {
    fn to_camera(self) -> Result<Camera, Failure> {
        let projection = match self.projection {
            VoxviewProjection::Orthographic => Projection::Orthographic {
                view_height: self.projection_param,
            },
            VoxviewProjection::Perspective => Projection::Perspective {
                vfov: self.projection_param,
            },
        };
        let cam = Camera {
            rotation_center: voxview::Vec3::from_array(self.center),
            azimuth: self.azimuth,
            elevation: self.elevation,
            distance: self.distance,
            projection,
            aspect: self.aspect,
        };
        cam.validate().map_err(Failure::invalid)?;
        Ok(cam)
    }

    fn from_camera(c: &Camera) -> Self {
        let (projection, projection_param) = match c.projection {
            Projection::Orthographic { view_height } => (VoxviewProjection::Orthographic, view_height),
            Projection::Perspective { vfov } => (VoxviewProjection::Perspective, vfov),
        };
        VoxviewCamera {
            center: c.rotation_center.to_array(),
            azimuth: c.azimuth,
            elevation: c.elevation,
            distance: c.distance,
            projection,
            projection_param,
            aspect: c.aspect,
        }
    }
}

impl VoxviewSettings {
    fn to_settings(self) -> Result<RenderSettings, Failure> {
        let s = RenderSettings {
            mode: match self.mode {
                VoxviewRenderMode::Mip => RenderMode::Mip,
                VoxviewRenderMode::EmissionAbsorption => RenderMode::EmissionAbsorption,
            },
            layering: self.layering,
            sample_step: self.sample_step,
            background: self.background,
            ..Default::default()
        };
        s.validate().map_err(Failure::invalid)?;
        Ok(s)
    }
}

impl VoxviewCalibration {
    fn to_calibration(self) -> LenticularCalibration {
        LenticularCalibration {
            screen_width: self.screen_width,
            screen_height: self.screen_height,
            pitch: self.pitch,
            tilt: self.tilt,
            center: self.center,
            invert_views: self.invert_views,
            subpixel_order: match self.subpixel_order {
                VoxviewSubpixelOrder::Rgb => SubpixelOrder::Rgb,
                VoxviewSubpixelOrder::Bgr => SubpixelOrder::Bgr,
                VoxviewSubpixelOrder::None => SubpixelOrder::None,
            },
            n_views: self.n_views,
        }
    }
}

/// Message of the last failure on this thread, or null if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn voxview_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn voxview_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Defaults: MIP, no layering, 0.5 µm steps, opaque black background.
#[no_mangle]
pub extern "C" fn voxview_settings_default() -> VoxviewSettings {
    let d = RenderSettings::default();
    VoxviewSettings {
        mode: VoxviewRenderMode::Mip,
        layering: d.layering,
        sample_step: d.sample_step,
        background: d.background,
    }
}

/// Loads a volume from its `.meta` sidecar.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn voxview_volume_load(path: *const c_char, out: *mut *mut VoxviewVolume) -> VoxviewStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = PathBuf::from(string(path, "path")?);
        let v = voxview::load_volume(&path).map_err(volume_failure)?;
        give(out, VoxviewVolume(v));
        Ok(())
    })
}

/// Builds a synthetic volume from a scene descriptor such as
/// `sphere:dims=64x64x64,radius=20`.
///
/// # Safety
/// `scene` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn voxview_volume_synth(scene: *const c_char, out: *mut *mut VoxviewVolume) -> VoxviewStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let scene: SyntheticScene = string(scene, "scene")?.parse().map_err(volume_failure)?;
        let v = voxview::volume::make_synthetic(&scene).map_err(volume_failure)?;
        give(out, VoxviewVolume(v));
        Ok(())
    })
}

/// Writes the volume as a `.meta` sidecar plus raw payloads.
///
/// # Safety
/// `volume` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn voxview_volume_save(volume: *const VoxviewVolume, path: *const c_char) -> VoxviewStatus {
    guard(|| {
        let v = reference(volume, "volume")?;
        let path = PathBuf::from(string(path, "path")?);
        voxview::save_volume(&v.0, &path).map_err(volume_failure)?;
        Ok(())
    })
}

/// # Safety
/// `volume` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn voxview_volume_free(volume: *mut VoxviewVolume) {
    if !volume.is_null() {
        drop(Box::from_raw(volume));
    }
}

/// Voxel counts along x, y, z and the channel count.
///
/// # Safety
/// `volume` must be a live handle; `dims` must point to 3 writable values.
#[no_mangle]
pub unsafe extern "C" fn voxview_volume_info(
    volume: *const VoxviewVolume,
    dims: *mut usize,
    channels: *mut usize,
) -> VoxviewStatus {
    guard(|| {
        let v = &reference(volume, "volume")?.0;
        if dims.is_null() {
            return Err(Failure(VoxviewStatus::NullArgument, "`dims` is null".into()));
        }
        std::slice::from_raw_parts_mut(dims, 3).copy_from_slice(&v.grid().dims);
        *out_ptr(channels, "channels")? = v.n_channels();
        Ok(())
    })
}

/// Orthographic camera framing the whole volume at `aspect` (width / height).
///
/// # Safety
/// `volume` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn voxview_camera_framing(
    volume: *const VoxviewVolume,
    aspect: f64,
    out: *mut VoxviewCamera,
) -> VoxviewStatus {
    guard(|| {
        let v = &reference(volume, "volume")?.0;
        if !(aspect > 0.0) || !aspect.is_finite() {
            return Err(Failure::invalid(format!("aspect must be positive (got {aspect})")));
        }
        *out_ptr(out, "out")? = VoxviewCamera::from_camera(&Camera::framing(&v.grid(), aspect));
        Ok(())
    })
}

/// Renders one `width x height` view.
///
/// # Safety
/// All pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn voxview_render(
    volume: *const VoxviewVolume,
    camera: *const VoxviewCamera,
    settings: *const VoxviewSettings,
    width: usize,
    height: usize,
    out: *mut *mut VoxviewFrame,
) -> VoxviewStatus {
    guard(|| {
        let v = &reference(volume, "volume")?.0;
        let cam = reference(camera, "camera")?.to_camera()?;
        let settings = reference(settings, "settings")?.to_settings()?;
        let out = out_ptr(out, "out")?;
        if width == 0 || height == 0 {
            return Err(Failure::invalid("frame size must be at least 1x1"));
        }
        give(
            out,
            VoxviewFrame(Renderer::new(v, &settings).render(&cam, (width, height))),
        );
        Ok(())
    })
}

/// Renders a turntable quilt: `n_views` views `step_deg` apart around the
/// camera, tiled bottom-left to top-right.
///
/// # Safety
/// All pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn voxview_render_quilt(
    volume: *const VoxviewVolume,
    camera: *const VoxviewCamera,
    settings: *const VoxviewSettings,
    quilt: *const VoxviewQuilt,
    out: *mut *mut VoxviewFrame,
) -> VoxviewStatus {
    guard(|| {
        let v = &reference(volume, "volume")?.0;
        let cam = reference(camera, "camera")?.to_camera()?;
        let settings = reference(settings, "settings")?.to_settings()?;
        let q = reference(quilt, "quilt")?;
        let out = out_ptr(out, "out")?;
        let rig = ViewRig::new(q.n_views, q.step_deg).map_err(Failure::invalid)?;
        let layout =
            QuiltLayout::new(q.columns, q.rows, q.tile_width, q.tile_height, q.n_views).map_err(Failure::invalid)?;
        let frame = render_quilt(v, &cam, &ViewSource::Turntable(rig), &settings, &layout).map_err(Failure::invalid)?;
        give(out, VoxviewFrame(frame));
        Ok(())
    })
}

/// Interleaves `n_views` equally sized views into a native lenticular frame.
///
/// # Safety
/// `views` must point to `n_views` live frame handles; `calibration` and
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn voxview_interleave(
    views: *const *const VoxviewFrame,
    n_views: usize,
    calibration: *const VoxviewCalibration,
    out: *mut *mut VoxviewFrame,
) -> VoxviewStatus {
    guard(|| {
        if views.is_null() {
            return Err(Failure(VoxviewStatus::NullArgument, "`views` is null".into()));
        }
        let frames = std::slice::from_raw_parts(views, n_views)
            .iter()
            .map(|&p| reference(p, "views[i]").map(|f| f.0.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let calib = reference(calibration, "calibration")?.to_calibration();
        let out = out_ptr(out, "out")?;
        give(
            out,
            VoxviewFrame(interleave(&frames, &calib).map_err(Failure::invalid)?),
        );
        Ok(())
    })
}

/// Re-centres `camera` on the first point along its view axis where any
/// channel reaches `threshold`. `hit` reports whether anything was found;
/// on a miss the camera is left unchanged.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn voxview_autofocus(
    volume: *const VoxviewVolume,
    settings: *const VoxviewSettings,
    threshold: f32,
    camera: *mut VoxviewCamera,
    hit: *mut bool,
) -> VoxviewStatus {
    guard(|| {
        let v = &reference(volume, "volume")?.0;
        let settings = reference(settings, "settings")?.to_settings()?;
        let cam_out = out_ptr(camera, "camera")?;
        let hit = out_ptr(hit, "hit")?;
        let cam = cam_out.to_camera()?;
        let r = autofocus(v, &cam, &settings, threshold);
        *hit = r.hit_point().is_some();
        *cam_out = VoxviewCamera::from_camera(&r.apply(&cam));
        Ok(())
    })
}

/// Pixels per axis covered by `foveal_deg` of vision on a display with the
/// given resolution and field of view (degrees).
///
/// # Safety
/// `out` must point to 2 writable values.
#[no_mangle]
pub unsafe extern "C" fn voxview_foveal_pixels(
    res_x: f64,
    res_y: f64,
    fov_x: f64,
    fov_y: f64,
    foveal_deg: f64,
    out: *mut u64,
) -> VoxviewStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(VoxviewStatus::NullArgument, "`out` is null".into()));
        }
        let spec = DisplaySpec {
            res: (res_x, res_y),
            fov: (fov_x, fov_y),
            foveal_deg,
        };
        spec.validate().map_err(Failure::invalid)?;
        let (x, y) = foveal_pixels(&spec);
        std::slice::from_raw_parts_mut(out, 2).copy_from_slice(&[x, y]);
        Ok(())
    })
}

/// # Safety
/// `frame` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn voxview_frame_width(frame: *const VoxviewFrame) -> usize {
    frame.as_ref().map_or(0, |f| f.0.width())
}

/// # Safety
/// `frame` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn voxview_frame_height(frame: *const VoxviewFrame) -> usize {
    frame.as_ref().map_or(0, |f| f.0.height())
}

/// Row-major RGBA8 pixels, `4 * width * height` bytes, top row first. Valid
/// until the frame is freed.
///
/// # Safety
/// `frame` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn voxview_frame_data(frame: *const VoxviewFrame) -> *const u8 {
    frame.as_ref().map_or(ptr::null(), |f| f.0.pixels().as_ptr())
}

/// # Safety
/// `frame` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn voxview_frame_save_png(frame: *const VoxviewFrame, path: *const c_char) -> VoxviewStatus {
    guard(|| {
        let f = reference(frame, "frame")?;
        let path = string(path, "path")?;
        f.0.save_png(&path)
            .map_err(|e| Failure(VoxviewStatus::Io, e.to_string()))
    })
}

/// # Safety
/// `frame` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn voxview_frame_free(frame: *mut VoxviewFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}
