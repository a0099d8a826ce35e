use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use voxview_ffi::*;

fn last_error() -> String {
    let p = voxview_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn synth(scene: &str) -> *mut VoxviewVolume {
    let s = CString::new(scene).unwrap();
    let mut v = ptr::null_mut();
    assert_eq!(unsafe { voxview_volume_synth(s.as_ptr(), &mut v) }, VoxviewStatus::Ok);
    v
}

fn pixels(f: *const VoxviewFrame) -> &'static [u8] {
    unsafe {
        let n = 4 * voxview_frame_width(f) * voxview_frame_height(f);
        std::slice::from_raw_parts(voxview_frame_data(f), n)
    }
}

#[test]
fn render_matches_the_library() {
    let v = synth("sphere:dims=24x24x24,radius=8");
    let mut cam = unsafe { std::mem::zeroed::<VoxviewCamera>() };
    assert_eq!(unsafe { voxview_camera_framing(v, 1.5, &mut cam) }, VoxviewStatus::Ok);
    cam.azimuth = 30.0;
    let mut settings = voxview_settings_default();
    settings.mode = VoxviewRenderMode::EmissionAbsorption;
    let mut f = ptr::null_mut();
    assert_eq!(
        unsafe { voxview_render(v, &cam, &settings, 48, 32, &mut f) },
        VoxviewStatus::Ok
    );

    let vol = voxview::volume::make_synthetic(&"sphere:dims=24x24x24,radius=8".parse().unwrap()).unwrap();
    let c = voxview::Camera {
        azimuth: 30.0,
        ..voxview::Camera::framing(&vol.grid(), 1.5)
    };
    let s = voxview::RenderSettings {
        mode: voxview::RenderMode::EmissionAbsorption,
        ..Default::default()
    };
    let want = voxview::Renderer::new(&vol, &s).render(&c, (48, 32));
    assert_eq!(pixels(f), want.pixels());

    let (mut dims, mut channels) = ([0usize; 3], 0usize);
    assert_eq!(
        unsafe { voxview_volume_info(v, dims.as_mut_ptr(), &mut channels) },
        VoxviewStatus::Ok
    );
    assert_eq!((dims, channels), ([24; 3], 1));
    unsafe {
        voxview_frame_free(f);
        voxview_volume_free(v);
    }
}

#[test]
fn quilt_and_interleave() {
    let v = synth("helix-bundle:dims=32x32x32,count=2");
    let mut cam = unsafe { std::mem::zeroed::<VoxviewCamera>() };
    unsafe { voxview_camera_framing(v, 0.75, &mut cam) };
    let settings = voxview_settings_default();
    let q = VoxviewQuilt {
        n_views: 5,
        step_deg: 2.0,
        columns: 3,
        rows: 2,
        tile_width: 12,
        tile_height: 16,
    };
    let mut quilt = ptr::null_mut();
    assert_eq!(
        unsafe { voxview_render_quilt(v, &cam, &settings, &q, &mut quilt) },
        VoxviewStatus::Ok
    );
    assert_eq!(
        unsafe { (voxview_frame_width(quilt), voxview_frame_height(quilt)) },
        (36, 32)
    );

    let views: Vec<*mut VoxviewFrame> = (0..5)
        .map(|k| {
            let mut c = cam;
            c.azimuth += k as f64 * 2.0 - 4.0;
            let mut f = ptr::null_mut();
            assert_eq!(
                unsafe { voxview_render(v, &c, &settings, 12, 16, &mut f) },
                VoxviewStatus::Ok
            );
            f
        })
        .collect();
    // view 0 sits bottom-left of the quilt
    let tile = pixels(views[0]);
    let q_px = pixels(quilt);
    for y in 0..16 {
        let row = &q_px[((16 + y) * 36) * 4..((16 + y) * 36 + 12) * 4];
        assert_eq!(row, &tile[y * 48..(y + 1) * 48]);
    }

    let calib = VoxviewCalibration {
        screen_width: 20,
        screen_height: 10,
        pitch: 3.7,
        tilt: 0.2,
        center: 0.1,
        invert_views: false,
        subpixel_order: VoxviewSubpixelOrder::Rgb,
        n_views: 5,
    };
    let ptrs: Vec<*const VoxviewFrame> = views.iter().map(|&p| p as *const _).collect();
    let mut native = ptr::null_mut();
    assert_eq!(
        unsafe { voxview_interleave(ptrs.as_ptr(), 5, &calib, &mut native) },
        VoxviewStatus::Ok
    );
    assert_eq!(unsafe { voxview_frame_width(native) }, 20);
    assert_eq!(
        unsafe { voxview_interleave(ptrs.as_ptr(), 4, &calib, &mut native) },
        VoxviewStatus::InvalidArgument
    );
    assert!(last_error().contains("views"), "{}", last_error());
    unsafe {
        for f in views {
            voxview_frame_free(f);
        }
        voxview_frame_free(native);
        voxview_frame_free(quilt);
        voxview_volume_free(v);
    }
}

#[test]
fn foveal_and_autofocus() {
    let mut px = [0u64; 2];
    assert_eq!(
        unsafe { voxview_foveal_pixels(1832.0, 1920.0, 97.0, 93.0, 2.0, px.as_mut_ptr()) },
        VoxviewStatus::Ok
    );
    assert_eq!(px, [38, 41]);
    assert_eq!(
        unsafe { voxview_foveal_pixels(1832.0, 1920.0, 0.0, 93.0, 2.0, px.as_mut_ptr()) },
        VoxviewStatus::InvalidArgument
    );

    let v = synth("sphere:dims=32x32x32,radius=6,center=16/16/20");
    let mut cam = unsafe { std::mem::zeroed::<VoxviewCamera>() };
    unsafe { voxview_camera_framing(v, 1.0, &mut cam) };
    let settings = voxview_settings_default();
    let mut hit = false;
    assert_eq!(
        unsafe { voxview_autofocus(v, &settings, 0.5, &mut cam, &mut hit) },
        VoxviewStatus::Ok
    );
    assert!(hit);
    assert!((cam.center[2] - 26.0).abs() <= 0.5, "{:?}", cam.center);

    let empty = synth("sphere:dims=8x8x8,radius=0.01,center=-50/-50/-50");
    let mut cam = unsafe { std::mem::zeroed::<VoxviewCamera>() };
    unsafe { voxview_camera_framing(empty, 1.0, &mut cam) };
    let before = cam;
    assert_eq!(
        unsafe { voxview_autofocus(empty, &settings, 0.5, &mut cam, &mut hit) },
        VoxviewStatus::Ok
    );
    assert!(!hit);
    assert_eq!(cam, before);
    unsafe {
        voxview_volume_free(v);
        voxview_volume_free(empty);
    }
}

#[test]
fn errors_are_reported() {
    let mut v = ptr::null_mut();
    assert_eq!(
        unsafe { voxview_volume_synth(ptr::null(), &mut v) },
        VoxviewStatus::NullArgument
    );
    assert!(last_error().contains("scene"));
    let bad = CString::new("teapot:dims=4x4x4").unwrap();
    assert_eq!(
        unsafe { voxview_volume_synth(bad.as_ptr(), &mut v) },
        VoxviewStatus::InvalidArgument
    );
    assert!(last_error().contains("teapot"));
    assert!(v.is_null());
    let missing = CString::new("/nonexistent/v.meta").unwrap();
    assert_eq!(
        unsafe { voxview_volume_load(missing.as_ptr(), &mut v) },
        VoxviewStatus::Io
    );

    let vol = synth("sphere:dims=8x8x8,radius=3");
    let mut cam = unsafe { std::mem::zeroed::<VoxviewCamera>() };
    unsafe { voxview_camera_framing(vol, 1.0, &mut cam) };
    let mut settings = voxview_settings_default();
    settings.sample_step = 0.0;
    let mut f = ptr::null_mut();
    assert_eq!(
        unsafe { voxview_render(vol, &cam, &settings, 8, 8, &mut f) },
        VoxviewStatus::InvalidArgument
    );
    assert!(last_error().contains("sample_step"));
    settings.sample_step = 0.5;
    assert_eq!(
        unsafe { voxview_render(vol, &cam, &settings, 0, 8, &mut f) },
        VoxviewStatus::InvalidArgument
    );
    assert!(f.is_null());
    unsafe {
        voxview_volume_free(vol);
        voxview_volume_free(ptr::null_mut());
        voxview_frame_free(ptr::null_mut());
    }
    let version = unsafe { CStr::from_ptr(voxview_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("s.meta").to_str().unwrap()).unwrap();
    let v = synth("slab:dims=8x6x4");
    assert_eq!(unsafe { voxview_volume_save(v, path.as_ptr()) }, VoxviewStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(
        unsafe { voxview_volume_load(path.as_ptr(), &mut back) },
        VoxviewStatus::Ok
    );
    let mut dims = [0usize; 3];
    let mut ch = 0;
    unsafe { voxview_volume_info(back, dims.as_mut_ptr(), &mut ch) };
    assert_eq!(dims, [8, 6, 4]);
    unsafe {
        voxview_volume_free(v);
        voxview_volume_free(back);
    }
}

fn artifact_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf()
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "voxview.h"

int main(void) {
    VoxviewVolume *v = NULL;
    if (voxview_volume_synth("sphere:dims=16x16x16,radius=5", &v) != VOXVIEW_STATUS_OK) return 1;
    VoxviewCamera cam;
    voxview_camera_framing(v, 1.0, &cam);
    VoxviewSettings s = voxview_settings_default();
    VoxviewFrame *f = NULL;
    if (voxview_render(v, &cam, &s, 8, 8, &f) != VOXVIEW_STATUS_OK) return 2;
    const uint8_t *px = voxview_frame_data(f);
    size_t center = 4 * (4 * 8 + 4);
    printf("%zux%zu %u\n", voxview_frame_width(f), voxview_frame_height(f), (unsigned)px[center]);
    if (voxview_volume_synth("nope", &v) != VOXVIEW_STATUS_INVALID_ARGUMENT) return 3;
    printf("%s\n", voxview_last_error());
    voxview_frame_free(f);
    voxview_volume_free(v);
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    // test builds only link the rlib; emit the static library for the C side
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let status = Command::new(cargo)
        .args(["build", "--quiet", "--lib", "--profile", "test", "-p", "voxview-ffi"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .status()
        .unwrap();
    assert!(status.success());
    let lib = artifact_dir().join("libvoxview_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let out = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror"])
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .expect("a C compiler on PATH");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status);
    let stdout = String::from_utf8(run.stdout).unwrap();
    let mut lines = stdout.lines();
    let first = lines.next().unwrap();
    assert!(first.starts_with("8x8 "), "{first}");
    assert!(first[4..].parse::<u32>().unwrap() > 200, "{first}");
    assert!(lines.next().unwrap().contains("nope"));
}
