//! End-to-end acceptance checks. Each check prints one PASS/FAIL line with
//! its tolerance and runtime budget; the process exits non-zero on any FAIL.

use std::path::Path;
use std::process::{Command, ExitCode, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use voxview::multiview::{
    assemble_quilt, compensate_aspect, concat_side_by_side, extract_tiles, foveal_pixels, interleave, sbs_eye_size,
    stereo_cameras, DisplaySpec, LenticularCalibration, QuiltLayout, StereoParams, SubpixelOrder,
};
use voxview::pipeline::{render_quilt, ViewSource};
use voxview::raycast::{autofocus, turntable_cameras, FocusResult};
use voxview::service::{BackgroundServer, Client, ClientMessage, QuiltAssembler, ServerMessage, ServiceConfig};
use voxview::stream::{drive_to_completion, RenderSession, ViewStatus};
use voxview::volume::{make_synthetic, Grid, SyntheticScene};
use voxview::{
    save_volume, Camera, Frame, Projection, RenderMode, RenderSettings, Renderer, TransferFunction, ViewRig, Volume,
    VolumeChannel,
};

type Check = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn foveal() -> Check {
    let go = foveal_pixels(&DisplaySpec::new((1832.0, 1920.0), (97.0, 93.0)));
    ensure(go == (38, 41), || format!("headset A gave {go:?}, want (38, 41)"))?;
    let hl = foveal_pixels(&DisplaySpec::new((1440.0, 936.0), (43.0, 29.0)));
    ensure(hl.0.abs_diff(67) <= 2 && hl.1.abs_diff(66) <= 2, || {
        format!("headset B gave {hl:?}")
    })?;
    Ok(format!("{go:?} exact; {hl:?} vs (67, 66) within ±2"))
}

fn turntable() -> Check {
    let v = make_synthetic(&"helix-bundle:dims=64x64x64".parse().unwrap()).unwrap();
    let rig = ViewRig::default();
    let base = Camera::framing(&v.grid(), 1.0);
    let cams = turntable_cameras(&base, &rig);
    let span = cams[44].azimuth - cams[0].azimuth;
    ensure(cams.len() == 45 && (span - 44.0).abs() < 1e-9, || {
        format!("span {span}")
    })?;
    let settings = RenderSettings::default();
    let r = Renderer::new(&v, &settings);
    let frames: Vec<Frame> = cams.iter().map(|c| r.render(c, (256, 256))).collect();
    ensure(frames[22] == r.render(&base, (256, 256)), || {
        "middle view differs from base".into()
    })?;
    Ok(format!("45 views span {span}°, middle view bit-identical"))
}

fn mip_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let v = Volume::from_fn(Grid::new([16; 3], [1.0; 3]).unwrap(), |_, _, _| rng.gen());
    let cam = Camera {
        projection: Projection::Orthographic { view_height: 16.0 },
        ..Camera::framing(&v.grid(), 1.0)
    };
    let settings = RenderSettings::default();
    let img = Renderer::new(&v, &settings).max_intensity_image(&cam, (16, 16));
    let mut worst = 0f32;
    for y in 0..16 {
        for x in 0..16 {
            let col = (0..16).map(|k| v.channel(0).voxel(x, 15 - y, k)).fold(0f32, f32::max);
            worst = worst.max((img[0][y * 16 + x] - col).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("max error {worst:e}"))?;
    Ok(format!("256 pixels, max error {worst:e} <= 1e-6"))
}

fn ea_closed_form() -> Check {
    let pairs = [
        (0.01, 8, 0.5),
        (0.02, 16, 0.5),
        (0.05, 8, 0.5),
        (0.05, 24, 0.37),
        (0.1, 4, 0.5),
        (0.1, 12, 0.3),
        (0.2, 6, 0.5),
        (0.2, 10, 0.7),
        (0.3, 5, 0.25),
        (0.5, 3, 0.5),
    ];
    let mut worst = 0f64;
    for (a, depth, step) in pairs {
        let grid = Grid::new([4, 4, depth], [1.0; 3]).unwrap();
        let v = Volume::from_fn(grid, |_, _, _| 1.0);
        let settings = RenderSettings {
            mode: RenderMode::EmissionAbsorption,
            sample_step: step,
            transfer: vec![TransferFunction {
                alpha_scale: a,
                ..Default::default()
            }],
            ..Default::default()
        };
        let r = Renderer::new(&v, &settings);
        let cam = Camera::framing(&grid, 1.0);
        let got = r.shade_ray(&cam.center_ray())[3] as f64;
        let want = 1.0 - (1.0 - a as f64).powf(depth as f64 / r.reference_step());
        let rel = (got - want).abs() / want;
        worst = worst.max(rel);
        ensure(rel <= 0.02, || format!("a={a} L={depth}: {got} vs {want}"))?;
    }
    Ok(format!("10 (a, L) pairs, worst relative error {:.2e} <= 2%", worst))
}

fn lenticular() -> Check {
    let calib = LenticularCalibration {
        screen_width: 64,
        screen_height: 64,
        pitch: 7.31,
        tilt: -0.23,
        center: 0.61,
        invert_views: true,
        subpixel_order: SubpixelOrder::Bgr,
        n_views: 45,
    };
    let color = |k: usize| [(k * 5) as u8, 255 - (k * 5) as u8, (k * 97 % 256) as u8, 255];
    let views: Vec<Frame> = (0..45).map(|k| Frame::filled(8, 8, color(k))).collect();
    let out = interleave(&views, &calib).map_err(|e| e.to_string())?;
    let mut mismatches = 0;
    for y in 0..64 {
        for x in 0..64 {
            for c in 0..3 {
                let u = (x as f64 + 0.5 + ((2 - c) as f64 - 1.0) / 3.0) / 64.0;
                let v = (y as f64 + 0.5) / 64.0;
                let z = (u + v * calib.tilt) * calib.pitch - calib.center;
                let f = 1.0 - (z - z.floor());
                let k = ((f * 45.0).floor() as usize).min(44);
                if out.pixel(x, y)[c] != color(k)[c] {
                    mismatches += 1;
                }
            }
        }
    }
    ensure(mismatches == 0, || format!("{mismatches} mismatched subpixels"))?;
    Ok("64x64x3 subpixels, 0 mismatches".into())
}

fn quilt_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let views: Vec<Frame> = (0..45)
        .map(|_| Frame::from_rgba(128, 96, (0..128 * 96 * 4).map(|_| rng.gen()).collect()).unwrap())
        .collect();
    let layout = QuiltLayout::new(8, 6, 128, 96, 45).unwrap();
    let quilt = assemble_quilt(&views, &layout).map_err(|e| e.to_string())?;
    let back = extract_tiles(&quilt, &layout).map_err(|e| e.to_string())?;
    ensure(back == views, || "extracted tiles differ".into())?;
    Ok("45 random 128x96 views, bit-exact".into())
}

fn convergence() -> Check {
    let v = Arc::new(make_synthetic(&SyntheticScene::sphere([16; 3], [8.0, 9.0, 7.0], 5.0).with_falloff(2.0)).unwrap());
    let layout = QuiltLayout::new(8, 6, 16, 12, 45).unwrap();
    let base = Camera::framing(&v.grid(), layout.tile_aspect());
    let source = ViewSource::Turntable(ViewRig::default());
    let settings = RenderSettings {
        mode: RenderMode::EmissionAbsorption,
        ..Default::default()
    };
    let session = |cam: Camera| RenderSession::new(1, v.clone(), cam, source, settings.clone(), layout).unwrap();
    let oneshot = render_quilt(&v, &base, &source, &settings, &layout).map_err(|e| e.to_string())?;

    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let updates: Vec<_> = session(base)
        .pending_jobs()
        .iter()
        .map(|j| j.render().unwrap())
        .collect();
    for p in 0..20 {
        let mut s = session(base);
        let mut order = updates.clone();
        order.shuffle(&mut rng);
        for u in &order {
            s.complete_view(u).map_err(|e| e.to_string())?;
        }
        ensure(s.quilt() == &oneshot, || format!("permutation {p} diverged"))?;
    }

    let mut stale_seen = 0;
    for trial in 0..100 {
        let mut s = session(base);
        let mut inflight = Vec::new();
        for _ in 0..40 {
            match rng.gen_range(0..4) {
                0 => {
                    let mut cam = *s.camera();
                    cam.azimuth = rng.gen_range(-30.0..30.0);
                    s.update_camera(cam).map_err(|e| e.to_string())?;
                }
                1 => inflight.extend(s.pending_jobs().into_iter().take(3).map(|j| j.render_uncancellable())),
                _ if !inflight.is_empty() => {
                    let u = inflight.swap_remove(rng.gen_range(0..inflight.len()));
                    let stale = u.generation != s.generation();
                    stale_seen += stale as usize;
                    let accepted = s.complete_view(&u).map_err(|e| e.to_string())?;
                    ensure(accepted != stale, || {
                        format!("trial {trial}: stale={stale} accepted={accepted}")
                    })?;
                }
                _ => {}
            }
            let g = s.generation();
            ensure(
                s.view_status()
                    .iter()
                    .all(|st| !matches!(st, ViewStatus::Done(d) if *d != g)),
                || format!("trial {trial}: tile marked done with an old generation"),
            )?;
        }
        drive_to_completion(&mut s).map_err(|e| e.to_string())?;
        let want = render_quilt(&v, s.camera(), &source, &settings, &layout).map_err(|e| e.to_string())?;
        ensure(s.quilt() == &want, || format!("trial {trial}: final quilt differs"))?;
    }
    ensure(stale_seen > 0, || "no stale frames were exercised".into())?;
    Ok(format!(
        "20 permutations bit-identical; 100 interleavings, {stale_seen} stale frames, 0 accepted"
    ))
}

fn silhouette(f: &Frame) -> Option<(usize, usize)> {
    let (mut x0, mut x1, mut y0, mut y1) = (usize::MAX, 0, usize::MAX, 0);
    for y in 0..f.height() {
        for x in 0..f.width() {
            if f.pixel(x, y)[0] > 127 {
                (x0, x1, y0, y1) = (x0.min(x), x1.max(x), y0.min(y), y1.max(y));
            }
        }
    }
    (x0 <= x1).then(|| (x1 - x0 + 1, y1 - y0 + 1))
}

fn stereo() -> Check {
    let v = make_synthetic(&SyntheticScene::sphere([32; 3], [16.0; 3], 9.0)).unwrap();
    let settings = RenderSettings::default();
    let r = Renderer::new(&v, &settings);
    let frame = (128, 64);
    let eye = sbs_eye_size(frame);
    let base = compensate_aspect(&Camera::framing(&v.grid(), 2.0), frame, true);

    let (l, rt) = stereo_cameras(&base, &StereoParams::default());
    let sbs = concat_side_by_side(&r.render(&l, eye), &r.render(&rt, eye)).map_err(|e| e.to_string())?;
    let halves = (sbs.crop(0, 0, 64, 64).unwrap(), sbs.crop(64, 0, 64, 64).unwrap());
    ensure(halves.0 == halves.1, || "halves differ at zero separation".into())?;

    let left = &halves.0;
    let mut stretched = Frame::new(128, 64);
    for y in 0..64 {
        for x in 0..128 {
            stretched.set_pixel(x, y, left.pixel(x / 2, y));
        }
    }
    let (w, h) = silhouette(&stretched).ok_or("empty silhouette")?;
    ensure(w.abs_diff(h) <= 1, || format!("stretched silhouette {w}x{h}"))?;
    Ok(format!(
        "zero separation halves identical; stretched silhouette {w}x{h} within ±1 px"
    ))
}

fn autofocus_check() -> Check {
    let settings = RenderSettings::default();
    let threshold = 0.5;
    let (radius, falloff) = (5.0, 2.0);
    let mut worst = 0f64;
    for zc in [9.0, 12.5, 16.0, 19.5, 23.0] {
        let v =
            make_synthetic(&SyntheticScene::sphere([32; 3], [16.0, 16.0, zc], radius).with_falloff(falloff)).unwrap();
        let cam = Camera::framing(&v.grid(), 1.0);
        let got = autofocus(&v, &cam, &settings, threshold)
            .hit_distance()
            .ok_or(format!("z={zc}: no hit"))?;
        // front surface plus the falloff distance where intensity drops to the threshold
        let want = cam.position().z - (zc + radius + falloff * (1.0 - threshold as f64));
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() <= settings.sample_step, || {
            format!("z={zc}: {got} vs {want}")
        })?;
    }
    let empty = Volume::from_fn(Grid::new([32; 3], [1.0; 3]).unwrap(), |_, _, _| 0.0);
    let cam = Camera::framing(&empty.grid(), 1.0);
    let miss = autofocus(&empty, &cam, &settings, threshold);
    ensure(miss == FocusResult::NoHit && miss.apply(&cam) == cam, || {
        "empty volume did not miss cleanly".into()
    })?;
    Ok(format!(
        "5 depths, worst error {worst:.3} <= step {}; empty volume no_hit",
        settings.sample_step
    ))
}

struct ParamSet {
    name: &'static str,
    volume: &'static str,
    settings: ClientMessage,
    camera: ClientMessage,
    cli: Vec<&'static str>,
}

fn write_volumes(dir: &Path) {
    let a = make_synthetic(&SyntheticScene::sphere([24, 20, 18], [10.0, 10.0, 9.0], 6.0).with_falloff(2.0)).unwrap();
    save_volume(&a, dir.join("one.meta")).unwrap();
    let b = make_synthetic(&SyntheticScene::sphere([24, 20, 18], [15.0, 9.0, 8.0], 4.0)).unwrap();
    let grid = a.grid();
    let two = Volume::new(vec![
        VolumeChannel::new("a", grid, a.channel(0).samples().to_vec()).unwrap(),
        VolumeChannel::new("b", grid, b.channel(0).samples().to_vec()).unwrap(),
    ])
    .unwrap();
    save_volume(&two, dir.join("two.meta")).unwrap();
}

fn camera(az: f64, el: f64, distance: Option<f64>, projection: Option<Projection>) -> ClientMessage {
    ClientMessage::SetCamera {
        azimuth: Some(az),
        elevation: Some(el),
        distance,
        center: None,
        projection,
    }
}

fn equivalence() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_volumes(dir.path());
    let sets = [
        ParamSet {
            name: "mip",
            volume: "one.meta",
            settings: ClientMessage::SetSettings {
                mode: Some(RenderMode::Mip),
                layering: None,
                thresholds: None,
                gamma: None,
                sample_step: None,
            },
            camera: camera(-15.0, 5.0, None, None),
            cli: vec!["--azimuth", "-15", "--elevation", "5"],
        },
        ParamSet {
            name: "ea-perspective",
            volume: "one.meta",
            settings: ClientMessage::SetSettings {
                mode: Some(RenderMode::EmissionAbsorption),
                layering: None,
                thresholds: Some(vec![[0.1, 0.9]]),
                gamma: Some(vec![1.5]),
                sample_step: Some(0.4),
            },
            camera: camera(20.0, -10.0, Some(80.0), Some(Projection::Perspective { vfov: 35.0 })),
            cli: vec![
                "--render",
                "ea",
                "--window",
                "0.1:0.9",
                "--gamma",
                "1.5",
                "--sample-step",
                "0.4",
                "--azimuth",
                "20",
                "--elevation",
                "-10",
                "--distance",
                "80",
                "--perspective",
                "35",
            ],
        },
        ParamSet {
            name: "layered-two-channel",
            volume: "two.meta",
            settings: ClientMessage::SetSettings {
                mode: Some(RenderMode::EmissionAbsorption),
                layering: Some(true),
                thresholds: Some(vec![[0.0, 1.0], [0.2, 0.8]]),
                gamma: Some(vec![1.0, 0.7]),
                sample_step: Some(0.6),
            },
            camera: camera(35.0, 12.0, None, None),
            cli: vec![
                "--render",
                "ea",
                "--layering",
                "--window",
                "0:1",
                "--window",
                "0.2:0.8",
                "--gamma",
                "1",
                "--gamma",
                "0.7",
                "--sample-step",
                "0.6",
                "--azimuth",
                "35",
                "--elevation",
                "12",
            ],
        },
    ];
    let layout = QuiltLayout::new(3, 2, 30, 24, 6).unwrap();
    let rig = ViewRig::new(6, 2.0).unwrap();
    let server = BackgroundServer::start(ServiceConfig {
        listen: "127.0.0.1:0".parse().unwrap(),
        volume_dir: dir.path().to_path_buf(),
        rig,
        layout,
        threads: 2,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    for set in &sets {
        let err = |e: &dyn std::fmt::Display| format!("{}: {e}", set.name);
        let mut c = Client::connect(server.addr()).map_err(|e| err(&e))?;
        c.hello(set.volume, Some(layout), Some(rig)).map_err(|e| err(&e))?;
        c.send(&set.settings).map_err(|e| err(&e))?;
        c.await_state(|_| {}).map_err(|e| err(&e))?;
        c.send(&set.camera).map_err(|e| err(&e))?;
        let ServerMessage::SessionState { generation, .. } = c.await_state(|_| {}).map_err(|e| err(&e))? else {
            unreachable!()
        };
        let mut asm = QuiltAssembler::new(layout, generation);
        c.complete(&mut asm).map_err(|e| err(&e))?;
        c.close().map_err(|e| err(&e))?;

        let out = dir.path().join(format!("{}.png", set.name));
        let status = Command::new(env!("CARGO_BIN_EXE_voxview"))
            .args([
                "render", "--mode", "quilt", "--size", "90x48", "--layout", "3x2", "--views", "6", "--step", "2",
            ])
            .args(&set.cli)
            .arg("--volume")
            .arg(dir.path().join(set.volume))
            .arg("--out")
            .arg(&out)
            .stdout(Stdio::null())
            .status()
            .map_err(|e| err(&e))?;
        ensure(status.success(), || format!("{}: cli exited with {status}", set.name))?;
        let cli = Frame::load_png(dir.path().join(format!("{}_qs3x2a1.25.png", set.name))).map_err(|e| err(&e))?;
        ensure(asm.quilt() == &cli, || {
            format!("{}: streamed quilt differs from cli", set.name)
        })?;
    }
    Ok("mip, ea-perspective, layered-two-channel streamed == cli bit-exact".into())
}

fn performance() -> Check {
    let v = make_synthetic(&"helix-bundle:dims=128x128x128".parse().unwrap()).unwrap();
    let layout = QuiltLayout::new(8, 6, 512, 512, 45).unwrap();
    let base = Camera::framing(&v.grid(), 1.0);
    let source = ViewSource::Turntable(ViewRig::default());
    let settings = RenderSettings {
        mode: RenderMode::EmissionAbsorption,
        ..Default::default()
    };
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let t = Instant::now();
        let q = pool.install(|| render_quilt(&v, &base, &source, &settings, &layout));
        (q, t.elapsed())
    };
    let (eight, t8) = run(8);
    let eight = eight.map_err(|e| e.to_string())?;
    ensure(t8 <= Duration::from_secs(60), || format!("8 workers took {t8:.1?}"))?;
    let (one, t1) = run(1);
    ensure(one.map_err(|e| e.to_string())? == eight, || {
        "1 vs 8 workers differ".into()
    })?;
    Ok(format!(
        "8 workers {:.1}s <= 60s ({} cpus); 1 worker {:.1}s, bit-identical",
        t8.as_secs_f64(),
        cpus(),
        t1.as_secs_f64()
    ))
}

fn cpus() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn main() -> ExitCode {
    // libtest flags such as --nocapture are passed through; a name filter selects checks
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let checks: [Criterion; 11] = [
        ("foveal-metrics", 1, foveal),
        ("turntable-rig", 10, turntable),
        ("mip-oracle", 1, mip_oracle),
        ("ea-closed-form", 1, ea_closed_form),
        ("lenticular-partition", 1, lenticular),
        ("quilt-round-trip", 1, quilt_round_trip),
        ("progressive-convergence", 30, convergence),
        ("stereo-properties", 5, stereo),
        ("autofocus", 2, autofocus_check),
        ("service-cli-equivalence", 30, equivalence),
        ("performance-floor", 180, performance),
    ];
    let mut failed = 0;
    for (name, budget, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let result = check();
        let elapsed = t.elapsed();
        let budget = Duration::from_secs(budget);
        let verdict = match result {
            Ok(detail) if elapsed <= budget => ("PASS", detail),
            Ok(detail) => ("FAIL", format!("{detail}; over runtime budget")),
            Err(why) => ("FAIL", why),
        };
        failed += (verdict.0 == "FAIL") as usize;
        println!(
            "{} {name}: {} [{:.2}s / {}s]",
            verdict.0,
            verdict.1,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
