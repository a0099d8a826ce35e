use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use voxview::multiview::{
    anaglyph, compensate_aspect, concat_side_by_side, interleave, pad_to_canvas, quilt_file_name, sbs_eye_size,
    stereo_cameras, LenticularCalibration, QuiltLayout, StereoMode, StereoParams,
};
use voxview::pipeline::{render_quilt, render_views_par, ViewSource};
use voxview::raycast::autofocus;
use voxview::service::{list_volumes, BackgroundServer, ServiceConfig};
use voxview::volume::{make_synthetic, SyntheticScene};
use voxview::{load_volume, save_volume, Camera, Projection, RenderMode, RenderSettings, Renderer, Vec3, ViewRig};

#[derive(Parser)]
#[command(name = "voxview", version, about = "Multi-view volume rendering for 3D displays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a volume to PNG.
    Render(Box<RenderArgs>),
    /// Run the interactive session service.
    Serve(ServeArgs),
    /// List the volumes in a directory.
    List {
        #[arg(long, default_value = ".")]
        dir: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Write a synthetic test volume.
    Synth {
        /// e.g. `sphere:dims=64x64x64,radius=20`
        #[arg(long)]
        scene: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputMode {
    Frame,
    StereoSbs,
    Anaglyph,
    Quilt,
    Native,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Mip,
    Ea,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StereoKind {
    Shift,
    Turntable,
}

fn parse_pair(s: &str, sep: char) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(sep)
        .ok_or_else(|| format!("expected A{sep}B, got `{s}`"))?;
    Ok((
        a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?,
        b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?,
    ))
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let p = parse_pair(s, 'x')?;
    if p.0 == 0 || p.1 == 0 {
        return Err("sizes must be non-zero".into());
    }
    Ok(p)
}

fn parse_window(s: &str) -> Result<[f32; 2], String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LOW:HIGH, got `{s}`"))?;
    Ok([
        a.parse().map_err(|e| format!("`{a}`: {e}"))?,
        b.parse().map_err(|e| format!("`{b}`: {e}"))?,
    ])
}

fn parse_center(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| format!("expected X,Y,Z, got `{s}`"))
}

#[derive(Args, Clone)]
struct CameraArgs {
    #[arg(long, allow_negative_numbers = true)]
    azimuth: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    elevation: Option<f64>,
    /// Micrometers from the rotation center to the eye.
    #[arg(long)]
    distance: Option<f64>,
    /// Rotation center in micrometers, `X,Y,Z`.
    #[arg(long, value_parser = parse_center, allow_hyphen_values = true)]
    center: Option<[f64; 3]>,
    /// Perspective projection with this vertical field of view in degrees.
    #[arg(long, conflicts_with = "view_height")]
    perspective: Option<f64>,
    /// Orthographic window height in micrometers.
    #[arg(long)]
    view_height: Option<f64>,
}

impl CameraArgs {
    fn camera(&self, base: Camera) -> Camera {
        let mut c = base;
        c.azimuth = self.azimuth.unwrap_or(c.azimuth);
        c.elevation = self.elevation.unwrap_or(c.elevation);
        c.distance = self.distance.unwrap_or(c.distance);
        if let Some(p) = self.center {
            c.rotation_center = Vec3::from_array(p);
        }
        if let Some(vfov) = self.perspective {
            c.projection = Projection::Perspective { vfov };
        }
        if let Some(view_height) = self.view_height {
            c.projection = Projection::Orthographic { view_height };
        }
        c
    }
}

#[derive(Args, Clone)]
struct SettingsArgs {
    #[arg(long = "render", value_enum, default_value = "mip")]
    method: Method,
    /// Render channels separately and composite them in channel order.
    #[arg(long)]
    layering: bool,
    /// Micrometers between ray samples.
    #[arg(long, default_value_t = 0.5)]
    sample_step: f64,
    /// Per-channel intensity window `LOW:HIGH`, repeatable.
    #[arg(long = "window", value_parser = parse_window)]
    windows: Vec<[f32; 2]>,
    /// Per-channel gamma, repeatable.
    #[arg(long = "gamma")]
    gammas: Vec<f32>,
}

impl SettingsArgs {
    fn settings(&self, n_channels: usize) -> RenderSettings {
        RenderSettings {
            mode: match self.method {
                Method::Mip => RenderMode::Mip,
                Method::Ea => RenderMode::EmissionAbsorption,
            },
            layering: self.layering,
            sample_step: self.sample_step,
            ..Default::default()
        }
        .with_transfer_overrides(n_channels, &self.windows, &self.gammas)
    }
}

#[derive(Args)]
struct RenderArgs {
    /// Volume sidecar (`.meta`).
    #[arg(long)]
    volume: PathBuf,
    #[arg(long, value_enum)]
    mode: OutputMode,
    #[arg(long)]
    out: PathBuf,
    /// Output size; for quilts the canvas size.
    #[arg(long, value_parser = parse_size, default_value = "512x512")]
    size: (usize, usize),
    #[arg(long, default_value_t = 45)]
    views: usize,
    /// Degrees between neighbouring views.
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    /// Quilt grid `COLUMNSxROWS`.
    #[arg(long, value_parser = parse_size)]
    layout: Option<(usize, usize)>,
    #[command(flatten)]
    camera: CameraArgs,
    #[command(flatten)]
    settings: SettingsArgs,
    #[arg(long, value_enum, default_value = "shift")]
    stereo_mode: StereoKind,
    /// Micrometers between the eyes (shift stereo).
    #[arg(long, default_value_t = 0.0)]
    eye_distance: f64,
    /// Degrees between the eyes (turntable stereo).
    #[arg(long, default_value_t = 0.0)]
    eye_angle: f64,
    /// Keep the full frame aspect in each side-by-side eye.
    #[arg(long)]
    compensate_aspect: bool,
    /// Lenticular calibration file, required for `native`.
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    timepoint: usize,
    /// Re-center on the first point along the view axis reaching this intensity.
    #[arg(long)]
    autofocus: Option<f32>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8765")]
    listen: std::net::SocketAddr,
    #[arg(long, default_value = ".")]
    dir: PathBuf,
    #[arg(long, default_value_t = 4)]
    max_sessions: usize,
    #[arg(long)]
    threads: Option<usize>,
    /// Directory of static files served next to the WebSocket endpoint.
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 45)]
    views: usize,
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    #[arg(long, value_parser = parse_size, default_value = "8x6")]
    layout: (usize, usize),
    /// Pixel size of each view tile.
    #[arg(long, value_parser = parse_size, default_value = "384x512")]
    tile: (usize, usize),
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn default_grid(views: usize) -> (usize, usize) {
    if views == 45 {
        return (8, 6);
    }
    let c = (views as f64).sqrt().ceil() as usize;
    (c, views.div_ceil(c))
}

fn stem_of(out: &Path) -> String {
    out.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into())
}

fn render(a: RenderArgs) -> Result<PathBuf, Failure> {
    if a.mode == OutputMode::Native && a.calibration.is_none() {
        return Err(Failure::Usage("--mode native requires --calibration".into()));
    }
    if let Some(t) = a.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let rig = ViewRig::new(a.views, a.step).map_err(Failure::Usage)?;
    let stereo = StereoParams {
        mode: match a.stereo_mode {
            StereoKind::Shift => StereoMode::Shift,
            StereoKind::Turntable => StereoMode::Turntable,
        },
        eye_distance: a.eye_distance,
        eye_angle: a.eye_angle,
    };
    stereo.validate().map_err(Failure::Usage)?;
    let calibration = a.calibration.as_ref().map(LenticularCalibration::load).transpose()?;
    let volume = load_volume(&a.volume)?.at_timepoint(a.timepoint)?;
    let settings = a.settings.settings(volume.n_channels());
    settings.validate().map_err(Failure::Usage)?;

    let (w, h) = a.size;
    let (columns, rows) = a.layout.unwrap_or_else(|| default_grid(a.views));
    let layout = QuiltLayout::fit(a.size, columns, rows, a.views)?;
    let aspect = match a.mode {
        OutputMode::Quilt => layout.tile_aspect(),
        OutputMode::Native => {
            let c = calibration.as_ref().expect("checked above");
            c.screen_width as f64 / c.screen_height as f64
        }
        _ => w as f64 / h as f64,
    };
    let mut camera = a.camera.camera(Camera::framing(&volume.grid(), aspect));
    camera.validate().map_err(Failure::Usage)?;
    if let Some(threshold) = a.autofocus {
        let focus = autofocus(&volume, &camera, &settings, threshold);
        match focus.hit_point() {
            Some(p) => eprintln!("autofocus: rotation center moved to {:.3},{:.3},{:.3}", p.x, p.y, p.z),
            None => eprintln!("autofocus: no sample reaches {threshold}"),
        }
        camera = focus.apply(&camera);
    }

    let renderer = Renderer::new(&volume, &settings);
    let (path, frame) = match a.mode {
        OutputMode::Frame => (a.out.clone(), renderer.render(&camera, a.size)),
        OutputMode::StereoSbs => {
            if w % 2 != 0 {
                return Err(Failure::Usage("stereo-sbs needs an even width".into()));
            }
            let eye = compensate_aspect(&camera, a.size, a.compensate_aspect);
            let (l, r) = stereo_cameras(&eye, &stereo);
            let size = sbs_eye_size(a.size);
            let sbs = concat_side_by_side(&renderer.render(&l, size), &renderer.render(&r, size))?;
            (a.out.clone(), sbs)
        }
        OutputMode::Anaglyph => {
            let (l, r) = stereo_cameras(&camera, &stereo);
            (
                a.out.clone(),
                anaglyph(&renderer.render(&l, a.size), &renderer.render(&r, a.size))?,
            )
        }
        OutputMode::Quilt => {
            let q = render_quilt(&volume, &camera, &ViewSource::Turntable(rig), &settings, &layout)?;
            let name = quilt_file_name(&stem_of(&a.out), &layout, layout.tile_aspect());
            (a.out.with_file_name(name), pad_to_canvas(&q, a.size)?)
        }
        OutputMode::Native => {
            let calib = calibration.expect("checked above");
            let cams = ViewSource::Turntable(rig).cameras(&camera);
            let views = render_views_par(&volume, &cams, &settings, layout.tile_size());
            (a.out.clone(), interleave(&views, &calib)?)
        }
    };
    frame.save_png(&path)?;
    Ok(path)
}

fn serve(a: ServeArgs) -> Result<(), Failure> {
    let rig = ViewRig::new(a.views, a.step).map_err(Failure::Usage)?;
    let layout = QuiltLayout::new(a.layout.0, a.layout.1, a.tile.0, a.tile.1, a.views)?;
    let mut config = ServiceConfig {
        listen: a.listen,
        volume_dir: a.dir,
        rig,
        layout,
        max_sessions: a.max_sessions,
        static_dir: a.static_dir,
        ..Default::default()
    };
    if let Some(t) = a.threads {
        config.threads = t;
    }
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let server = BackgroundServer::start(config)?;
    eprintln!("listening on {}", server.ws_url());
    loop {
        std::thread::park();
    }
}

fn list(dir: &Path, json: bool) -> Result<(), Failure> {
    let listing = list_volumes(dir)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&listing)?);
        return Ok(());
    }
    for v in &listing.volumes {
        let [x, y, z] = v.dims;
        println!(
            "{}\t{x}x{y}x{z}\t{}\t{} timepoint(s)\t{}",
            v.name,
            v.dtype,
            v.timepoints,
            v.channels.join(",")
        );
    }
    for w in &listing.warnings {
        eprintln!("warning: {}: {}", w.name, w.message);
    }
    Ok(())
}

fn synth(scene: &str, out: &Path) -> Result<(), Failure> {
    let scene: SyntheticScene = scene
        .parse()
        .map_err(|e: voxview::VolumeError| Failure::Usage(e.to_string()))?;
    let v = make_synthetic(&scene)?;
    save_volume(&v, out)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Render(a) => render(*a).map(|p| println!("{}", p.display())),
        Command::Serve(a) => serve(a),
        Command::List { dir, json } => list(&dir, json),
        Command::Synth { scene, out } => synth(&scene, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::FAILURE
        }
    }
}
