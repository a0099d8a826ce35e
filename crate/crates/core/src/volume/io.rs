//! Sidecar meta file plus raw little-endian payloads.
//!
//! ```text
//! format = voxview-volume 1
//! dims = 64 64 32
//! spacing = 0.5 0.5 2.0
//! dtype = u16le
//! channels = nuclei, membrane
//! timepoints = 2
//! timepoint.0 = cells_t0_c0.raw, cells_t0_c1.raw
//! timepoint.1 = cells_t1_c0.raw, cells_t1_c1.raw
//! ```
//!
//! Blank lines and `#` comments are ignored. Payload paths are relative to the
//! meta file's directory. Each payload holds one channel of one timepoint,
//! x-fastest, then y, then z.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{Grid, SampleType, Volume, VolumeChannel, VolumeError};

pub const META_FORMAT: &str = "voxview-volume 1";

/// Parsed sidecar, without payloads.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeMeta {
    pub path: PathBuf,
    pub grid: Grid,
    pub dtype: SampleType,
    pub channels: Vec<String>,
    /// `files[t][c]`, resolved against the meta directory.
    pub files: Vec<Vec<PathBuf>>,
}

impl VolumeMeta {
    pub fn timepoints(&self) -> usize {
        self.files.len()
    }

    pub fn payload_bytes(&self) -> u64 {
        (self.grid.voxel_count() * self.dtype.bytes_per_sample()) as u64
    }

    /// Checks that every payload exists with the expected size, without reading it.
    pub fn check_payloads(&self) -> Result<(), VolumeError> {
        let expected = self.payload_bytes();
        for file in self.files.iter().flatten() {
            let actual = fs::metadata(file).map_err(|e| io_err(file, e))?.len();
            if actual != expected {
                return Err(VolumeError::SizeMismatch {
                    path: file.display().to_string(),
                    expected,
                    actual,
                });
            }
        }
        Ok(())
    }
}

fn io_err(path: &Path, source: std::io::Error) -> VolumeError {
    VolumeError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_meta(meta_path: impl AsRef<Path>) -> Result<VolumeMeta, VolumeError> {
    let meta_path = meta_path.as_ref();
    let text = fs::read_to_string(meta_path).map_err(|e| io_err(meta_path, e))?;
    let shown = meta_path.display().to_string();
    let err = |line: usize, message: String| VolumeError::Meta {
        path: shown.clone(),
        line,
        message,
    };

    let mut keys: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(n + 1, format!("expected `key = value`, got `{line}`")))?;
        keys.insert(k.trim().to_string(), (n + 1, v.trim().to_string()));
    }
    let get = |k: &str| -> Result<&(usize, String), VolumeError> {
        keys.get(k).ok_or_else(|| err(0, format!("missing key `{k}`")))
    };

    if let Some((line, fmt)) = keys.get("format") {
        if fmt != META_FORMAT {
            return Err(err(*line, format!("unknown format `{fmt}`")));
        }
    }

    let (line, dims_s) = get("dims")?;
    let dims: Vec<i64> = dims_s
        .split_whitespace()
        .map(|t| t.parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|e| err(*line, format!("dims: {e}")))?;
    if dims.len() != 3 {
        return Err(err(*line, "dims needs three integers".into()));
    }
    if dims.iter().any(|&d| d <= 0) {
        let clamp = |v: i64| v.max(0) as usize;
        return Err(VolumeError::InvalidDims([
            clamp(dims[0]),
            clamp(dims[1]),
            clamp(dims[2]),
        ]));
    }
    let dims = [dims[0] as usize, dims[1] as usize, dims[2] as usize];

    let (line, sp_s) = get("spacing")?;
    let spacing: Vec<f64> = sp_s
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| err(*line, format!("spacing: {e}")))?;
    if spacing.len() != 3 {
        return Err(err(*line, "spacing needs three numbers".into()));
    }
    let grid = Grid::new(dims, [spacing[0], spacing[1], spacing[2]])?;

    let (_, dtype_s) = get("dtype")?;
    let dtype = SampleType::parse(dtype_s).ok_or_else(|| VolumeError::UnsupportedDtype {
        path: shown.clone(),
        dtype: dtype_s.clone(),
    })?;

    let (line, ch_s) = get("channels")?;
    let channels: Vec<String> = ch_s
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if channels.is_empty() {
        return Err(err(*line, "at least one channel name required".into()));
    }

    let timepoints = match keys.get("timepoints") {
        Some((line, v)) => v
            .parse::<usize>()
            .ok()
            .filter(|&t| t >= 1)
            .ok_or_else(|| err(*line, format!("timepoints must be a positive integer, got `{v}`")))?,
        None => 1,
    };

    let dir = meta_path.parent().unwrap_or_else(|| Path::new("."));
    let mut files = Vec::with_capacity(timepoints);
    for t in 0..timepoints {
        let (line, list) = get(&format!("timepoint.{t}"))?;
        let row: Vec<PathBuf> = list
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| dir.join(s))
            .collect();
        if row.len() != channels.len() {
            return Err(err(
                *line,
                format!(
                    "timepoint.{t} lists {} files for {} channels",
                    row.len(),
                    channels.len()
                ),
            ));
        }
        files.push(row);
    }

    Ok(VolumeMeta {
        path: meta_path.to_path_buf(),
        grid,
        dtype,
        channels,
        files,
    })
}

fn read_payload(path: &Path, meta: &VolumeMeta) -> Result<Vec<f32>, VolumeError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let expected = meta.payload_bytes();
    if bytes.len() as u64 != expected {
        return Err(VolumeError::SizeMismatch {
            path: path.display().to_string(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    Ok(match meta.dtype {
        SampleType::U8 => bytes.iter().map(|&b| b as f32 / 255.0).collect(),
        SampleType::U16Le => bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]) as f32 / 65535.0)
            .collect(),
    })
}

pub fn load_volume(meta_path: impl AsRef<Path>) -> Result<Volume, VolumeError> {
    let meta = read_meta(meta_path)?;
    let mut frames = Vec::with_capacity(meta.files.len());
    for row in &meta.files {
        let mut frame = Vec::with_capacity(row.len());
        for file in row {
            frame.push(read_payload(file, &meta)?);
        }
        frames.push(frame);
    }
    let channels = meta
        .channels
        .iter()
        .zip(&frames[0])
        .map(|(name, s)| VolumeChannel::new(name.clone(), meta.grid, s.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    Volume::new(channels)?
        .with_timepoints(frames)
        .map(|v| v.with_sample_type(meta.dtype))
}

/// Writes the sidecar and one payload per channel per timepoint next to it,
/// quantized to the volume's sample type.
pub fn save_volume(volume: &Volume, meta_path: impl AsRef<Path>) -> Result<VolumeMeta, VolumeError> {
    let meta_path = meta_path.as_ref();
    let dir = meta_path.parent().unwrap_or_else(|| Path::new("."));
    let stem = meta_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "volume".into());
    let grid = volume.grid();
    let dtype = volume.sample_type();
    let names: Vec<String> = volume.channels().iter().map(|c| c.name.replace(',', "_")).collect();

    let mut text = format!(
        "format = {META_FORMAT}\ndims = {} {} {}\nspacing = {} {} {}\ndtype = {}\nchannels = {}\ntimepoints = {}\n",
        grid.dims[0],
        grid.dims[1],
        grid.dims[2],
        grid.spacing[0],
        grid.spacing[1],
        grid.spacing[2],
        dtype.name(),
        names.join(", "),
        volume.timepoint_count(),
    );
    let mut files = Vec::new();
    for t in 0..volume.timepoint_count() {
        let mut row = Vec::new();
        let mut rel = Vec::new();
        for c in 0..volume.n_channels() {
            let name = format!("{stem}_t{t}_c{c}.raw");
            let path = dir.join(&name);
            let samples = volume.timepoint_samples(t, c);
            let bytes: Vec<u8> = match dtype {
                SampleType::U8 => samples
                    .iter()
                    .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
                    .collect(),
                SampleType::U16Le => samples
                    .iter()
                    .flat_map(|&v| ((v.clamp(0.0, 1.0) * 65535.0).round() as u16).to_le_bytes())
                    .collect(),
            };
            fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
            rel.push(name);
            row.push(path);
        }
        text.push_str(&format!("timepoint.{t} = {}\n", rel.join(", ")));
        files.push(row);
    }
    fs::write(meta_path, text).map_err(|e| io_err(meta_path, e))?;
    Ok(VolumeMeta {
        path: meta_path.to_path_buf(),
        grid,
        dtype,
        channels: names,
        files,
    })
}
