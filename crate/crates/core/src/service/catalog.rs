use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::volume::{read_meta, VolumeMeta};

/// Summary of a loadable volume, as advertised to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeInfo {
    /// Sidecar file name inside the search directory.
    pub name: String,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub dtype: String,
    pub channels: Vec<String>,
    pub timepoints: usize,
}

impl VolumeInfo {
    pub fn from_meta(name: impl Into<String>, meta: &VolumeMeta) -> Self {
        VolumeInfo {
            name: name.into(),
            dims: meta.grid.dims,
            spacing: meta.grid.spacing,
            dtype: meta.dtype.name().to_string(),
            channels: meta.channels.clone(),
            timepoints: meta.timepoints(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeWarning {
    pub name: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VolumeListing {
    pub volumes: Vec<VolumeInfo>,
    pub warnings: Vec<VolumeWarning>,
}

/// Every `*.meta` sidecar directly inside `dir`, sorted by name. Sidecars
/// that fail to parse or whose payloads are missing or mis-sized become
/// warnings.
pub fn list_volumes(dir: impl AsRef<Path>) -> std::io::Result<VolumeListing> {
    let mut names: Vec<String> = fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.ends_with(".meta"))
        .collect();
    names.sort();
    let mut out = VolumeListing::default();
    for name in names {
        let path = dir.as_ref().join(&name);
        match read_meta(&path).and_then(|m| m.check_payloads().map(|_| m)) {
            Ok(meta) => out.volumes.push(VolumeInfo::from_meta(name, &meta)),
            Err(e) => out.warnings.push(VolumeWarning {
                name,
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}
