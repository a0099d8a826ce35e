//! One-shot multi-view rendering shared by the CLI, the session service and tests.

use rayon::prelude::*;

use crate::frame::Frame;
use crate::multiview::{assemble_quilt, stereo_cameras, MultiviewError, QuiltLayout, StereoParams};
use crate::raycast::{turntable_cameras, Camera, RenderSettings, Renderer, ViewRig};
use crate::volume::Volume;

/// Where the views of a multi-view output come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViewSource {
    Turntable(ViewRig),
    Stereo(StereoParams),
}

impl ViewSource {
    pub fn n_views(&self) -> usize {
        match self {
            ViewSource::Turntable(r) => r.n_views,
            ViewSource::Stereo(_) => 2,
        }
    }

    pub fn cameras(&self, base: &Camera) -> Vec<Camera> {
        match self {
            ViewSource::Turntable(rig) => turntable_cameras(base, rig),
            ViewSource::Stereo(p) => {
                let (l, r) = stereo_cameras(base, p);
                vec![l, r]
            }
        }
    }
}

/// Renders every camera at `size`. Views are rendered one after another, each
/// parallel over tiles.
pub fn render_views(
    volume: &Volume,
    cameras: &[Camera],
    settings: &RenderSettings,
    size: (usize, usize),
) -> Vec<Frame> {
    let renderer = Renderer::new(volume, settings);
    cameras.iter().map(|c| renderer.render(c, size)).collect()
}

/// Same as [`render_views`] but distributes whole views across workers.
pub fn render_views_par(
    volume: &Volume,
    cameras: &[Camera],
    settings: &RenderSettings,
    size: (usize, usize),
) -> Vec<Frame> {
    let renderer = Renderer::new(volume, settings);
    cameras.par_iter().map(|c| renderer.render(c, size)).collect()
}

pub fn render_quilt(
    volume: &Volume,
    base: &Camera,
    source: &ViewSource,
    settings: &RenderSettings,
    layout: &QuiltLayout,
) -> Result<Frame, MultiviewError> {
    let views = render_views_par(volume, &source.cameras(base), settings, layout.tile_size());
    assemble_quilt(&views, layout)
}
