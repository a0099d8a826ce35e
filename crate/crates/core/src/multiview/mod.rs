//! Display-ready outputs: stereo pairs, anaglyphs, quilts and lenticular
//! interleaving, plus display resolution arithmetic.

mod display;
mod lenticular;
mod quilt;
mod stereo;

pub use display::{foveal_pixels, DisplaySpec, FOVEAL_DEG};
pub use lenticular::{interleave, view_index_for_subpixel, LenticularCalibration, SubpixelOrder};
pub use quilt::{
    assemble_quilt, extract_tile, extract_tiles, format_aspect, pad_to_canvas, parse_quilt_file_name, quilt_file_name,
    write_tile, QuiltLayout,
};
pub use stereo::{
    anaglyph, compensate_aspect, concat_side_by_side, luminance, pack_side_by_side, sbs_eye_size, stereo_cameras,
    StereoMode, StereoParams,
};

use crate::frame::FrameError;

#[derive(Debug, thiserror::Error)]
pub enum MultiviewError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("side-by-side packing needs an even width, got {0}")]
    OddWidth(usize),
    #[error("expected {expected} views, got {actual}")]
    ViewCount { expected: usize, actual: usize },
    #[error("view tile is {actual:?}, layout expects {expected:?}")]
    TileSize {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("view index {0} out of range for {1} views")]
    ViewIndex(usize, usize),
    #[error("invalid quilt layout: {0}")]
    Layout(String),
    #[error("invalid calibration: {0}")]
    Calibration(String),
    #[error("subpixel ({x}, {y}, {c}) is outside the screen")]
    SubpixelOutOfRange { x: usize, y: usize, c: usize },
}
