//! Cameras, ray-cast compositing and raycast auto-focus.

mod autofocus;
mod camera;
mod render;
mod settings;

pub use autofocus::{autofocus, autofocus_with, FocusResult};
pub use camera::{camera_ray, turntable_cameras, Camera, CameraBasis, Projection, ViewRig, MAX_VIEWS};
pub use render::{
    correct_opacity, over, quantize, render, render_emission_absorption, render_layered, render_mip, Cancelled,
    Renderer, EARLY_TERMINATION_ALPHA, TILE_SIZE,
};
pub use settings::{RenderMode, RenderSettings, Shading};
