//! Multi-view volume rendering for 3D displays.
//!
//! Multi-channel intensity volumes are ray cast (MIP, emission-absorption,
//! channel layering) from turntable camera rigs and packed into the frame
//! formats 3D displays consume: side-by-side stereo, anaglyphs, multi-view
//! quilts and lenticular-interleaved native frames. Views can be streamed
//! progressively with generation-based invalidation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod frame;
pub mod math;
pub mod multiview;
pub mod pipeline;
pub mod raycast;
pub mod service;
pub mod stream;
pub mod volume;

pub use frame::{Frame, FrameError};
pub use math::{Ray, Vec3};
pub use raycast::{Camera, FocusResult, Projection, RenderMode, RenderSettings, Renderer, ViewRig};
pub use volume::{load_volume, save_volume, TransferFunction, Volume, VolumeChannel, VolumeError};
