use std::collections::HashMap;
use std::sync::Arc;

use super::worker::{GenerationToken, ViewJob};
use super::{SessionError, SessionId, ViewUpdate};
use crate::frame::Frame;
use crate::multiview::{extract_tiles, interleave, write_tile, LenticularCalibration, QuiltLayout};
use crate::pipeline::ViewSource;
use crate::raycast::{Camera, RenderSettings};
use crate::volume::Volume;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViewStatus {
    Pending,
    Done(u64),
}

/// Progressive rendering state for one viewer.
#[derive(Debug)]
pub struct RenderSession {
    id: SessionId,
    volume: Arc<Volume>,
    /// `volume` switched to `timepoint`.
    active: Arc<Volume>,
    timepoint: usize,
    camera: Camera,
    source: ViewSource,
    settings: Arc<RenderSettings>,
    layout: QuiltLayout,
    calibration: Option<LenticularCalibration>,
    token: GenerationToken,
    status: Vec<ViewStatus>,
    /// Generation each quilt tile was last written under.
    tile_generation: Vec<Option<u64>>,
    quilt: Frame,
    native: Option<Frame>,
}

fn black(size: (usize, usize)) -> Frame {
    Frame::filled(size.0, size.1, [0, 0, 0, 255])
}

impl RenderSession {
    pub fn new(
        id: SessionId,
        volume: Arc<Volume>,
        camera: Camera,
        source: ViewSource,
        settings: RenderSettings,
        layout: QuiltLayout,
    ) -> Result<Self, SessionError> {
        camera.validate().map_err(SessionError::Invalid)?;
        settings.validate().map_err(SessionError::Invalid)?;
        validate_source(&source)?;
        layout.validate()?;
        if layout.n_views != source.n_views() {
            return Err(SessionError::Invalid(format!(
                "layout holds {} views, rig produces {}",
                layout.n_views,
                source.n_views()
            )));
        }
        let n = layout.n_views;
        Ok(RenderSession {
            id,
            active: Arc::new(volume.at_timepoint(0)?),
            volume,
            timepoint: 0,
            camera,
            source,
            settings: Arc::new(settings),
            quilt: black(layout.size()),
            layout,
            calibration: None,
            token: GenerationToken::new(0),
            status: vec![ViewStatus::Pending; n],
            tile_generation: vec![None; n],
            native: None,
        })
    }

    pub fn id(&self) -> SessionId {
        self.id
    }

    pub fn generation(&self) -> u64 {
        self.token.current()
    }

    pub fn token(&self) -> GenerationToken {
        self.token.clone()
    }

    pub fn camera(&self) -> &Camera {
        &self.camera
    }

    pub fn source(&self) -> &ViewSource {
        &self.source
    }

    pub fn settings(&self) -> &RenderSettings {
        &self.settings
    }

    pub fn layout(&self) -> &QuiltLayout {
        &self.layout
    }

    pub fn calibration(&self) -> Option<&LenticularCalibration> {
        self.calibration.as_ref()
    }

    pub fn volume(&self) -> &Arc<Volume> {
        &self.volume
    }

    /// The volume at the current timepoint.
    pub fn active_volume(&self) -> &Arc<Volume> {
        &self.active
    }

    pub fn current_timepoint(&self) -> usize {
        self.timepoint
    }

    pub fn view_status(&self) -> &[ViewStatus] {
        &self.status
    }

    pub fn tile_generations(&self) -> &[Option<u64>] {
        &self.tile_generation
    }

    pub fn quilt(&self) -> &Frame {
        &self.quilt
    }

    /// Interleaved native frame; present once a calibration is set and at
    /// least one view has been accepted.
    pub fn native(&self) -> Option<&Frame> {
        self.native.as_ref()
    }

    pub fn n_views(&self) -> usize {
        self.layout.n_views
    }

    /// Number of views done under the current generation.
    pub fn current_count(&self) -> usize {
        let g = self.generation();
        self.status.iter().filter(|s| **s == ViewStatus::Done(g)).count()
    }

    pub fn is_complete(&self) -> bool {
        self.current_count() == self.n_views()
    }

    fn invalidate(&mut self) -> u64 {
        let g = self.token.bump();
        self.status.iter_mut().for_each(|s| *s = ViewStatus::Pending);
        g
    }

    /// Always bumps the generation, even for an identical camera.
    pub fn update_camera(&mut self, camera: Camera) -> Result<u64, SessionError> {
        camera.validate().map_err(SessionError::Invalid)?;
        self.camera = camera;
        Ok(self.invalidate())
    }

    pub fn update_settings(&mut self, settings: RenderSettings) -> Result<u64, SessionError> {
        settings.validate().map_err(SessionError::Invalid)?;
        self.settings = Arc::new(settings);
        Ok(self.invalidate())
    }

    /// Switches the view source. A source with a different view count
    /// re-plans the quilt grid, keeping the tile size when the old grid can
    /// hold the new count, and clears the quilt.
    pub fn update_source(&mut self, source: ViewSource) -> Result<u64, SessionError> {
        validate_source(&source)?;
        let n = source.n_views();
        if n != self.layout.n_views {
            if let Some(c) = &self.calibration {
                if c.n_views != n {
                    return Err(SessionError::Invalid(format!(
                        "calibration expects {} views, rig produces {n}",
                        c.n_views
                    )));
                }
            }
            let layout = self.layout.with_view_count(n)?;
            self.set_layout(layout);
        }
        self.source = source;
        Ok(self.invalidate())
    }

    fn set_layout(&mut self, layout: QuiltLayout) {
        self.layout = layout;
        self.quilt = black(layout.size());
        self.status = vec![ViewStatus::Pending; layout.n_views];
        self.tile_generation = vec![None; layout.n_views];
        self.native = None;
    }

    pub fn set_calibration(&mut self, calibration: Option<LenticularCalibration>) -> Result<(), SessionError> {
        if let Some(c) = &calibration {
            c.validate()?;
            if c.n_views != self.n_views() {
                return Err(SessionError::Invalid(format!(
                    "calibration expects {} views, session renders {}",
                    c.n_views,
                    self.n_views()
                )));
            }
        }
        self.calibration = calibration;
        self.native = None;
        if self.tile_generation.iter().any(|g| g.is_some()) {
            self.reinterleave()?;
        }
        Ok(())
    }

    /// Out-of-range `t` leaves the session untouched.
    pub fn advance_timepoint(&mut self, t: usize) -> Result<u64, SessionError> {
        let active = self.volume.at_timepoint(t)?;
        self.active = Arc::new(active);
        self.timepoint = t;
        Ok(self.invalidate())
    }

    pub fn view_cameras(&self) -> Vec<Camera> {
        self.source.cameras(&self.camera)
    }

    /// Render jobs for every pending view, in dispersion order.
    pub fn pending_jobs(&self) -> Vec<ViewJob> {
        let cameras = self.view_cameras();
        let g = self.generation();
        super::view_order(self.n_views())
            .into_iter()
            .filter(|&v| self.status[v] == ViewStatus::Pending)
            .map(|v| ViewJob {
                session: self.id,
                view: v,
                generation: g,
                camera: cameras[v],
                size: self.layout.tile_size(),
                volume: self.active.clone(),
                settings: self.settings.clone(),
                token: self.token.clone(),
            })
            .collect()
    }

    /// Writes `update` into the quilt if it was rendered under the current
    /// generation; stale updates are dropped and reported as `false`.
    pub fn complete_view(&mut self, update: &ViewUpdate) -> Result<bool, SessionError> {
        if update.session != self.id {
            return Err(SessionError::WrongSession {
                expected: self.id,
                actual: update.session,
            });
        }
        if update.frame.size() != self.layout.tile_size() {
            return Err(SessionError::TileSize {
                expected: self.layout.tile_size(),
                actual: update.frame.size(),
            });
        }
        if update.view >= self.n_views() {
            return Err(SessionError::ViewIndex {
                view: update.view,
                n_views: self.n_views(),
            });
        }
        if update.generation != self.generation() {
            return Ok(false);
        }
        write_tile(&mut self.quilt, &self.layout, update.view, &update.frame)?;
        self.status[update.view] = ViewStatus::Done(update.generation);
        self.tile_generation[update.view] = Some(update.generation);
        if self.calibration.is_some() {
            self.reinterleave()?;
        }
        Ok(true)
    }

    fn reinterleave(&mut self) -> Result<(), SessionError> {
        if let Some(c) = &self.calibration {
            let views = extract_tiles(&self.quilt, &self.layout)?;
            self.native = Some(interleave(&views, c)?);
        }
        Ok(())
    }
}

fn validate_source(source: &ViewSource) -> Result<(), SessionError> {
    match source {
        ViewSource::Turntable(r) => r.validate(),
        ViewSource::Stereo(p) => p.validate(),
    }
    .map_err(SessionError::Invalid)
}

/// Sessions by id; the single owner that serializes their mutations.
#[derive(Debug, Default)]
pub struct SessionManager {
    sessions: HashMap<SessionId, RenderSession>,
    next_id: SessionId,
}

impl SessionManager {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create(
        &mut self,
        volume: Arc<Volume>,
        camera: Camera,
        source: ViewSource,
        settings: RenderSettings,
        layout: QuiltLayout,
    ) -> Result<SessionId, SessionError> {
        let id = self.next_id + 1;
        let s = RenderSession::new(id, volume, camera, source, settings, layout)?;
        self.next_id = id;
        self.sessions.insert(id, s);
        Ok(id)
    }

    pub fn get(&self, id: SessionId) -> Result<&RenderSession, SessionError> {
        self.sessions.get(&id).ok_or(SessionError::UnknownSession(id))
    }

    pub fn get_mut(&mut self, id: SessionId) -> Result<&mut RenderSession, SessionError> {
        self.sessions.get_mut(&id).ok_or(SessionError::UnknownSession(id))
    }

    pub fn remove(&mut self, id: SessionId) -> Option<RenderSession> {
        self.sessions.remove(&id)
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn update_camera(&mut self, id: SessionId, camera: Camera) -> Result<u64, SessionError> {
        self.get_mut(id)?.update_camera(camera)
    }

    pub fn advance_timepoint(&mut self, id: SessionId, t: usize) -> Result<u64, SessionError> {
        self.get_mut(id)?.advance_timepoint(t)
    }

    /// Routes an update to its session.
    pub fn complete_view(&mut self, update: &ViewUpdate) -> Result<bool, SessionError> {
        self.get_mut(update.session)?.complete_view(update)
    }
}
