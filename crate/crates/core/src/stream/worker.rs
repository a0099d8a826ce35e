use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::session::RenderSession;
use super::{SessionError, SessionId, ViewUpdate};
use crate::raycast::{Camera, Cancelled, RenderSettings, Renderer};
use crate::volume::Volume;

/// Shared view of a session's generation; workers poll it to notice that
/// their job has been superseded.
#[derive(Debug, Clone)]
pub struct GenerationToken(Arc<AtomicU64>);

impl GenerationToken {
    pub fn new(g: u64) -> Self {
        GenerationToken(Arc::new(AtomicU64::new(g)))
    }

    pub fn current(&self) -> u64 {
        self.0.load(Ordering::Acquire)
    }

    pub(crate) fn bump(&self) -> u64 {
        self.0.fetch_add(1, Ordering::AcqRel) + 1
    }
}

/// Everything needed to render one view, detached from the session.
#[derive(Debug, Clone)]
pub struct ViewJob {
    pub session: SessionId,
    pub view: usize,
    pub generation: u64,
    pub camera: Camera,
    pub size: (usize, usize),
    pub volume: Arc<Volume>,
    pub settings: Arc<RenderSettings>,
    pub token: GenerationToken,
}

impl ViewJob {
    pub fn is_stale(&self) -> bool {
        self.token.current() != self.generation
    }

    /// Renders the view, giving up between tiles once the session has moved on.
    pub fn render(&self) -> Result<ViewUpdate, Cancelled> {
        if self.is_stale() {
            return Err(Cancelled);
        }
        let renderer = Renderer::new(&self.volume, &self.settings);
        let frame = renderer.render_cancellable(&self.camera, self.size, &|| self.is_stale())?;
        Ok(ViewUpdate {
            session: self.session,
            view: self.view,
            generation: self.generation,
            frame,
        })
    }

    /// Renders ignoring cancellation.
    pub fn render_uncancellable(&self) -> ViewUpdate {
        let renderer = Renderer::new(&self.volume, &self.settings);
        ViewUpdate {
            session: self.session,
            view: self.view,
            generation: self.generation,
            frame: renderer.render(&self.camera, self.size),
        }
    }
}

/// Runs every pending job on the calling thread and feeds the results back,
/// in dispersion order. Returns the number of accepted views.
pub fn drive_to_completion(session: &mut RenderSession) -> Result<usize, SessionError> {
    let mut accepted = 0;
    for job in session.pending_jobs() {
        if let Ok(update) = job.render() {
            accepted += session.complete_view(&update)? as usize;
        }
    }
    Ok(accepted)
}

/// Bounded pool of render workers shared by all sessions.
pub struct WorkerPool {
    pool: rayon::ThreadPool,
}

impl WorkerPool {
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .thread_name(|i| format!("render-{i}"))
            .build()?;
        Ok(WorkerPool { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Renders the jobs one after another on the pool, each spread across its
    /// threads, calling `done` as each view finishes. Cancelled jobs are skipped.
    pub fn dispatch(&self, jobs: Vec<ViewJob>, done: impl Fn(ViewUpdate) + Send + 'static) {
        self.pool.spawn(move || {
            for job in jobs {
                if let Ok(update) = job.render() {
                    done(update);
                }
            }
        });
    }

    /// Runs `f` inside the pool.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }
}
