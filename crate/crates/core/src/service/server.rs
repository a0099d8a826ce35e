use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use tokio::sync::{mpsc, oneshot};
use tower_http::services::ServeDir;

use super::catalog::{list_volumes, VolumeInfo};
use super::protocol::{encode_frame, CameraState, ClientMessage, ErrorCode, ServerMessage, PROTOCOL_VERSION};
use super::{ServiceConfig, ServiceError};
use crate::math::Vec3;
use crate::multiview::StereoParams;
use crate::pipeline::ViewSource;
use crate::raycast::{autofocus, Camera, FocusResult, ViewRig};
use crate::stream::{RenderSession, ViewUpdate, WorkerPool};
use crate::volume::{load_volume, read_meta, Volume};

const HELLO_TIMEOUT: Duration = Duration::from_secs(30);
/// Normalized intensity an autofocus request stops at when it names none.
pub const DEFAULT_FOCUS_THRESHOLD: f32 = 0.5;

struct ServiceState {
    config: ServiceConfig,
    pool: WorkerPool,
    active: AtomicUsize,
    next_session: AtomicU64,
    volumes: Mutex<HashMap<PathBuf, Arc<Volume>>>,
}

/// Holds one of the `max_sessions` slots for the life of a connection.
struct Slot(Arc<ServiceState>);

impl Slot {
    fn acquire(st: &Arc<ServiceState>) -> Option<Slot> {
        let max = st.config.max_sessions;
        st.active
            .fetch_update(Ordering::AcqRel, Ordering::Acquire, |n| (n < max).then_some(n + 1))
            .ok()
            .map(|_| Slot(st.clone()))
    }
}

impl Drop for Slot {
    fn drop(&mut self) {
        self.0.active.fetch_sub(1, Ordering::AcqRel);
    }
}

enum Fault {
    /// Reported to the client, then the connection is closed.
    Fatal(ErrorCode, String),
    Closed,
}

fn fatal(code: ErrorCode, text: impl Into<String>) -> Fault {
    Fault::Fatal(code, text.into())
}

/// A bound, not yet running, session service.
pub struct Server {
    listener: tokio::net::TcpListener,
    state: Arc<ServiceState>,
}

impl Server {
    pub async fn bind(config: ServiceConfig) -> Result<Server, ServiceError> {
        config.validate()?;
        let pool = WorkerPool::new(config.threads).map_err(|e| ServiceError::Config(e.to_string()))?;
        let listener = tokio::net::TcpListener::bind(config.listen)
            .await
            .map_err(|source| ServiceError::Io {
                context: format!("binding {}", config.listen),
                source,
            })?;
        Ok(Server {
            listener,
            state: Arc::new(ServiceState {
                config,
                pool,
                active: AtomicUsize::new(0),
                next_session: AtomicU64::new(1),
                volumes: Mutex::new(HashMap::new()),
            }),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    pub async fn run(self) -> Result<(), ServiceError> {
        let app = router(self.state);
        axum::serve(self.listener, app)
            .await
            .map_err(|source| ServiceError::Io {
                context: "serving".into(),
                source,
            })
    }
}

fn router(state: Arc<ServiceState>) -> Router {
    let static_dir = state.config.static_dir.clone();
    let r = Router::new()
        .route("/ws", get(ws_handler))
        .route("/volumes", get(volumes_handler))
        .with_state(state);
    match static_dir {
        Some(dir) => r.fallback_service(ServeDir::new(dir)),
        None => r,
    }
}

async fn volumes_handler(State(st): State<Arc<ServiceState>>) -> Response {
    let dir = st.config.volume_dir.clone();
    match tokio::task::spawn_blocking(move || list_volumes(dir)).await {
        Ok(Ok(listing)) => Json(listing).into_response(),
        Ok(Err(e)) => (axum::http::StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
        Err(e) => (axum::http::StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

async fn ws_handler(ws: WebSocketUpgrade, State(st): State<Arc<ServiceState>>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, st))
}

async fn send_json(socket: &mut WebSocket, msg: &ServerMessage) -> Result<(), Fault> {
    let text = serde_json::to_string(msg).expect("server messages serialize");
    socket.send(Message::Text(text)).await.map_err(|_| Fault::Closed)
}

async fn connection(mut socket: WebSocket, st: Arc<ServiceState>) {
    let result = match Slot::acquire(&st) {
        None => Err(fatal(
            ErrorCode::SessionLimit,
            format!("server is at its limit of {} sessions", st.config.max_sessions),
        )),
        Some(slot) => match Connection::open(&mut socket, &st).await {
            Ok(mut conn) => {
                let r = conn.run(&mut socket).await;
                log::debug!("session {} closed", conn.session.id());
                drop(slot);
                r
            }
            Err(e) => Err(e),
        },
    };
    if let Err(Fault::Fatal(code, text)) = result {
        log::debug!("closing connection: {text}");
        let _ = send_json(&mut socket, &ServerMessage::error(code, text)).await;
        let _ = socket.send(Message::Close(None)).await;
    }
}

async fn next_text(socket: &mut WebSocket) -> Result<String, Fault> {
    loop {
        match socket.recv().await {
            None | Some(Err(_)) | Some(Ok(Message::Close(_))) => return Err(Fault::Closed),
            Some(Ok(Message::Text(t))) => return Ok(t),
            Some(Ok(Message::Binary(_))) => {
                return Err(fatal(
                    ErrorCode::ProtocolViolation,
                    "clients must not send binary frames",
                ))
            }
            Some(Ok(_)) => {}
        }
    }
}

fn parse(text: &str) -> Result<ClientMessage, Fault> {
    serde_json::from_str(text).map_err(|e| fatal(ErrorCode::ProtocolViolation, format!("unreadable message: {e}")))
}

/// Loads `name` from the volume directory, sharing loaded volumes between sessions.
fn resolve_volume(st: &ServiceState, name: &str) -> Result<(Arc<Volume>, VolumeInfo), Fault> {
    let plain = Path::new(name).file_name().map(|f| f == name).unwrap_or(false);
    if !plain || !name.ends_with(".meta") {
        return Err(fatal(
            ErrorCode::UnknownVolume,
            format!("`{name}` is not a sidecar name"),
        ));
    }
    let path = st.config.volume_dir.join(name);
    let meta = read_meta(&path).map_err(|e| fatal(ErrorCode::UnknownVolume, e.to_string()))?;
    let info = VolumeInfo::from_meta(name, &meta);
    if let Some(v) = st.volumes.lock().expect("volume cache lock").get(&path) {
        return Ok((v.clone(), info));
    }
    let v = Arc::new(load_volume(&path).map_err(|e| fatal(ErrorCode::UnknownVolume, e.to_string()))?);
    st.volumes.lock().expect("volume cache lock").insert(path, v.clone());
    Ok((v, info))
}

struct Rendered {
    update: ViewUpdate,
    png: Result<Vec<u8>, String>,
}

struct Connection {
    st: Arc<ServiceState>,
    session: RenderSession,
    rig: ViewRig,
    stereo: Option<StereoParams>,
    tx: mpsc::UnboundedSender<Rendered>,
    rx: mpsc::UnboundedReceiver<Rendered>,
}

impl Connection {
    async fn open(socket: &mut WebSocket, st: &Arc<ServiceState>) -> Result<Connection, Fault> {
        let text = tokio::time::timeout(HELLO_TIMEOUT, next_text(socket))
            .await
            .map_err(|_| fatal(ErrorCode::ProtocolViolation, "no hello received"))??;
        let ClientMessage::Hello {
            protocol_version,
            volume,
            layout,
            rig,
        } = parse(&text)?
        else {
            return Err(fatal(ErrorCode::ProtocolViolation, "the first message must be hello"));
        };
        if protocol_version != PROTOCOL_VERSION {
            return Err(fatal(
                ErrorCode::VersionMismatch,
                format!("server speaks protocol {PROTOCOL_VERSION}, client sent {protocol_version}"),
            ));
        }
        let cfg = &st.config;
        let rig = rig.unwrap_or(cfg.rig);
        let layout = match layout {
            Some(l) => l,
            None => cfg
                .layout
                .with_view_count(rig.n_views)
                .map_err(|e| fatal(ErrorCode::InvalidRequest, e.to_string()))?,
        };
        let st2 = st.clone();
        let (vol, info) = tokio::task::spawn_blocking(move || resolve_volume(&st2, &volume))
            .await
            .map_err(|e| fatal(ErrorCode::Internal, e.to_string()))??;
        let camera = Camera::framing(&vol.grid(), layout.tile_aspect());
        let id = st.next_session.fetch_add(1, Ordering::Relaxed);
        let session = RenderSession::new(
            id,
            vol,
            camera,
            ViewSource::Turntable(rig),
            cfg.settings.clone(),
            layout,
        )
        .map_err(|e| fatal(ErrorCode::InvalidRequest, e.to_string()))?;
        send_json(
            socket,
            &ServerMessage::SessionAck {
                protocol_version: PROTOCOL_VERSION,
                session: id,
                volume: info,
                layout,
                generation: session.generation(),
                camera: CameraState::from(session.camera()),
            },
        )
        .await?;
        let (tx, rx) = mpsc::unbounded_channel();
        let conn = Connection {
            st: st.clone(),
            session,
            rig,
            stereo: None,
            tx,
            rx,
        };
        conn.dispatch();
        Ok(conn)
    }

    fn dispatch(&self) {
        let tx = self.tx.clone();
        self.st.pool.dispatch(self.session.pending_jobs(), move |update| {
            let png = update.frame.to_png().map_err(|e| e.to_string());
            let _ = tx.send(Rendered { update, png });
        });
    }

    async fn run(&mut self, socket: &mut WebSocket) -> Result<(), Fault> {
        loop {
            tokio::select! {
                msg = next_text(socket) => {
                    let msg = match msg {
                        Ok(t) => parse(&t)?,
                        Err(Fault::Closed) => return Ok(()),
                        Err(e) => return Err(e),
                    };
                    self.apply(socket, msg).await?;
                }
                Some(r) = self.rx.recv() => self.deliver(socket, r).await?,
            }
        }
    }

    /// Frames of superseded generations are dropped here, never sent.
    async fn deliver(&mut self, socket: &mut WebSocket, r: Rendered) -> Result<(), Fault> {
        let accepted = self
            .session
            .complete_view(&r.update)
            .map_err(|e| fatal(ErrorCode::Internal, e.to_string()))?;
        if !accepted {
            return Ok(());
        }
        let png = r.png.map_err(|e| fatal(ErrorCode::Internal, e))?;
        let header = ServerMessage::ViewFrame {
            view: r.update.view,
            generation: r.update.generation,
            width: r.update.frame.width(),
            height: r.update.frame.height(),
            encoding: "png".into(),
        };
        socket
            .send(Message::Binary(encode_frame(&header, &png)))
            .await
            .map_err(|_| Fault::Closed)
    }

    fn state_message(&self) -> ServerMessage {
        ServerMessage::SessionState {
            generation: self.session.generation(),
            camera: CameraState::from(self.session.camera()),
            layout: *self.session.layout(),
            timepoint: self.session.current_timepoint(),
            stereo: self.stereo.is_some(),
        }
    }

    async fn changed(&mut self, socket: &mut WebSocket) -> Result<(), Fault> {
        send_json(socket, &self.state_message()).await?;
        self.dispatch();
        Ok(())
    }

    async fn apply(&mut self, socket: &mut WebSocket, msg: ClientMessage) -> Result<(), Fault> {
        let outcome: Result<bool, String> = match msg {
            ClientMessage::Hello { .. } => {
                return Err(fatal(ErrorCode::ProtocolViolation, "hello sent twice"));
            }
            ClientMessage::SetCamera {
                azimuth,
                elevation,
                distance,
                center,
                projection,
            } => {
                let mut cam = *self.session.camera();
                cam.azimuth = azimuth.unwrap_or(cam.azimuth);
                cam.elevation = elevation.unwrap_or(cam.elevation);
                cam.distance = distance.unwrap_or(cam.distance);
                cam.rotation_center = center.map(Vec3::from_array).unwrap_or(cam.rotation_center);
                cam.projection = projection.unwrap_or(cam.projection);
                self.session.update_camera(cam).map(|_| true).map_err(|e| e.to_string())
            }
            ClientMessage::SetSettings {
                mode,
                layering,
                thresholds,
                gamma,
                sample_step,
            } => {
                let mut s = self.session.settings().clone();
                s.mode = mode.unwrap_or(s.mode);
                s.layering = layering.unwrap_or(s.layering);
                s.sample_step = sample_step.unwrap_or(s.sample_step);
                let n = self.session.volume().n_channels();
                let s = s.with_transfer_overrides(n, &thresholds.unwrap_or_default(), &gamma.unwrap_or_default());
                self.session.update_settings(s).map(|_| true).map_err(|e| e.to_string())
            }
            ClientMessage::SetStereo { enabled, params } => {
                let source = if enabled {
                    ViewSource::Stereo(params)
                } else {
                    ViewSource::Turntable(self.rig)
                };
                let r = self
                    .session
                    .update_source(source)
                    .map(|_| true)
                    .map_err(|e| e.to_string());
                if r.is_ok() {
                    self.stereo = enabled.then_some(params);
                }
                r
            }
            ClientMessage::SetRig { n_views, step_deg } => match ViewRig::new(n_views, step_deg) {
                Err(e) => Err(e),
                Ok(rig) if self.stereo.is_some() => {
                    self.rig = rig;
                    Ok(false)
                }
                Ok(rig) => {
                    let r = self
                        .session
                        .update_source(ViewSource::Turntable(rig))
                        .map(|_| true)
                        .map_err(|e| e.to_string());
                    if r.is_ok() {
                        self.rig = rig;
                    }
                    r
                }
            },
            ClientMessage::SetTimepoint { t } => self
                .session
                .advance_timepoint(t)
                .map(|_| true)
                .map_err(|e| e.to_string()),
            ClientMessage::AutofocusRequest { threshold } => {
                let threshold = threshold.unwrap_or(DEFAULT_FOCUS_THRESHOLD);
                let result = autofocus(
                    self.session.active_volume(),
                    self.session.camera(),
                    self.session.settings(),
                    threshold,
                );
                let moved = match result {
                    FocusResult::Hit { .. } => {
                        let cam = result.apply(self.session.camera());
                        self.session
                            .update_camera(cam)
                            .map_err(|e| fatal(ErrorCode::Internal, e.to_string()))?;
                        true
                    }
                    FocusResult::NoHit => false,
                };
                send_json(
                    socket,
                    &ServerMessage::FocusResult {
                        generation: self.session.generation(),
                        hit: moved,
                        point: result.hit_point().map(|p| p.to_array()),
                        distance: result.hit_distance(),
                    },
                )
                .await?;
                Ok(moved)
            }
        };
        match outcome {
            Ok(true) => self.changed(socket).await,
            Ok(false) => Ok(()),
            Err(text) => send_json(socket, &ServerMessage::error(ErrorCode::InvalidRequest, text)).await,
        }
    }
}

/// A server running on its own thread and runtime; stops when dropped.
pub struct BackgroundServer {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl BackgroundServer {
    pub fn start(config: ServiceConfig) -> Result<BackgroundServer, ServiceError> {
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let (stop, stopped) = oneshot::channel::<()>();
        let thread = std::thread::Builder::new()
            .name("voxview-service".into())
            .spawn(move || {
                let rt = match tokio::runtime::Builder::new_multi_thread()
                    .worker_threads(2)
                    .enable_all()
                    .build()
                {
                    Ok(rt) => rt,
                    Err(source) => {
                        let _ = addr_tx.send(Err(ServiceError::Io {
                            context: "starting runtime".into(),
                            source,
                        }));
                        return;
                    }
                };
                rt.block_on(async move {
                    match Server::bind(config).await {
                        Ok(server) => {
                            let _ = addr_tx.send(Ok(server.local_addr()));
                            tokio::select! {
                                r = server.run() => if let Err(e) = r { log::error!("{e}") },
                                _ = stopped => {}
                            }
                        }
                        Err(e) => {
                            let _ = addr_tx.send(Err(e));
                        }
                    }
                });
                rt.shutdown_background();
            })
            .map_err(|e| ServiceError::Thread(e.to_string()))?;
        let addr = addr_rx
            .recv()
            .map_err(|_| ServiceError::Thread("server thread exited before binding".into()))??;
        Ok(BackgroundServer {
            addr,
            stop: Some(stop),
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn ws_url(&self) -> String {
        format!("ws://{}/ws", self.addr)
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
