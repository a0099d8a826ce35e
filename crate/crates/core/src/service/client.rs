use std::net::{SocketAddr, TcpStream};
use std::time::Duration;

use tungstenite::{Message, WebSocket};

use super::protocol::{decode_frame, ClientMessage, ErrorCode, ServerMessage, PROTOCOL_VERSION};
use crate::frame::{Frame, FrameError};
use crate::multiview::{write_tile, MultiviewError, QuiltLayout};
use crate::raycast::ViewRig;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    WebSocket(Box<tungstenite::Error>),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Multiview(#[from] MultiviewError),
    #[error("server error {code:?}: {text}")]
    Server { code: ErrorCode, text: String },
    #[error("protocol: {0}")]
    Protocol(String),
}

impl From<tungstenite::Error> for ClientError {
    fn from(e: tungstenite::Error) -> Self {
        ClientError::WebSocket(Box::new(e))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Incoming {
    Message(ServerMessage),
    View { view: usize, generation: u64, frame: Frame },
}

/// Client-side quilt, accepting a tile only if it is at least as new as the
/// tile it replaces and not older than the newest generation announced.
#[derive(Debug, Clone)]
pub struct QuiltAssembler {
    layout: QuiltLayout,
    quilt: Frame,
    tiles: Vec<Option<u64>>,
    generation: u64,
}

impl QuiltAssembler {
    pub fn new(layout: QuiltLayout, generation: u64) -> Self {
        let (w, h) = layout.size();
        QuiltAssembler {
            layout,
            quilt: Frame::filled(w, h, [0, 0, 0, 255]),
            tiles: vec![None; layout.n_views],
            generation,
        }
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn layout(&self) -> &QuiltLayout {
        &self.layout
    }

    pub fn quilt(&self) -> &Frame {
        &self.quilt
    }

    pub fn tile_generations(&self) -> &[Option<u64>] {
        &self.tiles
    }

    /// New generation announced; a layout change starts from a blank quilt.
    pub fn announce(&mut self, generation: u64, layout: QuiltLayout) {
        if layout != self.layout {
            *self = QuiltAssembler::new(layout, generation);
        }
        self.generation = self.generation.max(generation);
    }

    /// Returns whether the tile was displayed.
    pub fn offer(&mut self, view: usize, generation: u64, frame: &Frame) -> Result<bool, MultiviewError> {
        if generation < self.generation || view >= self.tiles.len() {
            return Ok(false);
        }
        if self.tiles[view].is_some_and(|g| g > generation) {
            return Ok(false);
        }
        write_tile(&mut self.quilt, &self.layout, view, frame)?;
        self.tiles[view] = Some(generation);
        Ok(true)
    }

    pub fn is_complete(&self) -> bool {
        self.tiles.iter().all(|t| *t == Some(self.generation))
    }
}

/// Blocking protocol client, used for tests and scripting.
pub struct Client {
    ws: WebSocket<TcpStream>,
}

impl Client {
    pub fn connect(addr: SocketAddr) -> Result<Client, ClientError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_read_timeout(Some(Duration::from_secs(120)))?;
        let (ws, _) = tungstenite::client(format!("ws://{addr}/ws"), stream).map_err(|e| match e {
            tungstenite::HandshakeError::Failure(e) => e.into(),
            tungstenite::HandshakeError::Interrupted(_) => ClientError::Protocol("handshake interrupted".into()),
        })?;
        Ok(Client { ws })
    }

    pub fn send(&mut self, msg: &ClientMessage) -> Result<(), ClientError> {
        let text = serde_json::to_string(msg).expect("client messages serialize");
        self.ws.send(Message::Text(text))?;
        Ok(())
    }

    pub fn send_raw(&mut self, msg: Message) -> Result<(), ClientError> {
        self.ws.send(msg)?;
        Ok(())
    }

    /// Next message or view; server error messages are returned as messages.
    pub fn recv(&mut self) -> Result<Incoming, ClientError> {
        loop {
            match self.ws.read()? {
                Message::Text(t) => {
                    let m = serde_json::from_str(&t).map_err(|e| ClientError::Protocol(e.to_string()))?;
                    return Ok(Incoming::Message(m));
                }
                Message::Binary(b) => {
                    let (header, png) = decode_frame(&b).map_err(ClientError::Protocol)?;
                    let ServerMessage::ViewFrame {
                        view,
                        generation,
                        width,
                        height,
                        encoding,
                    } = header
                    else {
                        return Err(ClientError::Protocol("binary frame without view_frame header".into()));
                    };
                    if encoding != "png" {
                        return Err(ClientError::Protocol(format!("unsupported encoding {encoding}")));
                    }
                    let frame = Frame::from_png(png)?;
                    if frame.size() != (width, height) {
                        return Err(ClientError::Protocol("frame header size disagrees with payload".into()));
                    }
                    return Ok(Incoming::View {
                        view,
                        generation,
                        frame,
                    });
                }
                Message::Close(_) => return Err(tungstenite::Error::ConnectionClosed.into()),
                _ => {}
            }
        }
    }

    /// Sends hello and waits for the acknowledgement.
    pub fn hello(
        &mut self,
        volume: &str,
        layout: Option<QuiltLayout>,
        rig: Option<ViewRig>,
    ) -> Result<ServerMessage, ClientError> {
        self.send(&ClientMessage::Hello {
            protocol_version: PROTOCOL_VERSION,
            volume: volume.to_string(),
            layout,
            rig,
        })?;
        loop {
            match self.recv()? {
                Incoming::Message(m @ ServerMessage::SessionAck { .. }) => return Ok(m),
                Incoming::Message(ServerMessage::Error { code, text }) => {
                    return Err(ClientError::Server { code, text })
                }
                _ => {}
            }
        }
    }

    /// Receives until the next `session_state` and returns it; frames and
    /// other messages arriving first go to `on_other`.
    pub fn await_state(&mut self, mut on_other: impl FnMut(Incoming)) -> Result<ServerMessage, ClientError> {
        loop {
            match self.recv()? {
                Incoming::Message(m @ ServerMessage::SessionState { .. }) => return Ok(m),
                Incoming::Message(ServerMessage::Error { code, text }) => {
                    return Err(ClientError::Server { code, text })
                }
                other => on_other(other),
            }
        }
    }

    /// Feeds frames and state messages into `assembler` until every tile
    /// carries its current generation.
    pub fn complete(&mut self, assembler: &mut QuiltAssembler) -> Result<(), ClientError> {
        while !assembler.is_complete() {
            match self.recv()? {
                Incoming::View {
                    view,
                    generation,
                    frame,
                } => {
                    assembler.offer(view, generation, &frame)?;
                }
                Incoming::Message(ServerMessage::SessionState { generation, layout, .. }) => {
                    assembler.announce(generation, layout)
                }
                Incoming::Message(ServerMessage::Error { code, text }) => {
                    return Err(ClientError::Server { code, text })
                }
                Incoming::Message(_) => {}
            }
        }
        Ok(())
    }

    pub fn close(mut self) -> Result<(), ClientError> {
        self.ws.close(None)?;
        loop {
            match self.ws.read() {
                Ok(_) => {}
                Err(tungstenite::Error::ConnectionClosed) | Err(tungstenite::Error::AlreadyClosed) => return Ok(()),
                Err(tungstenite::Error::Io(_)) | Err(tungstenite::Error::Protocol(_)) => return Ok(()),
                Err(e) => return Err(e.into()),
            }
        }
    }
}
