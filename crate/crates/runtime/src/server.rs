//! Server side: renders both foveae for each received pose and streams them back.

use std::net::{TcpListener, ToSocketAddrs};
use std::time::Instant;

use splitfov_core::codec;
use splitfov_core::wire::{EndMsg, HelloMsg, SubframeMsg, PROTOCOL_VERSION};
use splitfov_core::{render_region, CameraRig, CodecId, Eye, Image, Message, PartitionSpec, Pose, SceneId, ServerFrameTiming};

use crate::clock::{Clock, Stage, Timeline};
use crate::error::SessionError;
use crate::link::{tcp_link, MsgRx, MsgTx};
use crate::session::SessionConfig;
use crate::trace::{EventKind, MsgKind, Recorder};

/// Server-side settings; `Some` fields override what the client proposes.
#[derive(Debug, Clone, Default)]
pub struct ServerOptions {
    pub codec: Option<CodecId>,
    pub spec: Option<PartitionSpec>,
    pub scene: Option<SceneId>,
    pub rig: CameraRig,
    /// Encode the two eyes on separate threads.
    pub parallel_encode: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed,
    Disconnected(String),
}

#[derive(Debug, Clone)]
pub struct ServerRun {
    pub config: SessionConfig,
    pub records: Vec<ServerFrameTiming>,
    pub outcome: Outcome,
}

pub(crate) fn timed<T>(
    tl: &mut Timeline,
    rec: &mut Recorder,
    stage: Stage,
    frame_id: u64,
    units: u64,
    f: impl FnOnce() -> T,
) -> (T, f64) {
    rec.record(tl.now(), frame_id, EventKind::Begin(stage));
    let (out, span) = tl.run(stage, units, f);
    rec.record(span.end, frame_id, EventKind::End(stage));
    (out, span.ms())
}

pub(crate) fn send_msg<T: MsgTx + ?Sized>(
    tx: &mut T,
    tl: &mut Timeline,
    rec: &mut Recorder,
    msg: &Message,
) -> Result<(), SessionError> {
    rec.record(tl.now(), MsgKind::frame_id(msg), EventKind::Sent(MsgKind::of(msg)));
    let end = tx.send(msg, tl.now())?;
    tl.wait_until(end);
    Ok(())
}

pub struct ServerSession<T, R> {
    tx: T,
    rx: R,
    config: SessionConfig,
    timeline: Timeline,
    rec: Recorder,
    parallel_encode: bool,
}

impl<T: MsgTx, R: MsgRx> ServerSession<T, R> {
    /// Waits for the client's Hello and answers with the effective configuration.
    pub fn handshake(
        mut tx: T,
        mut rx: R,
        opts: &ServerOptions,
        mut timeline: Timeline,
        mut rec: Recorder,
    ) -> Result<Self, SessionError> {
        let hello = match rx.recv(timeline.now())? {
            Some(d) => {
                timeline.wait_until(d.last_byte_ms);
                rec.record(timeline.now(), 0, EventKind::Received(MsgKind::of(&d.msg)));
                match d.msg {
                    Message::Hello(h) => h,
                    other => return Err(SessionError::Protocol(format!("expected Hello, got {}", other.name()))),
                }
            }
            None => return Err(SessionError::Disconnected("closed before Hello".into())),
        };
        if hello.protocol_version != PROTOCOL_VERSION {
            // Tell the client which version we speak, then close.
            let reply = HelloMsg { protocol_version: PROTOCOL_VERSION, ..hello };
            let _ = send_msg(&mut tx, &mut timeline, &mut rec, &Message::Hello(reply));
            return Err(SessionError::VersionMismatch { local: PROTOCOL_VERSION, peer: hello.protocol_version });
        }
        let mut config = SessionConfig::from_hello(&hello, opts.rig)?;
        if let Some(c) = opts.codec {
            config.codec = c;
        }
        if let Some(s) = opts.spec {
            config.spec = s;
        }
        if let Some(s) = opts.scene {
            config.scene = s;
        }
        config.validate()?;
        send_msg(&mut tx, &mut timeline, &mut rec, &Message::Hello(config.hello()))?;
        Ok(ServerSession { tx, rx, config, timeline, rec, parallel_encode: opts.parallel_encode })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    /// Draws, encodes and sends both foveae for one pose.
    pub fn serve_frame(&mut self, frame_id: u64, pose: &Pose) -> Result<ServerFrameTiming, SessionError> {
        let cfg = self.config;
        let spec = cfg.spec;
        let rect = spec.foveal_rect(Eye::Left)?;
        let scene = cfg.scene_config();
        let (eyes, draw_ms) = timed(&mut self.timeline, &mut self.rec, Stage::ServerDraw, frame_id, cfg.server_rays(), || {
            Eye::BOTH.map(|eye| render_region(&scene, &cfg.rig, pose, eye, spec.eye_dims(), rect))
        });
        let [l, r] = eyes;
        let eyes: [Image; 2] = [l?, r?];

        let pixels = rect.area();
        let parallel = self.parallel_encode;
        let (payloads, encode_ms) = if parallel {
            // Both eyes encode at once: the stage costs one eye's worth of work.
            timed(&mut self.timeline, &mut self.rec, Stage::Encode, frame_id, pixels, || {
                std::thread::scope(|s| {
                    let h = s.spawn(|| codec::encode(cfg.codec, &eyes[1]));
                    let left = codec::encode(cfg.codec, &eyes[0]);
                    [left, h.join().expect("encoder thread panicked")]
                })
            })
        } else {
            timed(&mut self.timeline, &mut self.rec, Stage::Encode, frame_id, 2 * pixels, || {
                eyes.each_ref().map(|img| codec::encode(cfg.codec, img))
            })
        };

        let send_begin = self.timeline.now();
        self.rec.record(send_begin, frame_id, EventKind::Begin(Stage::Send));
        let mut bytes_sent = 0u64;
        for (eye, payload) in Eye::BOTH.into_iter().zip(payloads) {
            let msg = Message::Subframe(SubframeMsg {
                frame_id,
                eye: eye as u8,
                codec: cfg.codec as u8,
                rect: [rect.x as u16, rect.y as u16, rect.w as u16, rect.h as u16],
                payload,
            });
            bytes_sent += msg.encoded_len() as u64;
            send_msg(&mut self.tx, &mut self.timeline, &mut self.rec, &msg)?;
        }
        let send_end = self.timeline.now();
        self.rec.record(send_end, frame_id, EventKind::End(Stage::Send));
        Ok(ServerFrameTiming { frame_id, draw_ms, encode_ms, send_ms: (send_end - send_begin).max(0.0), bytes_sent })
    }

    /// Serves poses until the client sends End or disconnects.
    pub fn run(mut self) -> Result<ServerRun, SessionError> {
        let mut records = Vec::new();
        let mut expected = 0u64;
        let outcome = loop {
            let d = match self.rx.recv(self.timeline.now()) {
                Ok(Some(d)) => d,
                Ok(None) => break Outcome::Disconnected(format!("client closed after {} frames", records.len())),
                Err(SessionError::Wire(e)) if !e.is_protocol() => {
                    break Outcome::Disconnected(format!("client connection lost after {} frames: {e}", records.len()))
                }
                Err(e) => return Err(e),
            };
            self.timeline.wait_until(d.last_byte_ms);
            let now = self.timeline.now();
            self.rec.record(now, MsgKind::frame_id(&d.msg), EventKind::Received(MsgKind::of(&d.msg)));
            match d.msg {
                Message::Pose(p) => {
                    if p.frame_id != expected {
                        return Err(SessionError::Protocol(format!("pose for frame {}, expected {expected}", p.frame_id)));
                    }
                    if expected >= self.config.frames {
                        return Err(SessionError::Protocol(format!("pose for frame {expected} beyond session length")));
                    }
                    records.push(self.serve_frame(p.frame_id, &p.pose())?);
                    expected += 1;
                }
                Message::End(e) => {
                    let reply = Message::End(EndMsg { frame_id: e.frame_id });
                    // The client may already be gone; the session is complete either way.
                    let _ = send_msg(&mut self.tx, &mut self.timeline, &mut self.rec, &reply);
                    break Outcome::Completed;
                }
                other => return Err(SessionError::Protocol(format!("unexpected {} from client", other.name()))),
            }
        };
        Ok(ServerRun { config: self.config, records, outcome })
    }
}

pub fn run_server_session<T: MsgTx, R: MsgRx>(
    tx: T,
    rx: R,
    opts: &ServerOptions,
    timeline: Timeline,
    rec: Recorder,
) -> Result<ServerRun, SessionError> {
    ServerSession::handshake(tx, rx, opts, timeline, rec)?.run()
}

/// Accepts one client on `listener` and serves it over TCP on the wall clock.
pub fn serve_one(listener: &TcpListener, opts: &ServerOptions, rec: Recorder) -> Result<ServerRun, SessionError> {
    let (stream, _) = listener.accept()?;
    let epoch = Instant::now();
    let (tx, rx) = tcp_link(stream, epoch)?;
    run_server_session(tx, rx, opts, Timeline::new(Clock::Wall(epoch)), rec)
}

pub fn run_server(addr: impl ToSocketAddrs, opts: &ServerOptions, rec: Recorder) -> Result<ServerRun, SessionError> {
    let listener = TcpListener::bind(addr)?;
    serve_one(&listener, opts, rec)
}
