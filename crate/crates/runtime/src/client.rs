//! Client side: owns the pose path, renders the periphery, and merges the
//! foveae streamed by the server. Also the single-device baseline.

use std::net::{TcpStream, ToSocketAddrs};
use std::time::Instant;

use splitfov_core::codec;
use splitfov_core::wire::{EndMsg, PoseUpdateMsg, SubframeMsg};
use splitfov_core::{pose_at, render_region, render_scaled, ClientFrameRecord, Eye, Image, Message, Pose};

use crate::clock::{Clock, Stage, Timeline};
use crate::compose::{compose, Upsample};
use crate::display::DisplaySink;
use crate::error::SessionError;
use crate::link::{tcp_link, MsgRx, MsgTx};
use crate::server::{send_msg, timed};
use crate::session::SessionConfig;
use crate::trace::{EventKind, Lane, MsgKind, Recorder};

#[derive(Debug, Clone)]
pub struct ClientRun {
    /// Configuration after the server's reply.
    pub config: SessionConfig,
    pub records: Vec<ClientFrameRecord>,
}

/// Frames completed before a failure are kept alongside the error.
#[derive(Debug)]
pub struct ClientFailure {
    pub error: SessionError,
    pub records: Vec<ClientFrameRecord>,
}

impl From<SessionError> for ClientFailure {
    fn from(error: SessionError) -> Self {
        ClientFailure { error, records: Vec::new() }
    }
}

impl std::fmt::Display for ClientFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} frames)", self.error, self.records.len())
    }
}

impl std::error::Error for ClientFailure {}

struct Received {
    foveae: [Image; 2],
    network_ms: f64,
    decode_ms: f64,
    bytes: u64,
}

fn receive_frame<R: MsgRx>(
    rx: &mut R,
    tl: &mut Timeline,
    rec: &mut Recorder,
    cfg: &SessionConfig,
    frame_id: u64,
) -> Result<Received, SessionError> {
    let rect = cfg.spec.foveal_rect(Eye::Left)?;
    let mut slots: [Option<SubframeMsg>; 2] = [None, None];
    let mut first_byte = None;
    let mut last_byte = 0.0;
    let mut bytes = 0u64;
    // Both subframes are read before decoding so network time covers transfer only.
    for _ in 0..2 {
        let d = rx
            .recv(tl.now())?
            .ok_or_else(|| SessionError::Disconnected(format!("server closed during frame {frame_id}")))?;
        tl.wait_until(d.last_byte_ms);
        rec.record(tl.now(), MsgKind::frame_id(&d.msg), EventKind::Received(MsgKind::of(&d.msg)));
        first_byte.get_or_insert(d.first_byte_ms);
        last_byte = d.last_byte_ms;
        bytes += d.wire_bytes as u64;
        let sub = match d.msg {
            Message::Subframe(s) => s,
            Message::End(_) => return Err(SessionError::Disconnected(format!("server ended during frame {frame_id}"))),
            other => return Err(SessionError::Protocol(format!("expected Subframe, got {}", other.name()))),
        };
        if sub.frame_id != frame_id {
            return Err(SessionError::Protocol(format!("subframe for frame {}, expected {frame_id}", sub.frame_id)));
        }
        let eye = sub.eye().ok_or_else(|| SessionError::Protocol(format!("unknown eye {}", sub.eye)))?;
        if slots[eye.index()].is_some() {
            return Err(SessionError::Protocol(format!("duplicate {eye:?} subframe for frame {frame_id}")));
        }
        if sub.rect() != rect {
            return Err(SessionError::Protocol(format!("subframe rect {:?}, expected {rect:?}", sub.rect())));
        }
        match sub.codec() {
            Some(c) if c == cfg.codec => {}
            Some(c) => return Err(SessionError::Protocol(format!("subframe codec {c}, session uses {}", cfg.codec))),
            None => return Err(SessionError::Protocol(format!("unknown codec {}", sub.codec))),
        }
        slots[eye.index()] = Some(sub);
    }
    let [Some(l), Some(r)] = slots else { unreachable!("two distinct eyes received") };
    let mut decode_ms = 0.0;
    let mut decoded = Vec::with_capacity(2);
    for sub in [l, r] {
        let (img, ms) = timed(tl, rec, Stage::Decode, frame_id, rect.area(), || {
            codec::decode(cfg.codec, &sub.payload, rect.w, rect.h)
        });
        decoded.push(img?);
        decode_ms += ms;
    }
    let [l, r]: [Image; 2] = decoded.try_into().expect("two eyes decoded");
    Ok(Received {
        foveae: [l, r],
        network_ms: (last_byte - first_byte.unwrap_or(last_byte)).max(0.0),
        decode_ms,
        bytes,
    })
}

fn next_pose_msg(cfg: &SessionConfig, frame_id: u64) -> Result<Message, SessionError> {
    if frame_id >= cfg.frames {
        return Ok(Message::End(EndMsg { frame_id: frame_id.saturating_sub(1) }));
    }
    let pose = pose_at(&cfg.camera_path(), frame_id)?;
    Ok(Message::Pose(PoseUpdateMsg::from_pose(frame_id, &pose)))
}

struct ClientSession<'a, T, R> {
    tx: T,
    rx: R,
    cfg: SessionConfig,
    upsample: Upsample,
    tl: Timeline,
    main: Recorder,
    render: Recorder,
    recv: Recorder,
    sink: &'a mut dyn DisplaySink,
    records: Vec<ClientFrameRecord>,
}

impl<T: MsgTx, R: MsgRx> ClientSession<'_, T, R> {
    fn handshake(&mut self) -> Result<(), SessionError> {
        let proposal = self.cfg;
        send_msg(&mut self.tx, &mut self.tl, &mut self.main, &Message::Hello(proposal.hello()))?;
        let d = self
            .rx
            .recv(self.tl.now())?
            .ok_or_else(|| SessionError::Disconnected("server closed during handshake".into()))?;
        self.tl.wait_until(d.last_byte_ms);
        self.main.record(self.tl.now(), 0, EventKind::Received(MsgKind::of(&d.msg)));
        let Message::Hello(reply) = d.msg else {
            return Err(SessionError::Protocol(format!("expected Hello, got {}", d.msg.name())));
        };
        let effective = SessionConfig::from_hello(&reply, proposal.rig)?;
        if effective.frames != proposal.frames || effective.path != proposal.path {
            return Err(SessionError::Protocol("server changed the frame count or camera path".into()));
        }
        self.cfg = effective;
        Ok(())
    }

    fn frame(&mut self, frame_id: u64, pose: &Pose) -> Result<ClientFrameRecord, SessionError> {
        let cfg = self.cfg;
        let frame_start = self.tl.now();
        let mut render_tl = self.tl.clone();
        let mut recv_tl = self.tl.clone();
        let (render_rec, recv_rec, rx) = (&mut self.render, &mut self.recv, &mut self.rx);
        let (reduced, draw_ms, received) = std::thread::scope(|s| {
            let h = s.spawn(|| receive_frame(rx, &mut recv_tl, recv_rec, &cfg, frame_id));
            let scene = cfg.scene_config();
            let (reduced, draw_ms) = timed(&mut render_tl, render_rec, Stage::ClientDraw, frame_id, cfg.split_client_rays().unwrap_or(0), || {
                render_scaled(&scene, &cfg.rig, pose, cfg.spec.full_dims(), cfg.spec.periph_scale)
            });
            (reduced, draw_ms, h.join().expect("receive thread panicked"))
        });
        self.tl.join(&render_tl);
        self.tl.join(&recv_tl);
        let reduced = reduced?;
        let received = received?;

        let full_px = u64::from(cfg.spec.full_w) * u64::from(cfg.spec.full_h);
        let upsample = self.upsample;
        let (frame, merge_ms) = timed(&mut self.tl, &mut self.main, Stage::Merge, frame_id, full_px, || {
            compose(&reduced, &received.foveae, &cfg.spec, upsample)
        });
        let frame = frame?;
        let sink = &mut *self.sink;
        let (shown, _) = timed(&mut self.tl, &mut self.main, Stage::Display, frame_id, 1, || sink.show(frame_id, &frame));
        shown.map_err(SessionError::Display)?;

        let pose_begin = self.tl.now();
        self.main.record(pose_begin, frame_id + 1, EventKind::Begin(Stage::Pose));
        let next = next_pose_msg(&cfg, frame_id + 1)?;
        self.tl.charge(Stage::Pose, 1);
        send_msg(&mut self.tx, &mut self.tl, &mut self.main, &next)?;
        let end = self.tl.now();
        self.main.record(end, frame_id + 1, EventKind::End(Stage::Pose));

        Ok(ClientFrameRecord {
            frame_id,
            draw_ms,
            network_ms: received.network_ms,
            decode_ms: received.decode_ms,
            merge_ms,
            pose_ms: (end - pose_begin).max(0.0),
            total_ms: (end - frame_start).max(0.0),
            bytes_received: received.bytes,
        })
    }

    fn run(&mut self) -> Result<(), SessionError> {
        self.handshake()?;
        let first = next_pose_msg(&self.cfg, 0)?;
        send_msg(&mut self.tx, &mut self.tl, &mut self.main, &first)?;
        let path = self.cfg.camera_path();
        for n in 0..self.cfg.frames {
            let pose = pose_at(&path, n)?;
            let rec = self.frame(n, &pose)?;
            self.records.push(rec);
        }
        // Wait for the server to acknowledge End.
        match self.rx.recv(self.tl.now())? {
            Some(d) => {
                self.tl.wait_until(d.last_byte_ms);
                self.main.record(self.tl.now(), MsgKind::frame_id(&d.msg), EventKind::Received(MsgKind::of(&d.msg)));
                match d.msg {
                    Message::End(_) => Ok(()),
                    other => Err(SessionError::Protocol(format!("expected End, got {}", other.name()))),
                }
            }
            None => Ok(()),
        }
    }
}

/// Runs a full client session over an established transport.
pub fn run_client_session<T: MsgTx, R: MsgRx>(
    tx: T,
    rx: R,
    config: SessionConfig,
    upsample: Upsample,
    timeline: Timeline,
    rec: Recorder,
    sink: &mut dyn DisplaySink,
) -> Result<ClientRun, ClientFailure> {
    config.validate()?;
    let mut session = ClientSession {
        tx,
        rx,
        cfg: config,
        upsample,
        tl: timeline,
        render: rec.lane(Lane::Render),
        recv: rec.lane(Lane::Recv),
        main: rec,
        sink,
        records: Vec::new(),
    };
    match session.run() {
        Ok(()) => Ok(ClientRun { config: session.cfg, records: session.records }),
        Err(error) => Err(ClientFailure { error, records: session.records }),
    }
}

/// Connects to a server over TCP and runs a session on the wall clock.
pub fn run_client(
    addr: impl ToSocketAddrs,
    config: SessionConfig,
    upsample: Upsample,
    rec: Recorder,
    sink: &mut dyn DisplaySink,
) -> Result<ClientRun, ClientFailure> {
    let stream = TcpStream::connect(addr).map_err(SessionError::from)?;
    let epoch = Instant::now();
    let (tx, rx) = tcp_link(stream, epoch)?;
    run_client_session(tx, rx, config, upsample, Timeline::new(Clock::Wall(epoch)), rec, sink)
}

/// Single-device baseline: the same frames, all rendered locally.
pub fn run_native(
    config: &SessionConfig,
    upsample: Upsample,
    mut tl: Timeline,
    mut rec: Recorder,
    sink: &mut dyn DisplaySink,
) -> Result<Vec<ClientFrameRecord>, SessionError> {
    config.validate()?;
    let cfg = *config;
    let spec = cfg.spec;
    let rect = spec.foveal_rect(Eye::Left)?;
    let scene = cfg.scene_config();
    let path = cfg.camera_path();
    let full_px = u64::from(spec.full_w) * u64::from(spec.full_h);
    let mut records = Vec::with_capacity(cfg.frames as usize);
    let mut pose = if cfg.frames > 0 { Some(pose_at(&path, 0)?) } else { None };
    for n in 0..cfg.frames {
        let Some(p) = pose else { break };
        let frame_start = tl.now();
        let (drawn, draw_ms) = timed(&mut tl, &mut rec, Stage::ClientDraw, n, cfg.native_rays()?, || {
            let foveae = Eye::BOTH.map(|eye| render_region(&scene, &cfg.rig, &p, eye, spec.eye_dims(), rect));
            let reduced = render_scaled(&scene, &cfg.rig, &p, spec.full_dims(), spec.periph_scale);
            (foveae, reduced)
        });
        let ([l, r], reduced) = drawn;
        let (foveae, reduced) = ([l?, r?], reduced?);
        let (frame, merge_ms) = timed(&mut tl, &mut rec, Stage::Merge, n, full_px, || compose(&reduced, &foveae, &spec, upsample));
        let frame = frame?;
        let (shown, _) = timed(&mut tl, &mut rec, Stage::Display, n, 1, || sink.show(n, &frame));
        shown.map_err(SessionError::Display)?;

        let pose_begin = tl.now();
        rec.record(pose_begin, n + 1, EventKind::Begin(Stage::Pose));
        pose = if n + 1 < cfg.frames { Some(pose_at(&path, n + 1)?) } else { None };
        tl.charge(Stage::Pose, 1);
        let end = tl.now();
        rec.record(end, n + 1, EventKind::End(Stage::Pose));
        records.push(ClientFrameRecord {
            frame_id: n,
            draw_ms,
            network_ms: 0.0,
            decode_ms: 0.0,
            merge_ms,
            pose_ms: end - pose_begin,
            total_ms: end - frame_start,
            bytes_received: 0,
        });
    }
    Ok(records)
}
