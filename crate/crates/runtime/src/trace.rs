//! Event trace of a session and the ordering checks run over it.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::clock::Stage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Actor {
    Server,
    Client,
}

/// Thread of execution inside an actor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lane {
    Main,
    Render,
    Recv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MsgKind {
    Hello,
    Pose,
    Subframe,
    End,
}

impl MsgKind {
    pub fn of(msg: &splitfov_core::Message) -> Self {
        use splitfov_core::Message;
        match msg {
            Message::Hello(_) => MsgKind::Hello,
            Message::Pose(_) => MsgKind::Pose,
            Message::Subframe(_) => MsgKind::Subframe,
            Message::End(_) => MsgKind::End,
        }
    }

    pub fn frame_id(msg: &splitfov_core::Message) -> u64 {
        use splitfov_core::Message;
        match msg {
            Message::Hello(_) => 0,
            Message::Pose(p) => p.frame_id,
            Message::Subframe(s) => s.frame_id,
            Message::End(e) => e.frame_id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    Begin(Stage),
    End(Stage),
    Sent(MsgKind),
    Received(MsgKind),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t_ms: f64,
    pub actor: Actor,
    pub lane: Lane,
    pub seq: u64,
    pub frame_id: u64,
    pub kind: EventKind,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            EventKind::Begin(s) => format!("begin {}", s.name()),
            EventKind::End(s) => format!("end {}", s.name()),
            EventKind::Sent(m) => format!("send {m:?}"),
            EventKind::Received(m) => format!("recv {m:?}"),
        };
        write!(f, "{:10.3} {:?}/{:?} #{} frame {} {}", self.t_ms, self.actor, self.lane, self.seq, self.frame_id, what)
    }
}

/// Shared, thread-safe event sink.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    events: Arc<Mutex<Vec<Event>>>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn recorder(&self, actor: Actor, lane: Lane) -> Recorder {
        Recorder { trace: Some(self.clone()), actor, lane, seq: 0 }
    }

    /// Events ordered by time, then actor, lane and per-lane sequence.
    pub fn events(&self) -> Vec<Event> {
        let mut ev = self.events.lock().unwrap_or_else(|p| p.into_inner()).clone();
        sort_events(&mut ev);
        ev
    }
}

pub fn sort_events(ev: &mut [Event]) {
    ev.sort_by(|a, b| {
        a.t_ms
            .total_cmp(&b.t_ms)
            .then(a.actor.cmp(&b.actor))
            .then(a.lane.cmp(&b.lane))
            .then(a.seq.cmp(&b.seq))
    });
}

/// Per-lane writer into a [`Trace`]; a disabled recorder drops everything.
#[derive(Debug)]
pub struct Recorder {
    trace: Option<Trace>,
    actor: Actor,
    lane: Lane,
    seq: u64,
}

impl Recorder {
    pub fn disabled(actor: Actor, lane: Lane) -> Self {
        Recorder { trace: None, actor, lane, seq: 0 }
    }

    /// A recorder for another lane of the same actor.
    pub fn lane(&self, lane: Lane) -> Recorder {
        Recorder { trace: self.trace.clone(), actor: self.actor, lane, seq: 0 }
    }

    pub fn record(&mut self, t_ms: f64, frame_id: u64, kind: EventKind) {
        let Some(trace) = &self.trace else { return };
        let ev = Event { t_ms, actor: self.actor, lane: self.lane, seq: self.seq, frame_id, kind };
        self.seq += 1;
        trace.events.lock().unwrap_or_else(|p| p.into_inner()).push(ev);
    }
}

#[derive(Default)]
struct FrameMarks {
    pose_sent: Option<(f64, u64)>,
    pose_recv: Option<(f64, u64)>,
    draw_begin: Option<(f64, u64)>,
    send_end: Option<(f64, u64)>,
    display_end: Option<(f64, u64)>,
    client_draw_end: Option<f64>,
    decode_end: Option<f64>,
    merge_begin: Option<f64>,
}

fn frames(events: &[Event]) -> BTreeMap<u64, FrameMarks> {
    let mut map: BTreeMap<u64, FrameMarks> = BTreeMap::new();
    for e in events {
        let m = map.entry(e.frame_id).or_default();
        let at = Some((e.t_ms, e.seq));
        match (e.actor, e.lane, e.kind) {
            (Actor::Client, Lane::Main, EventKind::Sent(MsgKind::Pose)) => m.pose_sent = at,
            (Actor::Server, _, EventKind::Received(MsgKind::Pose)) => m.pose_recv = at,
            (Actor::Server, _, EventKind::Begin(Stage::ServerDraw)) => m.draw_begin = at,
            (Actor::Server, _, EventKind::End(Stage::Send)) => m.send_end = at,
            (Actor::Client, Lane::Main, EventKind::End(Stage::Display)) => m.display_end = at,
            (Actor::Client, _, EventKind::End(Stage::ClientDraw)) => m.client_draw_end = Some(e.t_ms),
            (Actor::Client, _, EventKind::End(Stage::Decode)) => {
                m.decode_end = Some(m.decode_end.map_or(e.t_ms, |d: f64| d.max(e.t_ms)))
            }
            (Actor::Client, _, EventKind::Begin(Stage::Merge)) => m.merge_begin = Some(e.t_ms),
            _ => {}
        }
    }
    map
}

/// `a` happens no later than `b` on the same lane: timestamps ordered and,
/// when equal, sequence numbers too.
fn same_lane_before(a: (f64, u64), b: (f64, u64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Lockstep rules: the server draws frame n only after receiving pose n, the
/// client sends pose n only after displaying frame n-1, the server never starts
/// frame n+1 before finishing frame n, and exactly `frame_count` frames are drawn.
pub fn check_lockstep(events: &[Event], frame_count: u64) -> Vec<String> {
    let mut out = Vec::new();
    let draws: Vec<u64> = events
        .iter()
        .filter(|e| e.actor == Actor::Server && e.kind == EventKind::Begin(Stage::ServerDraw))
        .map(|e| e.frame_id)
        .collect();
    if draws.len() as u64 != frame_count {
        out.push(format!("server drew {} frames, expected {frame_count}", draws.len()));
    }
    if draws.iter().copied().ne(0..draws.len() as u64) {
        out.push(format!("server drew frames out of order: {draws:?}"));
    }
    let map = frames(events);
    for n in 0..frame_count {
        let Some(m) = map.get(&n) else {
            out.push(format!("frame {n}: no events"));
            continue;
        };
        match (m.pose_recv, m.draw_begin) {
            (Some(r), Some(d)) if same_lane_before(r, d) => {}
            (Some(r), Some(d)) => out.push(format!("frame {n}: server draw at {} before pose receipt at {}", d.0, r.0)),
            _ => out.push(format!("frame {n}: missing pose receipt or draw")),
        }
        if let (Some(s), Some(r)) = (m.pose_sent, m.pose_recv) {
            if r.0 < s.0 {
                out.push(format!("frame {n}: pose received at {} before it was sent at {}", r.0, s.0));
            }
        }
        if n > 0 {
            let prev = map.get(&(n - 1));
            match (prev.and_then(|p| p.display_end), m.pose_sent) {
                (Some(d), Some(s)) if same_lane_before(d, s) => {}
                (Some(d), Some(s)) => {
                    out.push(format!("frame {n}: pose sent at {} before frame {} was displayed at {}", s.0, n - 1, d.0))
                }
                _ => out.push(format!("frame {n}: missing previous display or pose send")),
            }
            match (prev.and_then(|p| p.send_end), m.draw_begin) {
                (Some(e), Some(d)) if same_lane_before(e, d) => {}
                (Some(_), Some(d)) => out.push(format!("frame {n}: server started drawing at {} before finishing frame {}", d.0, n - 1)),
                _ => {}
            }
        }
    }
    out
}

/// The client merges a frame only after both its peripheral draw and its
/// fovea decodes finished.
pub fn check_merge_order(events: &[Event]) -> Vec<String> {
    let mut out = Vec::new();
    for (n, m) in frames(events) {
        let Some(merge) = m.merge_begin else { continue };
        let ready = m.client_draw_end.unwrap_or(f64::NEG_INFINITY).max(m.decode_end.unwrap_or(f64::NEG_INFINITY));
        if merge < ready {
            out.push(format!("frame {n}: merge at {merge} before inputs were ready at {ready}"));
        }
    }
    out
}
