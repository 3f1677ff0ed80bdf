//! Client and server in one process over a simulated link.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::client::{run_client_session, ClientFailure, ClientRun};
use crate::clock::{Clock, CostModel, Timeline};
use crate::compose::Upsample;
use crate::display::DisplaySink;
use crate::error::SessionError;
use crate::link::{sim_link, NetModel};
use crate::server::{run_server_session, ServerOptions, ServerRun};
use crate::session::SessionConfig;
use crate::trace::{Actor, Event, Lane, Trace};

#[derive(Debug, Clone)]
pub enum ClockMode {
    Wall,
    Virtual(CostModel),
}

impl ClockMode {
    /// A fresh clock; wall clocks share an epoch taken now.
    pub fn clock(&self) -> Clock {
        match self {
            ClockMode::Wall => Clock::Wall(Instant::now()),
            ClockMode::Virtual(c) => Clock::virtual_clock(c.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub session: SessionConfig,
    pub server: ServerOptions,
    pub net: NetModel,
    pub clock: ClockMode,
    pub upsample: Upsample,
    /// Extra one-way delay in ms for the pose of the given frame.
    pub pose_delays: BTreeMap<u64, f64>,
}

impl SimConfig {
    pub fn new(session: SessionConfig, net: NetModel, clock: ClockMode) -> Self {
        SimConfig {
            session,
            server: ServerOptions { rig: session.rig, ..Default::default() },
            net,
            clock,
            upsample: Upsample::Nearest,
            pose_delays: BTreeMap::new(),
        }
    }
}

#[derive(Debug)]
pub struct SimRun {
    pub client: ClientRun,
    pub server: ServerRun,
    pub trace: Vec<Event>,
}

#[derive(Debug)]
pub struct SimFailure {
    pub client: Option<ClientFailure>,
    pub server: Option<SessionError>,
    pub trace: Vec<Event>,
}

impl std::fmt::Display for SimFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (&self.client, &self.server) {
            (Some(c), Some(s)) => write!(f, "client: {c}; server: {s}"),
            (Some(c), None) => write!(f, "client: {c}"),
            (None, Some(s)) => write!(f, "server: {s}"),
            (None, None) => write!(f, "session failed"),
        }
    }
}

impl std::error::Error for SimFailure {}

pub fn run_sim(cfg: &SimConfig, sink: &mut dyn DisplaySink) -> Result<SimRun, SimFailure> {
    if let Err(e) = cfg.net.validate() {
        return Err(SimFailure { client: Some(e.into()), server: None, trace: Vec::new() });
    }
    let clock = cfg.clock.clock();
    let (c2s_tx, c2s_rx) = sim_link(cfg.net, clock.clone());
    let c2s_tx = c2s_tx.with_pose_delays(cfg.pose_delays.clone());
    let (s2c_tx, s2c_rx) = sim_link(cfg.net, clock.clone());
    let trace = Trace::new();

    let (client, server) = std::thread::scope(|s| {
        let server_clock = clock.clone();
        let server_rec = trace.recorder(Actor::Server, Lane::Main);
        let server = s.spawn(move || {
            run_server_session(s2c_tx, c2s_rx, &cfg.server, Timeline::new(server_clock), server_rec)
        });
        let client = run_client_session(
            c2s_tx,
            s2c_rx,
            cfg.session,
            cfg.upsample,
            Timeline::new(clock.clone()),
            trace.recorder(Actor::Client, Lane::Main),
            sink,
        );
        (client, server.join().expect("server thread panicked"))
    });
    let events = trace.events();
    match (client, server) {
        (Ok(client), Ok(server)) => Ok(SimRun { client, server, trace: events }),
        (c, s) => Err(SimFailure { client: c.err(), server: s.err(), trace: events }),
    }
}
