//! Split-rendering session runtime: server and client loops, transports,
//! clocks, tracing and the native baseline.

pub mod client;
pub mod clock;
pub mod compare;
pub mod compose;
pub mod display;
pub mod error;
pub mod link;
pub mod server;
pub mod session;
pub mod sim;
pub mod trace;

pub use client::{run_client, run_client_session, run_native, ClientFailure, ClientRun};
pub use clock::{Clock, CostModel, Span, Stage, StageCost, Timeline};
pub use compare::{run_compare, CompareRun, ComparisonReport, SplitArm};
pub use compose::{compose, merge, upsample_bilinear, upsample_nearest, Upsample};
pub use display::{CollectSink, DisplaySink, NullSink, PpmSink};
pub use error::SessionError;
pub use link::{sim_link, tcp_link, Delivery, MsgRx, MsgTx, NetModel};
pub use server::{run_server, run_server_session, serve_one, Outcome, ServerOptions, ServerRun, ServerSession};
pub use session::SessionConfig;
pub use sim::{run_sim, ClockMode, SimConfig, SimFailure, SimRun};
pub use trace::{check_lockstep, check_merge_order, Actor, Event, EventKind, Lane, MsgKind, Recorder, Trace};
