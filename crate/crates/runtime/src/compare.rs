//! Native-versus-split comparison.

use std::fmt::Write as _;
use std::net::SocketAddr;

use splitfov_core::metrics::{improvement_pct, render_table, summarize};
use splitfov_core::{ClientFrameRecord, ServerFrameTiming, Summary};

use crate::client::{run_client, run_native};
use crate::clock::Timeline;
use crate::compose::Upsample;
use crate::display::NullSink;
use crate::error::SessionError;
use crate::link::NetModel;
use crate::server::ServerOptions;
use crate::session::SessionConfig;
use crate::sim::{run_sim, ClockMode, SimConfig};
use crate::trace::{Actor, Lane, Recorder};

#[derive(Debug, Clone)]
pub enum SplitArm {
    Sim { net: NetModel, server: ServerOptions },
    Connect(SocketAddr),
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub native: Summary,
    pub split: Summary,
    pub improvement_pct: f64,
    pub native_rays: u64,
    pub split_client_rays: u64,
    pub fovea_dims: (u32, u32),
}

impl ComparisonReport {
    /// Builds the report from recorded frames of both arms.
    pub fn from_records(
        native: &[ClientFrameRecord],
        split: &[ClientFrameRecord],
        server: &[ServerFrameTiming],
        split_config: &SessionConfig,
    ) -> Result<Self, SessionError> {
        let native_summary = summarize(native, None).map_err(metrics_err)?;
        let split_summary =
            summarize(split, if server.is_empty() { None } else { Some(server) }).map_err(metrics_err)?;
        let improvement =
            improvement_pct(native_summary.total.median_ms, split_summary.total.median_ms).map_err(metrics_err)?;
        Ok(ComparisonReport {
            native: native_summary,
            split: split_summary,
            improvement_pct: improvement,
            native_rays: split_config.native_rays()?,
            split_client_rays: split_config.split_client_rays()?,
            fovea_dims: split_config.spec.fovea_dims(),
        })
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "== native ==");
        s.push_str(&render_table(&self.native, self.fovea_dims));
        let _ = writeln!(s, "\n== split ==");
        s.push_str(&render_table(&self.split, self.fovea_dims));
        let _ = writeln!(
            s,
            "\nclient rays per frame: native {} split {} ({:.4} of native)",
            self.native_rays,
            self.split_client_rays,
            self.split_client_rays as f64 / self.native_rays as f64
        );
        let _ = writeln!(
            s,
            "improvement: {:.2}% (native median {:.2} ms, split median {:.2} ms)",
            self.improvement_pct, self.native.total.median_ms, self.split.total.median_ms
        );
        s
    }
}

#[derive(Debug, Clone)]
pub struct CompareRun {
    pub report: ComparisonReport,
    pub native: Vec<ClientFrameRecord>,
    pub split: Vec<ClientFrameRecord>,
    pub server: Vec<ServerFrameTiming>,
}

fn metrics_err(e: splitfov_core::metrics::MetricsError) -> SessionError {
    SessionError::Config(format!("cannot summarize: {e}"))
}

/// Runs the native baseline, then the split pipeline, on the same path.
pub fn run_compare(
    session: &SessionConfig,
    clock: &ClockMode,
    arm: &SplitArm,
    upsample: Upsample,
) -> Result<CompareRun, SessionError> {
    if session.frames == 0 {
        return Err(SessionError::Config("comparison needs at least one frame".into()));
    }
    let native = run_native(
        session,
        upsample,
        Timeline::new(clock.clock()),
        Recorder::disabled(Actor::Client, Lane::Main),
        &mut NullSink,
    )?;
    let (split_cfg, split, server) = match arm {
        SplitArm::Sim { net, server } => {
            let mut cfg = SimConfig::new(*session, *net, clock.clone());
            cfg.server = server.clone();
            cfg.upsample = upsample;
            let run = run_sim(&cfg, &mut NullSink)
                .map_err(|f| SessionError::Disconnected(format!("split run failed: {f}")))?;
            (run.client.config, run.client.records, run.server.records)
        }
        SplitArm::Connect(addr) => {
            let run = run_client(addr, *session, upsample, Recorder::disabled(Actor::Client, Lane::Main), &mut NullSink)
                .map_err(|f| f.error)?;
            (run.config, run.records, Vec::new())
        }
    };
    Ok(CompareRun {
        report: ComparisonReport::from_records(&native, &split, &server, &split_cfg)?,
        native,
        split,
        server,
    })
}
