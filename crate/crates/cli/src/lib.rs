//! Command-line front end: argument parsing and the per-mode drivers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::net::{SocketAddr, ToSocketAddrs};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use splitfov_core::metrics::{self, read_csv, render_table, summarize, to_key_values, write_csv, StageStats};
use splitfov_core::{CameraRig, ClientFrameRecord, CodecId, PartitionSpec, PathId, SceneId, ServerFrameTiming};
use splitfov_runtime::trace::{check_lockstep, check_merge_order, Actor, Lane, Recorder};
use splitfov_runtime::{
    run_client, run_compare, run_native, run_server, run_sim, ClockMode, CostModel, DisplaySink, NetModel, NullSink,
    Outcome, PpmSink, ServerOptions, SessionConfig, SessionError, SimConfig, SplitArm, Timeline, Upsample,
};
use thiserror::Error;

pub const CLIENT_CSV: &str = "client_timings.csv";
pub const SERVER_CSV: &str = "server_timings.csv";
pub const NATIVE_CSV: &str = "native_timings.csv";
pub const DEFAULT_PORT: u16 = 7878;

#[derive(Debug, Error)]
pub enum UsageError {
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("{0}")]
    Failed(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("metrics: {0}")]
    Metrics(#[from] metrics::MetricsError),
}

fn parse_dims(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("`{s}` is not WIDTHxHEIGHT"))?;
    let p = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("`{v}`: {e}"));
    Ok((p(w)?, p(h)?))
}

fn parse_delay(s: &str) -> Result<(u64, f64), String> {
    let (f, ms) = s.split_once(':').ok_or_else(|| format!("`{s}` is not FRAME:MS"))?;
    let frame = f.parse::<u64>().map_err(|e| format!("`{f}`: {e}"))?;
    let ms = ms.parse::<f64>().map_err(|e| format!("`{ms}`: {e}"))?;
    if !(ms >= 0.0 && ms.is_finite()) {
        return Err(format!("delay {ms} must be >= 0"));
    }
    Ok((frame, ms))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClockArg {
    Wall,
    Virtual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UpsampleArg {
    Nearest,
    Bilinear,
}

#[derive(Debug, Parser)]
#[command(name = "splitfov", version, about = "Foveated split rendering: server, client, simulator and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Serve one client over TCP.
    Server(ServerArgs),
    /// Connect to a server and run a split session.
    Client(ClientArgs),
    /// Render every frame locally.
    Native(NativeArgs),
    /// Run server and client in one process over a simulated link.
    Sim(SimArgs),
    /// Run native, then split, and report the improvement.
    Compare(CompareArgs),
    /// Summarize timing CSVs from earlier runs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SessionArgs {
    /// Stereo frame size, both eyes side by side.
    #[arg(long, value_parser = parse_dims, default_value = "2400x1080")]
    frame: (u32, u32),
    /// Foveal region per eye.
    #[arg(long, value_parser = parse_dims, default_value = "512x360")]
    fovea: (u32, u32),
    /// Peripheral sampling ratio in (0, 1].
    #[arg(long, default_value_t = 0.6)]
    scale: f32,
    #[arg(long, default_value = "pred-deflate")]
    codec: CodecId,
    #[arg(long, default_value = "spheres")]
    scene: SceneId,
    #[arg(long, default_value = "orbit")]
    path: PathId,
    #[arg(long, default_value_t = 1000)]
    frames: u64,
    #[arg(long, value_enum, default_value = "nearest")]
    upsample: UpsampleArg,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Directory for timing CSVs.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Write every displayed frame (see --ppm-every) as PPM into this directory.
    #[arg(long)]
    ppm_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1, requires = "ppm_dir")]
    ppm_every: u64,
    /// Also write the summary as key=value lines.
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClockArgs {
    #[arg(long, value_enum, default_value = "wall")]
    clock: ClockArg,
    /// TOML stage-cost model for the virtual clock.
    #[arg(long)]
    costs: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NetArgs {
    /// One-way link latency.
    #[arg(long)]
    latency_ms: Option<f64>,
    /// Link rate; `inf` for unlimited.
    #[arg(long)]
    bandwidth_mbps: Option<f64>,
}

#[derive(Debug, Args)]
struct ServerArgs {
    #[arg(long, env = "SPLITFOV_LISTEN", default_value_t = format!("0.0.0.0:{DEFAULT_PORT}"))]
    listen: String,
    /// Override the client's codec.
    #[arg(long)]
    codec: Option<CodecId>,
    /// Override the client's frame size (requires --fovea and --scale together).
    #[arg(long, value_parser = parse_dims, requires_all = ["fovea", "scale"])]
    frame: Option<(u32, u32)>,
    #[arg(long, value_parser = parse_dims, requires_all = ["frame", "scale"])]
    fovea: Option<(u32, u32)>,
    #[arg(long, requires_all = ["frame", "fovea"])]
    scale: Option<f32>,
    #[arg(long)]
    scene: Option<SceneId>,
    /// Encode both eyes concurrently.
    #[arg(long)]
    parallel_encode: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ClientArgs {
    #[arg(long, env = "SPLITFOV_SERVER", default_value_t = format!("127.0.0.1:{DEFAULT_PORT}"))]
    connect: String,
    #[command(flatten)]
    session: SessionArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct NativeArgs {
    #[command(flatten)]
    session: SessionArgs,
    #[command(flatten)]
    clock: ClockArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[command(flatten)]
    session: SessionArgs,
    #[command(flatten)]
    net: NetArgs,
    #[command(flatten)]
    clock: ClockArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long)]
    parallel_encode: bool,
    /// Hold back the pose of one frame, as FRAME:MS; repeatable.
    #[arg(long, value_parser = parse_delay)]
    pose_delay: Vec<(u64, f64)>,
    /// Write the event trace as text.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    session: SessionArgs,
    #[command(flatten)]
    net: NetArgs,
    #[command(flatten)]
    clock: ClockArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Run the split arm against a real server instead of the simulator.
    #[arg(long, env = "SPLITFOV_SERVER", conflicts_with_all = ["latency_ms", "bandwidth_mbps", "clock", "costs"])]
    connect: Option<String>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long, default_value = CLIENT_CSV)]
    client_csv: PathBuf,
    #[arg(long)]
    server_csv: Option<PathBuf>,
    /// Fovea size shown in the table header.
    #[arg(long, value_parser = parse_dims, default_value = "512x360")]
    fovea: (u32, u32),
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Display {
    Null,
    Ppm { dir: PathBuf, every: u64 },
}

#[derive(Debug, Clone)]
pub struct Output {
    pub out_dir: PathBuf,
    pub display: Display,
    pub summary_out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum RunConfig {
    Server { listen: String, options: ServerOptions, out_dir: PathBuf },
    Client { connect: String, session: SessionConfig, upsample: Upsample, output: Output },
    Native { session: SessionConfig, upsample: Upsample, clock: ClockMode, output: Output },
    Sim { sim: SimConfig, output: Output, trace_out: Option<PathBuf> },
    Compare { session: SessionConfig, upsample: Upsample, clock: ClockMode, arm: SplitArm, output: Output },
    Report { client_csv: PathBuf, server_csv: Option<PathBuf>, fovea: (u32, u32), summary_out: Option<PathBuf> },
}

impl SessionArgs {
    fn build(&self) -> Result<(SessionConfig, Upsample), UsageError> {
        let spec = PartitionSpec::new(self.frame.0, self.frame.1, self.fovea.0, self.fovea.1, self.scale);
        let cfg = SessionConfig {
            spec,
            codec: self.codec,
            scene: self.scene,
            path: self.path,
            frames: self.frames,
            rig: CameraRig::default(),
        };
        if let Err(v) = spec.validate() {
            return Err(UsageError::Invalid(v.to_string()));
        }
        if self.frames == 0 {
            return Err(UsageError::Invalid("--frames must be at least 1".into()));
        }
        cfg.validate().map_err(|e| UsageError::Invalid(e.to_string()))?;
        let upsample = match self.upsample {
            UpsampleArg::Nearest => Upsample::Nearest,
            UpsampleArg::Bilinear => Upsample::Bilinear,
        };
        Ok((cfg, upsample))
    }
}

impl OutputArgs {
    fn build(&self) -> Output {
        let display = match &self.ppm_dir {
            Some(dir) => Display::Ppm { dir: dir.clone(), every: self.ppm_every.max(1) },
            None => Display::Null,
        };
        Output { out_dir: self.out_dir.clone(), display, summary_out: self.summary_out.clone() }
    }
}

impl ClockArgs {
    fn build(&self) -> Result<ClockMode, UsageError> {
        match (self.clock, &self.costs) {
            (ClockArg::Wall, Some(_)) => Err(UsageError::Invalid("--costs needs --clock virtual".into())),
            (ClockArg::Wall, None) => Ok(ClockMode::Wall),
            (ClockArg::Virtual, None) => Ok(ClockMode::Virtual(CostModel::default())),
            (ClockArg::Virtual, Some(path)) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| UsageError::Invalid(format!("cannot read {}: {e}", path.display())))?;
                CostModel::from_toml(&text)
                    .map(ClockMode::Virtual)
                    .map_err(|e| UsageError::Invalid(format!("bad cost model {}: {e}", path.display())))
            }
        }
    }
}

impl NetArgs {
    fn build(&self) -> Result<NetModel, UsageError> {
        let d = NetModel::default();
        let net = NetModel {
            latency_ms: self.latency_ms.unwrap_or(d.latency_ms),
            bandwidth_mbps: self.bandwidth_mbps.unwrap_or(d.bandwidth_mbps),
        };
        net.validate().map_err(|e| UsageError::Invalid(e.to_string()))?;
        Ok(net)
    }
}

fn resolve(addr: &str) -> Result<SocketAddr, UsageError> {
    addr.to_socket_addrs()
        .map_err(|e| UsageError::Invalid(format!("cannot resolve `{addr}`: {e}")))?
        .next()
        .ok_or_else(|| UsageError::Invalid(format!("`{addr}` resolves to no address")))
}

pub fn parse_cli<I, T>(argv: I) -> Result<RunConfig, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    Ok(match cli.command {
        Command::Server(a) => {
            let spec = match (a.frame, a.fovea, a.scale) {
                (Some(f), Some(v), Some(s)) => {
                    let spec = PartitionSpec::new(f.0, f.1, v.0, v.1, s);
                    spec.validate().map_err(|v| UsageError::Invalid(v.to_string()))?;
                    Some(spec)
                }
                _ => None,
            };
            let options = ServerOptions {
                codec: a.codec,
                spec,
                scene: a.scene,
                rig: CameraRig::default(),
                parallel_encode: a.parallel_encode,
            };
            RunConfig::Server { listen: a.listen, options, out_dir: a.out_dir }
        }
        Command::Client(a) => {
            let (session, upsample) = a.session.build()?;
            RunConfig::Client { connect: a.connect, session, upsample, output: a.output.build() }
        }
        Command::Native(a) => {
            let (session, upsample) = a.session.build()?;
            RunConfig::Native { session, upsample, clock: a.clock.build()?, output: a.output.build() }
        }
        Command::Sim(a) => {
            let (session, upsample) = a.session.build()?;
            let mut sim = SimConfig::new(session, a.net.build()?, a.clock.build()?);
            sim.upsample = upsample;
            sim.server.parallel_encode = a.parallel_encode;
            sim.pose_delays = a.pose_delay.into_iter().collect::<BTreeMap<_, _>>();
            RunConfig::Sim { sim, output: a.output.build(), trace_out: a.trace_out }
        }
        Command::Compare(a) => {
            let (session, upsample) = a.session.build()?;
            let arm = match &a.connect {
                Some(addr) => SplitArm::Connect(resolve(addr)?),
                None => SplitArm::Sim {
                    net: a.net.build()?,
                    server: ServerOptions { rig: session.rig, ..Default::default() },
                },
            };
            RunConfig::Compare { session, upsample, clock: a.clock.build()?, arm, output: a.output.build() }
        }
        Command::Report(a) => RunConfig::Report {
            client_csv: a.client_csv,
            server_csv: a.server_csv,
            fovea: a.fovea,
            summary_out: a.summary_out,
        },
    })
}

fn sink_for(display: &Display) -> Result<Box<dyn DisplaySink>, CliError> {
    Ok(match display {
        Display::Null => Box::new(NullSink),
        Display::Ppm { dir, every } => Box::new(PpmSink::new(dir, *every)?),
    })
}

fn csv_path(dir: &Path, name: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

fn write_summary(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

fn server_lines(records: &[ServerFrameTiming]) -> String {
    if records.is_empty() {
        return "no frames served\n".into();
    }
    let col = |f: fn(&ServerFrameTiming) -> f64| StageStats::of(&records.iter().map(f).collect::<Vec<_>>()).ok();
    let mut s = format!("served {} frames\n", records.len());
    for (name, stats) in [
        ("Draw Time", col(|r| r.draw_ms)),
        ("Encode Time", col(|r| r.encode_ms)),
        ("Send Time", col(|r| r.send_ms)),
    ] {
        if let Some(st) = stats {
            let _ = writeln!(s, "{name:<12} median {:8.2} ms  IQR {:6.2} ms", st.median_ms, st.iqr_ms);
        }
    }
    s
}

fn print_client_summary(
    records: &[ClientFrameRecord],
    server: Option<&[ServerFrameTiming]>,
    fovea: (u32, u32),
    summary_out: Option<&Path>,
) -> Result<(), CliError> {
    if records.is_empty() {
        println!("no frames completed");
        return Ok(());
    }
    let summary = summarize(records, server)?;
    print!("{}", render_table(&summary, fovea));
    if let Some(p) = summary_out {
        write_summary(p, &to_key_values(&summary))?;
    }
    Ok(())
}

/// Executes one configured run, printing summaries to stdout.
pub fn run(cfg: RunConfig) -> Result<(), CliError> {
    match cfg {
        RunConfig::Server { listen, options, out_dir } => {
            eprintln!("listening on {listen}");
            let result = run_server(listen.as_str(), &options, Recorder::disabled(Actor::Server, Lane::Main))?;
            write_csv(csv_path(&out_dir, SERVER_CSV)?, &result.records)?;
            print!("{}", server_lines(&result.records));
            match result.outcome {
                Outcome::Completed => Ok(()),
                Outcome::Disconnected(why) => Err(CliError::Failed(why)),
            }
        }
        RunConfig::Client { connect, session, upsample, output } => {
            let mut sink = sink_for(&output.display)?;
            let path = csv_path(&output.out_dir, CLIENT_CSV)?;
            match run_client(connect.as_str(), session, upsample, Recorder::disabled(Actor::Client, Lane::Main), sink.as_mut()) {
                Ok(run) => {
                    write_csv(path, &run.records)?;
                    print_client_summary(&run.records, None, run.config.spec.fovea_dims(), output.summary_out.as_deref())
                }
                Err(f) => {
                    write_csv(path, &f.records)?;
                    Err(CliError::Failed(f.to_string()))
                }
            }
        }
        RunConfig::Native { session, upsample, clock, output } => {
            let mut sink = sink_for(&output.display)?;
            let records = run_native(
                &session,
                upsample,
                Timeline::new(clock.clock()),
                Recorder::disabled(Actor::Client, Lane::Main),
                sink.as_mut(),
            )?;
            write_csv(csv_path(&output.out_dir, CLIENT_CSV)?, &records)?;
            print_client_summary(&records, None, session.spec.fovea_dims(), output.summary_out.as_deref())
        }
        RunConfig::Sim { sim, output, trace_out } => {
            let mut sink = sink_for(&output.display)?;
            let run = run_sim(&sim, sink.as_mut()).map_err(|e| CliError::Failed(e.to_string()))?;
            write_csv(csv_path(&output.out_dir, CLIENT_CSV)?, &run.client.records)?;
            write_csv(csv_path(&output.out_dir, SERVER_CSV)?, &run.server.records)?;
            if let Some(p) = trace_out {
                let text: String = run.trace.iter().map(|e| format!("{e}\n")).collect();
                write_summary(&p, &text)?;
            }
            print_client_summary(
                &run.client.records,
                Some(&run.server.records),
                run.client.config.spec.fovea_dims(),
                output.summary_out.as_deref(),
            )?;
            let mut violations = check_lockstep(&run.trace, run.client.config.frames);
            violations.extend(check_merge_order(&run.trace));
            println!("trace: {} events, {} ordering violations", run.trace.len(), violations.len());
            if let Some(first) = violations.first() {
                return Err(CliError::Failed(format!("ordering violation: {first}")));
            }
            Ok(())
        }
        RunConfig::Compare { session, upsample, clock, arm, output } => {
            let run = run_compare(&session, &clock, &arm, upsample)?;
            write_csv(csv_path(&output.out_dir, NATIVE_CSV)?, &run.native)?;
            write_csv(csv_path(&output.out_dir, CLIENT_CSV)?, &run.split)?;
            if !run.server.is_empty() {
                write_csv(csv_path(&output.out_dir, SERVER_CSV)?, &run.server)?;
            }
            print!("{}", run.report.render());
            if let Some(p) = output.summary_out {
                let mut text = String::new();
                for (prefix, s) in [("native", &run.report.native), ("split", &run.report.split)] {
                    for line in to_key_values(s).lines() {
                        let _ = writeln!(text, "{prefix}.{line}");
                    }
                }
                let _ = writeln!(text, "improvement_pct={}", run.report.improvement_pct);
                write_summary(&p, &text)?;
            }
            Ok(())
        }
        RunConfig::Report { client_csv, server_csv, fovea, summary_out } => {
            let client: Vec<ClientFrameRecord> = read_csv(&client_csv)?;
            let server: Option<Vec<ServerFrameTiming>> = server_csv.map(read_csv).transpose()?;
            let summary = summarize(&client, server.as_deref())?;
            print!("{}", render_table(&summary, fovea));
            if let Some(p) = summary_out {
                write_summary(&p, &to_key_values(&summary))?;
            }
            Ok(())
        }
    }
}
