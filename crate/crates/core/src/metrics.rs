//! Per-frame timing records and the evaluation arithmetic over them.
//!
//! Quantiles use linear interpolation between order statistics: for sorted
//! samples `x[0..n]`, `q(p) = x[k] + (h - k) * (x[k + 1] - x[k])` with
//! `h = (n - 1) * p` and `k = floor(h)`. The median is `q(0.5)` and the IQR is
//! `q(0.75) - q(0.25)`.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{0} requires at least one sample")]
    Empty(&'static str),
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Server-side stage timings for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ServerFrameTiming {
    pub frame_id: u64,
    pub draw_ms: f64,
    pub encode_ms: f64,
    pub send_ms: f64,
    pub bytes_sent: u64,
}

/// Client-side stage timings for one frame.
///
/// `network_ms` runs from the first received byte of the frame's first
/// subframe to the last byte of its second. `total_ms` is the full frame
/// cycle: from the end of the previous pose send to the end of this frame's.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClientFrameRecord {
    pub frame_id: u64,
    pub draw_ms: f64,
    pub network_ms: f64,
    pub decode_ms: f64,
    pub merge_ms: f64,
    pub pose_ms: f64,
    pub total_ms: f64,
    pub bytes_received: u64,
}

pub const SERVER_CSV_HEADER: &str = "frame_id,draw_ms,encode_ms,send_ms,bytes_sent";
pub const CLIENT_CSV_HEADER: &str = "frame_id,draw_ms,network_ms,decode_ms,merge_ms,pose_ms,total_ms,bytes_received";

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn quantile_sorted(xs: &[f64], p: f64) -> f64 {
    let h = (xs.len() - 1) as f64 * p;
    let k = h.floor() as usize;
    if k + 1 >= xs.len() {
        return xs[xs.len() - 1];
    }
    xs[k] + (h - k as f64) * (xs[k + 1] - xs[k])
}

/// Linear-interpolation quantile at `p` in [0, 1].
pub fn quantile(samples: &[f64], p: f64) -> Result<f64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::Empty("quantile"));
    }
    Ok(quantile_sorted(&sorted(samples), p.clamp(0.0, 1.0)))
}

pub fn median(samples: &[f64]) -> Result<f64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::Empty("median"));
    }
    quantile(samples, 0.5)
}

pub fn iqr(samples: &[f64]) -> Result<f64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::Empty("iqr"));
    }
    let xs = sorted(samples);
    Ok(quantile_sorted(&xs, 0.75) - quantile_sorted(&xs, 0.25))
}

/// Megabits per second for `payload_bytes` transferred in `network_seconds`.
pub fn mbps(payload_bytes: u64, network_seconds: f64) -> Result<f64, MetricsError> {
    if !(network_seconds > 0.0) {
        return Err(MetricsError::NonPositive { what: "network duration", value: network_seconds });
    }
    Ok(payload_bytes as f64 * 8.0 / network_seconds / 1e6)
}

/// Latency improvement of the split configuration over native, in percent:
/// `(native - split) / split * 100`.
pub fn improvement_pct(native_ms: f64, split_ms: f64) -> Result<f64, MetricsError> {
    for (what, value) in [("native time", native_ms), ("split time", split_ms)] {
        if !(value > 0.0) {
            return Err(MetricsError::NonPositive { what, value });
        }
    }
    Ok((native_ms - split_ms) / split_ms * 100.0)
}

/// Frames per second for a median frame time, rounded for display.
pub fn fps(median_frame_ms: f64) -> u32 {
    if median_frame_ms > 0.0 {
        (1000.0 / median_frame_ms).round() as u32
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StageStats {
    pub median_ms: f64,
    pub iqr_ms: f64,
}

impl StageStats {
    pub fn of(samples: &[f64]) -> Result<Self, MetricsError> {
        Ok(StageStats { median_ms: median(samples)?, iqr_ms: iqr(samples)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServerSummary {
    pub frame_count: usize,
    pub draw: StageStats,
    pub encode: StageStats,
    pub send: StageStats,
    pub median_bytes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub frame_count: usize,
    pub total: StageStats,
    pub draw: StageStats,
    pub network: StageStats,
    pub decode: StageStats,
    pub merge: StageStats,
    pub pose: StageStats,
    pub median_bytes: f64,
    /// Median of per-frame rates; `None` when no frame had a positive network time.
    pub mbps: Option<f64>,
    pub server: Option<ServerSummary>,
}

impl Summary {
    pub fn median_fps(&self) -> u32 {
        fps(self.total.median_ms)
    }
}

pub fn summarize(client: &[ClientFrameRecord], server: Option<&[ServerFrameTiming]>) -> Result<Summary, MetricsError> {
    if client.is_empty() {
        return Err(MetricsError::Empty("summary"));
    }
    let col = |f: fn(&ClientFrameRecord) -> f64| client.iter().map(f).collect::<Vec<_>>();
    let rates: Vec<f64> = client
        .iter()
        .filter(|r| r.network_ms > 0.0)
        .filter_map(|r| mbps(r.bytes_received, r.network_ms / 1000.0).ok())
        .collect();
    let server = match server {
        Some(s) if !s.is_empty() => {
            let col = |f: fn(&ServerFrameTiming) -> f64| s.iter().map(f).collect::<Vec<_>>();
            Some(ServerSummary {
                frame_count: s.len(),
                draw: StageStats::of(&col(|r| r.draw_ms))?,
                encode: StageStats::of(&col(|r| r.encode_ms))?,
                send: StageStats::of(&col(|r| r.send_ms))?,
                median_bytes: median(&col(|r| r.bytes_sent as f64))?,
            })
        }
        Some(_) => return Err(MetricsError::Empty("server summary")),
        None => None,
    };
    Ok(Summary {
        frame_count: client.len(),
        total: StageStats::of(&col(|r| r.total_ms))?,
        draw: StageStats::of(&col(|r| r.draw_ms))?,
        network: StageStats::of(&col(|r| r.network_ms))?,
        decode: StageStats::of(&col(|r| r.decode_ms))?,
        merge: StageStats::of(&col(|r| r.merge_ms))?,
        pose: StageStats::of(&col(|r| r.pose_ms))?,
        median_bytes: median(&col(|r| r.bytes_received as f64))?,
        mbps: if rates.is_empty() { None } else { Some(median(&rates)?) },
        server,
    })
}

/// Text tables shaped like the client and server profiling tables.
pub fn render_table(summary: &Summary, fovea_dims: (u32, u32)) -> String {
    let dims = format!("{}x{}", fovea_dims.0, fovea_dims.1);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "End-to-end: median {:.2} ms/frame ({} fps, IQR = {:.3}) over {} frames",
        summary.total.median_ms,
        summary.median_fps(),
        summary.total.iqr_ms,
        summary.frame_count
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "Client profile (median ms; Mbps = megabits per second)");
    let mbps = summary.mbps.map_or_else(|| "-".to_string(), |m| format!("{m:.2}"));
    table(
        &mut out,
        &["Server Dims", "Draw", "Network", "Decode", "Merge", "Pose", "Mbps"],
        &[
            dims.clone(),
            format!("{:.2}", summary.draw.median_ms),
            format!("{:.2}", summary.network.median_ms),
            format!("{:.2}", summary.decode.median_ms),
            format!("{:.2}", summary.merge.median_ms),
            format!("{:.2}", summary.pose.median_ms),
            mbps,
        ],
    );
    if let Some(s) = &summary.server {
        let _ = writeln!(out);
        let _ = writeln!(out, "Server profile (median ms)");
        table(
            &mut out,
            &["Server Dims", "Draw Time", "Encode Time", "Send Time"],
            &[
                dims,
                format!("{:.2}", s.draw.median_ms),
                format!("{:.2}", s.encode.median_ms),
                format!("{:.2}", s.send.median_ms),
            ],
        );
    }
    out
}

fn table(out: &mut String, header: &[&str], row: &[String]) {
    let widths: Vec<usize> = header.iter().zip(row).map(|(h, v)| h.len().max(v.len())).collect();
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let _ = writeln!(out, "{}", line(header.to_vec()));
    let _ = writeln!(out, "{}", line(row.iter().map(String::as_str).collect()));
}

/// `key=value` lines for machine consumption.
pub fn to_key_values(summary: &Summary) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k}={v}");
    };
    kv("frames", summary.frame_count.to_string());
    kv("fps", summary.median_fps().to_string());
    for (name, s) in [
        ("total", summary.total),
        ("draw", summary.draw),
        ("network", summary.network),
        ("decode", summary.decode),
        ("merge", summary.merge),
        ("pose", summary.pose),
    ] {
        kv(&format!("client.{name}.median_ms"), s.median_ms.to_string());
        kv(&format!("client.{name}.iqr_ms"), s.iqr_ms.to_string());
    }
    kv("client.median_bytes", summary.median_bytes.to_string());
    if let Some(m) = summary.mbps {
        kv("client.mbps", m.to_string());
    }
    if let Some(s) = &summary.server {
        for (name, st) in [("draw", s.draw), ("encode", s.encode), ("send", s.send)] {
            kv(&format!("server.{name}.median_ms"), st.median_ms.to_string());
            kv(&format!("server.{name}.iqr_ms"), st.iqr_ms.to_string());
        }
        kv("server.median_bytes", s.median_bytes.to_string());
    }
    out
}

pub fn write_csv_to<W: io::Write, T: Serialize>(out: W, records: &[T]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<(), MetricsError> {
    let file = std::fs::File::create(path)?;
    write_csv_to(io::BufWriter::new(file), records)
}

pub fn read_csv_from<R: io::Read, T: DeserializeOwned>(input: R) -> Result<Vec<T>, MetricsError> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|rec| rec.map_err(MetricsError::from)).collect()
}

pub fn read_csv<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, MetricsError> {
    read_csv_from(std::fs::File::open(path)?)
}
