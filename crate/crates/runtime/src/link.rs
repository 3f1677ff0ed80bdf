//! Message transports: a TCP stream, and an in-process link with modeled
//! latency and bandwidth.

use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter, Write};
use std::net::TcpStream;
use std::sync::mpsc::{self, Receiver, Sender};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use splitfov_core::wire::{self, MessageReader};
use splitfov_core::Message;

use crate::clock::Clock;
use crate::error::SessionError;

/// A received message with its arrival times on the receiver's clock.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub msg: Message,
    pub first_byte_ms: f64,
    pub last_byte_ms: f64,
    pub wire_bytes: usize,
}

pub trait MsgTx: Send {
    /// Sends `msg`, starting no earlier than `at_ms`. Returns the time the last
    /// byte left the sender.
    fn send(&mut self, msg: &Message, at_ms: f64) -> Result<f64, SessionError>;
}

pub trait MsgRx: Send {
    /// Blocks for the next message; `None` when the peer closed cleanly.
    fn recv(&mut self, at_ms: f64) -> Result<Option<Delivery>, SessionError>;
}

fn wall_ms(epoch: Instant) -> f64 {
    epoch.elapsed().as_secs_f64() * 1e3
}

fn sleep_until(epoch: Instant, t_ms: f64) {
    let target = epoch + Duration::from_secs_f64(t_ms.max(0.0) / 1e3);
    let now = Instant::now();
    if target > now {
        std::thread::sleep(target - now);
    }
}

pub struct TcpTx {
    out: BufWriter<TcpStream>,
    epoch: Instant,
}

pub struct TcpRx {
    input: BufReader<TcpStream>,
    reader: MessageReader,
    epoch: Instant,
}

/// Splits a connected stream into its two halves; timestamps are relative to `epoch`.
pub fn tcp_link(stream: TcpStream, epoch: Instant) -> Result<(TcpTx, TcpRx), SessionError> {
    stream.set_nodelay(true)?;
    let read_half = stream.try_clone()?;
    Ok((
        TcpTx { out: BufWriter::with_capacity(1 << 16, stream), epoch },
        TcpRx { input: BufReader::with_capacity(1 << 16, read_half), reader: MessageReader::new(), epoch },
    ))
}

impl MsgTx for TcpTx {
    fn send(&mut self, msg: &Message, _at_ms: f64) -> Result<f64, SessionError> {
        wire::write_to(&mut self.out, msg)?;
        self.out.flush()?;
        Ok(wall_ms(self.epoch))
    }
}

impl MsgRx for TcpRx {
    fn recv(&mut self, _at_ms: f64) -> Result<Option<Delivery>, SessionError> {
        let epoch = self.epoch;
        let timed = self.reader.read_timed(&mut self.input, || wall_ms(epoch))?;
        Ok(timed.map(|t| Delivery {
            msg: t.msg,
            first_byte_ms: t.first_byte_ms,
            last_byte_ms: t.last_byte_ms,
            wire_bytes: t.wire_bytes,
        }))
    }
}

/// One-way link characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetModel {
    pub latency_ms: f64,
    /// Infinite bandwidth makes transfers instantaneous.
    pub bandwidth_mbps: f64,
}

impl Default for NetModel {
    fn default() -> Self {
        NetModel { latency_ms: 2.0, bandwidth_mbps: 500.0 }
    }
}

impl NetModel {
    pub fn ideal() -> Self {
        NetModel { latency_ms: 0.0, bandwidth_mbps: f64::INFINITY }
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        if !(self.latency_ms >= 0.0 && self.latency_ms.is_finite()) {
            return Err(SessionError::Config(format!("latency {} ms must be finite and >= 0", self.latency_ms)));
        }
        if !(self.bandwidth_mbps > 0.0) {
            return Err(SessionError::Config(format!("bandwidth {} Mbps must be > 0", self.bandwidth_mbps)));
        }
        Ok(())
    }

    pub fn transfer_ms(&self, bytes: usize) -> f64 {
        if self.bandwidth_mbps.is_infinite() {
            0.0
        } else {
            bytes as f64 * 8.0 / (self.bandwidth_mbps * 1e3)
        }
    }
}

struct Packet {
    bytes: Vec<u8>,
    first_byte_ms: f64,
    delivered_ms: f64,
}

/// Sending half of a simulated link.
///
/// A message starts transmitting when both the sender and the link are free,
/// occupies the link for its transfer time, and arrives `latency_ms` later.
pub struct SimTx {
    net: NetModel,
    clock: Clock,
    link_free_ms: f64,
    pose_delays: BTreeMap<u64, f64>,
    chan: Sender<Packet>,
}

pub struct SimRx {
    clock: Clock,
    reader: MessageReader,
    chan: Receiver<Packet>,
}

pub fn sim_link(net: NetModel, clock: Clock) -> (SimTx, SimRx) {
    let (tx, rx) = mpsc::channel();
    (
        SimTx { net, clock: clock.clone(), link_free_ms: 0.0, pose_delays: BTreeMap::new(), chan: tx },
        SimRx { clock, reader: MessageReader::new(), chan: rx },
    )
}

impl SimTx {
    /// Holds back the pose for the given frames by extra milliseconds.
    pub fn with_pose_delays(mut self, delays: BTreeMap<u64, f64>) -> Self {
        self.pose_delays = delays;
        self
    }
}

impl MsgTx for SimTx {
    fn send(&mut self, msg: &Message, at_ms: f64) -> Result<f64, SessionError> {
        let bytes = wire::write_msg(msg)?;
        let now = match &self.clock {
            Clock::Wall(epoch) => wall_ms(*epoch),
            Clock::Virtual(_) => at_ms,
        };
        let start = now.max(self.link_free_ms);
        let end = start + self.net.transfer_ms(bytes.len());
        self.link_free_ms = end;
        let extra = match msg {
            Message::Pose(p) => self.pose_delays.get(&p.frame_id).copied().unwrap_or(0.0),
            _ => 0.0,
        };
        let packet =
            Packet { bytes, first_byte_ms: start + self.net.latency_ms + extra, delivered_ms: end + self.net.latency_ms + extra };
        self.chan.send(packet).map_err(|_| SessionError::Disconnected("link receiver dropped".into()))?;
        if let Clock::Wall(epoch) = &self.clock {
            sleep_until(*epoch, end);
        }
        Ok(end)
    }
}

impl MsgRx for SimRx {
    fn recv(&mut self, at_ms: f64) -> Result<Option<Delivery>, SessionError> {
        let Ok(packet) = self.chan.recv() else { return Ok(None) };
        let (first, last) = match &self.clock {
            Clock::Wall(epoch) => {
                let arrived = wall_ms(*epoch);
                sleep_until(*epoch, packet.delivered_ms);
                (arrived.max(packet.first_byte_ms), wall_ms(*epoch).max(packet.delivered_ms))
            }
            Clock::Virtual(_) => (at_ms.max(packet.first_byte_ms), at_ms.max(packet.delivered_ms)),
        };
        let msg = self
            .reader
            .read(&mut &packet.bytes[..])?
            .ok_or_else(|| SessionError::Protocol("empty packet".into()))?;
        Ok(Some(Delivery { msg, first_byte_ms: first, last_byte_ms: last, wire_bytes: packet.bytes.len() }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::CostModel;
    use splitfov_core::wire::EndMsg;

    #[test]
    fn virtual_link_models_latency_and_bandwidth() {
        // 1 Mbps: 13 bytes take 0.104 ms.
        let net = NetModel { latency_ms: 5.0, bandwidth_mbps: 1.0 };
        let (mut tx, mut rx) = sim_link(net, Clock::virtual_clock(CostModel::zero()));
        let msg = Message::End(EndMsg { frame_id: 3 });
        let end = tx.send(&msg, 10.0).unwrap();
        assert!((end - 10.104).abs() < 1e-9);
        // Link busy: second message queues behind the first.
        let end2 = tx.send(&msg, 10.0).unwrap();
        assert!((end2 - 10.208).abs() < 1e-9);
        let d = rx.recv(0.0).unwrap().unwrap();
        assert_eq!(d.msg, msg);
        assert!((d.first_byte_ms - 15.0).abs() < 1e-9);
        assert!((d.last_byte_ms - 15.104).abs() < 1e-9);
        // A receiver that is already later observes its own time.
        let d = rx.recv(100.0).unwrap().unwrap();
        assert_eq!((d.first_byte_ms, d.last_byte_ms), (100.0, 100.0));
        drop(tx);
        assert!(rx.recv(0.0).unwrap().is_none());
    }

    #[test]
    fn ideal_net_is_instant() {
        let net = NetModel::ideal();
        assert_eq!(net.transfer_ms(1 << 30), 0.0);
        assert!(net.validate().is_ok());
        assert!(NetModel { latency_ms: -1.0, bandwidth_mbps: 1.0 }.validate().is_err());
        assert!(NetModel { latency_ms: 0.0, bandwidth_mbps: 0.0 }.validate().is_err());
    }
}
