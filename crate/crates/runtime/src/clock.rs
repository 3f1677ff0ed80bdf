//! Wall-clock and virtual-clock timelines.
//!
//! A [`Timeline`] is the clock of one activity (the server loop, the client
//! main loop, the client's render or receive thread). On the wall clock every
//! stage takes as long as it really takes. On the virtual clock stage
//! durations come from a [`CostModel`] and message arrival times from the
//! simulated link, which makes runs exactly reproducible.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    ServerDraw,
    Encode,
    Send,
    ClientDraw,
    Decode,
    Merge,
    Display,
    Pose,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::ServerDraw => "server_draw",
            Stage::Encode => "encode",
            Stage::Send => "send",
            Stage::ClientDraw => "client_draw",
            Stage::Decode => "decode",
            Stage::Merge => "merge",
            Stage::Display => "display",
            Stage::Pose => "pose",
        }
    }
}

/// Duration of a stage: `fixed_ms + per_unit_ms * units`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct StageCost {
    pub fixed_ms: f64,
    pub per_unit_ms: f64,
}

impl StageCost {
    pub const ZERO: StageCost = StageCost { fixed_ms: 0.0, per_unit_ms: 0.0 };

    pub fn fixed(ms: f64) -> Self {
        StageCost { fixed_ms: ms, per_unit_ms: 0.0 }
    }

    pub fn per_unit(ms: f64) -> Self {
        StageCost { fixed_ms: 0.0, per_unit_ms: ms }
    }
}

/// Virtual stage durations.
///
/// Units: rays for the draw stages, pixels for encode and decode, full-frame
/// pixels for merge, and one per call for display and pose. Sending has no
/// cost of its own; transfer time comes from the network model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    pub server_draw: StageCost,
    pub encode: StageCost,
    pub client_draw: StageCost,
    pub decode: StageCost,
    pub merge: StageCost,
    pub display: StageCost,
    pub pose: StageCost,
}

impl Default for CostModel {
    /// Placeholder rates loosely shaped like a desktop server and a phone client.
    fn default() -> Self {
        CostModel {
            server_draw: StageCost::per_unit(2.0e-5),
            encode: StageCost::per_unit(4.0e-5),
            client_draw: StageCost::per_unit(1.0e-4),
            decode: StageCost::per_unit(5.0e-5),
            merge: StageCost::per_unit(2.0e-7),
            display: StageCost::ZERO,
            pose: StageCost::fixed(0.05),
        }
    }
}

impl CostModel {
    pub fn zero() -> Self {
        CostModel {
            server_draw: StageCost::ZERO,
            encode: StageCost::ZERO,
            client_draw: StageCost::ZERO,
            decode: StageCost::ZERO,
            merge: StageCost::ZERO,
            display: StageCost::ZERO,
            pose: StageCost::ZERO,
        }
    }

    pub fn stage(&self, stage: Stage) -> StageCost {
        match stage {
            Stage::ServerDraw => self.server_draw,
            Stage::Encode => self.encode,
            Stage::Send => StageCost::ZERO,
            Stage::ClientDraw => self.client_draw,
            Stage::Decode => self.decode,
            Stage::Merge => self.merge,
            Stage::Display => self.display,
            Stage::Pose => self.pose,
        }
    }

    pub fn cost(&self, stage: Stage, units: u64) -> f64 {
        let c = self.stage(stage);
        c.fixed_ms + c.per_unit_ms * units as f64
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

#[derive(Debug, Clone)]
pub enum Clock {
    Wall(Instant),
    Virtual(Arc<CostModel>),
}

impl Clock {
    pub fn wall() -> Self {
        Clock::Wall(Instant::now())
    }

    pub fn virtual_clock(costs: CostModel) -> Self {
        Clock::Virtual(Arc::new(costs))
    }

    pub fn is_virtual(&self) -> bool {
        matches!(self, Clock::Virtual(_))
    }
}

/// Begin and end of one stage, in milliseconds on the owning clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub begin: f64,
    pub end: f64,
}

impl Span {
    pub fn ms(&self) -> f64 {
        (self.end - self.begin).max(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct Timeline {
    clock: Clock,
    local_ms: f64,
}

impl Timeline {
    pub fn new(clock: Clock) -> Self {
        Timeline { clock, local_ms: 0.0 }
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    pub fn now(&self) -> f64 {
        match &self.clock {
            Clock::Wall(epoch) => epoch.elapsed().as_secs_f64() * 1e3,
            Clock::Virtual(_) => self.local_ms,
        }
    }

    /// Runs `f` as `stage` over `units` of work.
    pub fn run<T>(&mut self, stage: Stage, units: u64, f: impl FnOnce() -> T) -> (T, Span) {
        let begin = self.now();
        let out = f();
        self.charge(stage, units);
        (out, Span { begin, end: self.now() })
    }

    /// Advances the virtual clock by the modeled cost; no-op on the wall clock.
    pub fn charge(&mut self, stage: Stage, units: u64) {
        if let Clock::Virtual(costs) = &self.clock {
            self.local_ms += costs.cost(stage, units);
        }
    }

    /// Blocks the virtual clock until `t_ms`. Wall-clock waiting happens in the
    /// link itself, so this is a no-op there.
    pub fn wait_until(&mut self, t_ms: f64) {
        if self.clock.is_virtual() && t_ms > self.local_ms {
            self.local_ms = t_ms;
        }
    }

    /// Resumes after a concurrent activity forked from this timeline finished.
    pub fn join(&mut self, other: &Timeline) {
        self.wait_until(other.local_ms);
    }
}
