//! Command-level DRAM bank simulator for Rowhammer and Row-Press studies.
//!
//! A single bank is driven by a timestamped command timeline. A charge
//! oracle accumulates relative charge loss on victim rows under a linear
//! charge-loss model, while one of four Row-Press policies turns the
//! timeline into weighted activation events for one of four aggressor
//! trackers. The engine wires these together and reports flips and
//! mitigation cost; `analysis` holds the adversarial search and the
//! closed-form models used to cross-check the simulator.

pub mod analysis;
pub mod attacks;
pub mod charge;
pub mod config;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod fixed;
pub mod mitigations;
pub mod report;
pub mod repro;
pub mod rng;
pub mod timing;
pub mod trackers;

pub use charge::{BlastConfig, ChargeModel, VictimChargeState};
pub use engine::{run, SimReport, SimSetup};
pub use error::{Error, Result};
pub use fixed::{Alpha, Charge};
pub use mitigations::{PolicyConfig, PolicyKind, WeightedAct};
pub use timing::{Command, CommandKind, CommandTimeline, RowId, Tick, TimingParams};
pub use trackers::{Tracker, TrackerConfig, TrackerKind};
