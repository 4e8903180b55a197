//! Aggressor-row trackers behind a single event interface.
//!
//! Memory-controller trackers (Graphene, PARA) return a mitigation target
//! from `on_act`; in-DRAM trackers (Mithril, MINT) only mitigate when the
//! engine delivers an RFM.

mod graphene;
mod mint;
mod mithril;
mod para;
mod sizing;

pub use graphene::GrapheneState;
pub use mint::MintState;
pub use mithril::MithrilState;
pub use para::ParaState;
pub use sizing::{graphene_half_threshold, graphene_secure_threshold, size_tracker};

use serde::{Deserialize, Serialize};

use crate::fixed::{Charge, FRAC_BITS};
use crate::rng::SimRng;
use crate::timing::{RowId, Tick};

/// One tracker-visible activation, weighted in activation equivalents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WeightedAct {
    pub row: RowId,
    pub weight: Charge,
    pub time: Tick,
}

impl WeightedAct {
    pub fn unit(row: RowId, time: Tick) -> Self {
        WeightedAct { row, weight: Charge::ONE, time }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackerKind {
    None,
    Graphene,
    Para,
    Mithril,
    Mint,
}

impl TrackerKind {
    pub fn name(self) -> &'static str {
        match self {
            TrackerKind::None => "none",
            TrackerKind::Graphene => "graphene",
            TrackerKind::Para => "para",
            TrackerKind::Mithril => "mithril",
            TrackerKind::Mint => "mint",
        }
    }

    pub fn is_in_dram(self) -> bool {
        matches!(self, TrackerKind::Mithril | TrackerKind::Mint)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackerConfig {
    pub kind: TrackerKind,
    pub entries: usize,
    pub internal_threshold: Charge,
    pub p: f64,
    pub rfmth: u32,
    pub frac_bits: u32,
}

impl TrackerConfig {
    pub fn none() -> Self {
        TrackerConfig {
            kind: TrackerKind::None,
            entries: 0,
            internal_threshold: Charge::ZERO,
            p: 0.0,
            rfmth: 80,
            frac_bits: FRAC_BITS,
        }
    }

    pub fn graphene(entries: usize, internal_threshold: Charge) -> Self {
        TrackerConfig { kind: TrackerKind::Graphene, entries, internal_threshold, ..Self::none() }
    }

    pub fn para(p: f64) -> Self {
        TrackerConfig { kind: TrackerKind::Para, p, ..Self::none() }
    }

    pub fn mithril(entries: usize, rfmth: u32) -> Self {
        TrackerConfig { kind: TrackerKind::Mithril, entries, rfmth, ..Self::none() }
    }

    pub fn mint(rfmth: u32) -> Self {
        TrackerConfig { kind: TrackerKind::Mint, entries: 1, rfmth, ..Self::none() }
    }
}

#[derive(Clone, Debug)]
pub enum Tracker {
    None,
    Graphene(GrapheneState),
    Para(ParaState),
    Mithril(MithrilState),
    Mint(MintState),
}

impl Tracker {
    pub fn from_config(cfg: &TrackerConfig, rng: SimRng) -> Self {
        match cfg.kind {
            TrackerKind::None => Tracker::None,
            TrackerKind::Graphene => {
                Tracker::Graphene(GrapheneState::new(cfg.entries, cfg.internal_threshold, cfg.frac_bits))
            }
            TrackerKind::Para => Tracker::Para(ParaState::new(cfg.p, rng)),
            TrackerKind::Mithril => Tracker::Mithril(MithrilState::new(cfg.entries, cfg.frac_bits)),
            TrackerKind::Mint => Tracker::Mint(MintState::new(cfg.rfmth, cfg.frac_bits, rng)),
        }
    }

    pub fn kind(&self) -> TrackerKind {
        match self {
            Tracker::None => TrackerKind::None,
            Tracker::Graphene(_) => TrackerKind::Graphene,
            Tracker::Para(_) => TrackerKind::Para,
            Tracker::Mithril(_) => TrackerKind::Mithril,
            Tracker::Mint(_) => TrackerKind::Mint,
        }
    }

    /// Feeds one event; returns a target only for memory-controller trackers.
    pub fn on_act(&mut self, ev: &WeightedAct) -> Option<RowId> {
        match self {
            Tracker::None => None,
            Tracker::Graphene(g) => g.on_act(ev),
            Tracker::Para(p) => p.on_act(ev),
            Tracker::Mithril(m) => {
                m.on_act(ev);
                None
            }
            Tracker::Mint(m) => {
                m.on_act(ev);
                None
            }
        }
    }

    pub fn on_rfm(&mut self) -> Option<RowId> {
        match self {
            Tracker::Mithril(m) => m.on_rfm(),
            Tracker::Mint(m) => m.on_rfm(),
            _ => None,
        }
    }

    /// Periodic counter reset at the start of each refresh window.
    pub fn reset_epoch(&mut self) {
        if let Tracker::Graphene(g) = self {
            g.reset_epoch();
        }
    }
}

/// Tie-break helper: smaller key first, then lower row id.
pub(crate) fn min_by_count(entries: &[(RowId, Charge)]) -> Option<usize> {
    entries.iter().enumerate().min_by(|(_, a), (_, b)| a.1.cmp(&b.1).then(a.0.cmp(&b.0))).map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinism_across_trackers() {
        let events: Vec<WeightedAct> = (0..500)
            .map(|i| WeightedAct {
                row: (i * 7 % 13) as RowId,
                weight: Charge::from_fixed7(128 + (i % 5) * 40),
                time: i,
            })
            .collect();
        let cfgs = [
            TrackerConfig::graphene(4, Charge::from_int(6)),
            TrackerConfig::para(0.05),
            TrackerConfig::mithril(4, 80),
            TrackerConfig::mint(16),
        ];
        for cfg in &cfgs {
            let run = || {
                let mut t = Tracker::from_config(cfg, SimRng::new(99));
                let mut out = Vec::new();
                for (i, ev) in events.iter().enumerate() {
                    out.push(t.on_act(ev));
                    if i % 16 == 15 {
                        out.push(t.on_rfm());
                    }
                }
                out
            };
            assert_eq!(run(), run(), "{:?}", cfg.kind);
        }
    }
}
