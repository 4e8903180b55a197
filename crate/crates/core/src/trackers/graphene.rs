//! Weighted Misra-Gries counter table with a spillover counter.

use super::{min_by_count, WeightedAct};
use crate::fixed::Charge;
use crate::timing::RowId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrapheneState {
    entries: Vec<(RowId, Charge)>,
    capacity: usize,
    spillover: Charge,
    threshold: Charge,
    frac_bits: u32,
}

impl GrapheneState {
    pub fn new(capacity: usize, threshold: Charge, frac_bits: u32) -> Self {
        GrapheneState {
            entries: Vec::with_capacity(capacity),
            capacity: capacity.max(1),
            spillover: Charge::ZERO,
            threshold,
            frac_bits,
        }
    }

    pub fn threshold(&self) -> Charge {
        self.threshold
    }

    pub fn spillover(&self) -> Charge {
        self.spillover
    }

    /// Counter for `row`, or `None` if it is not tracked.
    pub fn count(&self, row: RowId) -> Option<Charge> {
        self.entries.iter().find(|e| e.0 == row).map(|e| e.1)
    }

    /// Upper bound on the weight `row` has received since its last reset.
    pub fn estimate(&self, row: RowId) -> Charge {
        self.count(row).unwrap_or(self.spillover)
    }

    pub fn on_act(&mut self, ev: &WeightedAct) -> Option<RowId> {
        let w = ev.weight.truncate_frac_bits(self.frac_bits);
        let idx = if let Some(i) = self.entries.iter().position(|e| e.0 == ev.row) {
            self.entries[i].1 += w;
            i
        } else if self.entries.len() < self.capacity {
            self.entries.push((ev.row, self.spillover + w));
            self.entries.len() - 1
        } else {
            let i = min_by_count(&self.entries).expect("table is non-empty");
            let gap = self.entries[i].1.saturating_sub(self.spillover);
            if w <= gap {
                self.spillover += w;
                return None;
            }
            let old = self.spillover;
            self.spillover = self.spillover.max(self.entries[i].1);
            self.entries[i] = (ev.row, old + w);
            i
        };
        if self.threshold > Charge::ZERO && self.entries[idx].1 >= self.threshold {
            self.entries[idx].1 = Charge::ZERO;
            Some(ev.row)
        } else {
            None
        }
    }

    pub fn reset_epoch(&mut self) {
        self.entries.clear();
        self.spillover = Charge::ZERO;
    }
}
