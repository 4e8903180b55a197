//! Space-Saving counter table drained one row per RFM.

use super::{min_by_count, WeightedAct};
use crate::fixed::Charge;
use crate::timing::RowId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MithrilState {
    entries: Vec<(RowId, Charge)>,
    capacity: usize,
    frac_bits: u32,
}

impl MithrilState {
    pub fn new(capacity: usize, frac_bits: u32) -> Self {
        MithrilState { entries: Vec::with_capacity(capacity), capacity: capacity.max(1), frac_bits }
    }

    pub fn count(&self, row: RowId) -> Option<Charge> {
        self.entries.iter().find(|e| e.0 == row).map(|e| e.1)
    }

    pub fn min_count(&self) -> Charge {
        if self.entries.len() < self.capacity {
            return Charge::ZERO;
        }
        self.entries.iter().map(|e| e.1).min().unwrap_or(Charge::ZERO)
    }

    /// Upper bound on the weight seen by `row` since its last mitigation.
    pub fn estimate(&self, row: RowId) -> Charge {
        self.count(row).unwrap_or_else(|| self.min_count())
    }

    pub fn on_act(&mut self, ev: &WeightedAct) {
        let w = ev.weight.truncate_frac_bits(self.frac_bits);
        if let Some(e) = self.entries.iter_mut().find(|e| e.0 == ev.row) {
            e.1 += w;
        } else if self.entries.len() < self.capacity {
            self.entries.push((ev.row, w));
        } else {
            let i = min_by_count(&self.entries).expect("table is non-empty");
            let base = self.entries[i].1;
            self.entries[i] = (ev.row, base + w);
        }
    }

    /// Mitigates the highest counter and drops it to the table minimum.
    pub fn on_rfm(&mut self) -> Option<RowId> {
        let (i, _) = self.entries.iter().enumerate().max_by(|(_, a), (_, b)| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))?;
        let row = self.entries[i].0;
        let floor = self.min_count();
        self.entries[i].1 = floor;
        Some(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::FRAC_BITS;
    use proptest::prelude::*;
    use std::collections::HashMap;

    #[test]
    fn rfm_picks_heaviest_lowest_id_on_tie() {
        let mut m = MithrilState::new(3, FRAC_BITS);
        for row in [5, 2, 5, 2, 7] {
            m.on_act(&WeightedAct::unit(row, 0));
        }
        assert_eq!(m.on_rfm(), Some(2));
        assert_eq!(m.count(2), Some(Charge::ONE));
        assert_eq!(m.on_rfm(), Some(5));
    }

    proptest! {
        #[test]
        fn counts_overestimate(
            cap in 1usize..=6,
            events in prop::collection::vec((0u32..10, 64u64..=300, any::<bool>()), 1..300),
        ) {
            let mut m = MithrilState::new(cap, FRAC_BITS);
            let mut truth: HashMap<RowId, u64> = HashMap::new();
            for (row, w7, rfm) in events {
                m.on_act(&WeightedAct { row, weight: Charge::from_fixed7(w7), time: 0 });
                *truth.entry(row).or_default() += w7;
                if rfm {
                    if let Some(r) = m.on_rfm() {
                        truth.insert(r, 0);
                    }
                }
                for (&r, &tw) in &truth {
                    prop_assert!(Charge::from_fixed7(tw) <= m.estimate(r));
                }
            }
        }
    }
}
