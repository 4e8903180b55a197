//! Single-entry tracker that samples one activation slot per RFM interval.

use super::WeightedAct;
use crate::fixed::{Charge, FRAC_BITS};
use crate::rng::SimRng;
use crate::timing::RowId;

#[derive(Clone, Debug)]
pub struct MintState {
    san: Charge,
    can: Charge,
    sar: Option<RowId>,
    rfmth: u32,
    frac_bits: u32,
    rng: SimRng,
}

impl MintState {
    pub fn new(rfmth: u32, frac_bits: u32, rng: SimRng) -> Self {
        let mut m = MintState { san: Charge::ZERO, can: Charge::ZERO, sar: None, rfmth, frac_bits, rng };
        m.redraw();
        m
    }

    /// Fixed selection point, for enumerating every possible draw in tests.
    pub fn with_selection(rfmth: u32, frac_bits: u32, san: Charge) -> Self {
        MintState { san, can: Charge::ZERO, sar: None, rfmth, frac_bits, rng: SimRng::new(0) }
    }

    /// Number of distinct selection points per interval.
    pub fn slots(rfmth: u32) -> u64 {
        rfmth as u64 * (1 << FRAC_BITS)
    }

    fn redraw(&mut self) {
        let k = 1 + self.rng.below(Self::slots(self.rfmth));
        self.san = Charge::from_fixed7(k);
    }

    pub fn selected(&self) -> Option<RowId> {
        self.sar
    }

    pub fn on_act(&mut self, ev: &WeightedAct) {
        let w = ev.weight.truncate_frac_bits(self.frac_bits);
        let before = self.can;
        self.can += w;
        if before < self.san && self.san <= self.can {
            self.sar = Some(ev.row);
        }
    }

    pub fn on_rfm(&mut self) -> Option<RowId> {
        let out = self.sar.take();
        self.can = Charge::ZERO;
        self.redraw();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_proportional_to_weight() {
        let rfmth = 4;
        let weights = [(1u32, 128u64), (2, 64), (3, 192), (4, 128)];
        let mut hits = [0u64; 5];
        for k in 1..=MintState::slots(rfmth) {
            let mut m = MintState::with_selection(rfmth, FRAC_BITS, Charge::from_fixed7(k));
            for &(row, w7) in &weights {
                m.on_act(&WeightedAct { row, weight: Charge::from_fixed7(w7), time: 0 });
            }
            if let Some(r) = m.on_rfm() {
                hits[r as usize] += 1;
            }
        }
        for &(row, w7) in &weights {
            assert_eq!(hits[row as usize], w7, "row {row}");
        }
    }

    #[test]
    fn underfilled_interval_may_select_nothing() {
        let mut m = MintState::with_selection(4, FRAC_BITS, Charge::from_int(4));
        m.on_act(&WeightedAct::unit(1, 0));
        assert_eq!(m.on_rfm(), None);
    }
}
