//! Probabilistic adjacent-row activation.

use super::WeightedAct;
use crate::rng::SimRng;
use crate::timing::RowId;

#[derive(Clone, Debug)]
pub struct ParaState {
    p: f64,
    rng: SimRng,
}

impl ParaState {
    pub fn new(p: f64, rng: SimRng) -> Self {
        ParaState { p, rng }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Selection probability for an event of the given weight.
    pub fn select_probability(&self, ev: &WeightedAct) -> f64 {
        (self.p * ev.weight.to_f64()).min(1.0)
    }

    /// One uniform draw per event.
    pub fn on_act(&mut self, ev: &WeightedAct) -> Option<RowId> {
        let q = self.select_probability(ev);
        let u = self.rng.unit_f64();
        (u < q).then_some(ev.row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::Charge;

    #[test]
    fn selection_rate_scales_with_weight() {
        let n = 200_000;
        for (w7, expect) in [(128u64, 0.01), (128 * 3, 0.03), (128 * 500, 1.0)] {
            let mut para = ParaState::new(0.01, SimRng::new(5));
            let ev = WeightedAct { row: 3, weight: Charge::from_fixed7(w7), time: 0 };
            let hits = (0..n).filter(|_| para.on_act(&ev).is_some()).count() as f64 / n as f64;
            let sd = (expect * (1.0 - expect) / n as f64).sqrt();
            assert!((hits - expect).abs() <= 5.0 * sd + 1e-12, "w7={w7} rate={hits}");
        }
    }

    #[test]
    fn disabled_never_selects() {
        let mut para = ParaState::new(0.0, SimRng::new(1));
        let ev = WeightedAct::unit(0, 0);
        assert!((0..1000).all(|_| para.on_act(&ev).is_none()));
    }
}
