//! The golden charge model.
//!
//! Each row-open episode leaks `1 + alpha * (tON - tRAS) / tRC` units onto
//! the rows within `charge_radius` of the aggressor. Charges are additive
//! across episodes and aggressors, reset by refresh, and a victim flips the
//! first time its accumulated charge reaches the threshold.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::{Alpha, Charge, FRAC_BITS};
use crate::timing::{RowId, Tick, TimingParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChargeModel {
    pub alpha: Alpha,
}

impl ChargeModel {
    pub fn new(alpha: Alpha) -> Self {
        ChargeModel { alpha }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlastConfig {
    pub charge_radius: u32,
    pub refresh_radius: u32,
}

impl Default for BlastConfig {
    fn default() -> Self {
        BlastConfig { charge_radius: 1, refresh_radius: 2 }
    }
}

impl BlastConfig {
    pub fn check(&self) -> std::result::Result<(), crate::error::ConfigError> {
        if self.charge_radius == 0 || self.charge_radius > self.refresh_radius {
            return Err(crate::error::ConfigError::invalid(
                "charge_radius",
                "need 1 <= charge_radius <= refresh_radius",
            ));
        }
        Ok(())
    }
}

/// Rows within `radius` of `center`, excluding the center, clipped to the bank.
pub fn neighbors(center: RowId, radius: u32, rows: u32) -> impl Iterator<Item = RowId> {
    let lo = center.saturating_sub(radius);
    let hi = center.saturating_add(radius).min(rows.saturating_sub(1));
    (lo..=hi).filter(move |&r| r != center)
}

/// Total charge after `k` pure activations.
pub fn tcl_rowhammer(k: u64) -> Charge {
    Charge::from_int(k)
}

/// Charge leaked by one episode that keeps a row open for `t_on` ticks.
///
/// Rounded up onto the charge grid; exact whenever tRC divides 128 · tON.
pub fn tcl_episode(t_on: Tick, cm: &ChargeModel, tp: &TimingParams) -> Result<Charge> {
    if t_on < tp.t_ras || t_on > tp.t_on_max {
        return Err(Error::TonOutOfRange { ton: t_on, min: tp.t_ras, max: tp.t_on_max });
    }
    Ok(tcl_unchecked(t_on, cm, tp))
}

/// Like [`tcl_episode`] but without the range check; open times shorter
/// than tRAS (rows cut short by a forced refresh) count as one activation.
pub fn tcl_unchecked(t_on: Tick, cm: &ChargeModel, tp: &TimingParams) -> Charge {
    let extra = t_on.saturating_sub(tp.t_ras) as u128;
    let num = cm.alpha.parts() as u128 * extra * (1u128 << FRAC_BITS);
    let leak = num.div_ceil(tp.t_rc as u128) as u64;
    Charge::ONE + Charge::from_raw(leak)
}

/// Per-row accumulated charge of a bank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VictimChargeState {
    charge: Vec<Charge>,
    last_refresh: Vec<Tick>,
}

impl VictimChargeState {
    pub fn new(rows: u32) -> Self {
        VictimChargeState { charge: vec![Charge::ZERO; rows as usize], last_refresh: vec![0; rows as usize] }
    }

    pub fn rows(&self) -> u32 {
        self.charge.len() as u32
    }

    pub fn charge(&self, row: RowId) -> Charge {
        self.charge[row as usize]
    }

    pub fn last_refresh(&self, row: RowId) -> Tick {
        self.last_refresh[row as usize]
    }

    /// Adds `amount` to every row within the charge radius of `aggressor`.
    /// Calls `touched` with each victim and its new charge.
    pub fn deposit(
        &mut self,
        aggressor: RowId,
        amount: Charge,
        bc: &BlastConfig,
        mut touched: impl FnMut(RowId, Charge),
    ) -> Result<()> {
        let rows = self.rows();
        if aggressor >= rows {
            return Err(Error::RowOutOfRange { row: aggressor, rows });
        }
        for v in neighbors(aggressor, bc.charge_radius, rows) {
            let c = &mut self.charge[v as usize];
            *c += amount;
            touched(v, *c);
        }
        Ok(())
    }

    /// Applies one episode of `t_on` ticks on `aggressor`.
    pub fn apply_episode(
        &mut self,
        aggressor: RowId,
        t_on: Tick,
        cm: &ChargeModel,
        tp: &TimingParams,
        bc: &BlastConfig,
    ) -> Result<()> {
        let amount = tcl_episode(t_on, cm, tp)?;
        self.deposit(aggressor, amount, bc, |_, _| {})
    }

    pub fn refresh_rows(&mut self, rows: impl IntoIterator<Item = RowId>, now: Tick) {
        for r in rows {
            if let Some(c) = self.charge.get_mut(r as usize) {
                *c = Charge::ZERO;
                self.last_refresh[r as usize] = now;
            }
        }
    }

    pub fn flipped_rows(&self, trh: Charge) -> BTreeSet<RowId> {
        self.charge.iter().enumerate().filter(|(_, &c)| c >= trh).map(|(r, _)| r as RowId).collect()
    }

    /// `row,charge,last_refresh` for every row with nonzero charge.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,charge,last_refresh\n");
        for (r, c) in self.charge.iter().enumerate() {
            if *c != Charge::ZERO {
                let _ = writeln!(out, "{r},{c},{}", self.last_refresh[r]);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timing::default_timing;
    use proptest::prelude::*;

    fn cm(x: f64) -> ChargeModel {
        ChargeModel::new(Alpha::from_f64(x).unwrap())
    }

    #[test]
    fn rowhammer_is_linear() {
        assert_eq!(tcl_rowhammer(0), Charge::ZERO);
        assert_eq!(tcl_rowhammer(1), Charge::ONE);
        assert_eq!(tcl_rowhammer(4000), Charge::from_int(4000));
    }

    #[test]
    fn episode_values() {
        let tp = default_timing();
        for a in [0.0, 0.35, 0.48, 1.0] {
            assert_eq!(tcl_episode(tp.t_ras, &cm(a), &tp).unwrap(), Charge::ONE);
        }
        assert_eq!(tcl_episode(tp.t_ras + tp.t_rc, &cm(0.35), &tp).unwrap(), Charge::from_ratio_ceil(135, 100));
        // 1 + 0.48 * 161 = 78.28
        assert_eq!(tcl_episode(tp.t_ras + 161 * tp.t_rc, &cm(0.48), &tp).unwrap(), Charge::from_ratio_ceil(7828, 100));
        assert!(tcl_episode(tp.t_ras - 1, &cm(0.5), &tp).is_err());
        assert!(tcl_episode(tp.t_on_max + 1, &cm(0.5), &tp).is_err());
    }

    #[test]
    fn deposit_and_edges() {
        let tp = default_timing();
        let bc = BlastConfig::default();
        let mut st = VictimChargeState::new(16);
        st.apply_episode(5, tp.t_ras, &cm(1.0), &tp, &bc).unwrap();
        assert_eq!(st.charge(4), Charge::ONE);
        assert_eq!(st.charge(6), Charge::ONE);
        assert_eq!(st.charge(5), Charge::ZERO);
        assert_eq!(st.charge(3), Charge::ZERO);

        let mut st = VictimChargeState::new(16);
        st.apply_episode(4, tp.t_ras, &cm(1.0), &tp, &bc).unwrap();
        st.apply_episode(6, tp.t_ras, &cm(1.0), &tp, &bc).unwrap();
        assert_eq!(st.charge(5), Charge::from_int(2));

        let mut st = VictimChargeState::new(16);
        st.apply_episode(0, tp.t_ras, &cm(1.0), &tp, &bc).unwrap();
        assert_eq!(st.flipped_rows(Charge::ONE), BTreeSet::from([1]));
        assert!(st.apply_episode(16, tp.t_ras, &cm(1.0), &tp, &bc).is_err());
    }

    #[test]
    fn refresh_and_flip() {
        let tp = default_timing();
        let bc = BlastConfig::default();
        let mut st = VictimChargeState::new(16);
        st.apply_episode(5, tp.t_ras, &cm(1.0), &tp, &bc).unwrap();
        let before = st.clone();
        st.refresh_rows([], 10);
        assert_eq!(st, before);
        st.refresh_rows([4, 6], 10);
        assert_eq!(st.charge(4), Charge::ZERO);
        assert_eq!(st.last_refresh(6), 10);
        st.apply_episode(5, tp.t_ras, &cm(1.0), &tp, &bc).unwrap();
        assert_eq!(st.charge(4), Charge::ONE);

        let trh = Charge::from_int(4000);
        let mut st = VictimChargeState::new(4);
        assert!(st.flipped_rows(trh).is_empty());
        st.deposit(0, Charge::from_fixed7(3999 * 128 + 64), &bc, |_, _| {}).unwrap();
        assert!(st.flipped_rows(trh).is_empty());
        st.deposit(0, Charge::from_fixed7(64), &bc, |_, _| {}).unwrap();
        assert_eq!(st.flipped_rows(trh), BTreeSet::from([1]));
        assert!(st.to_csv().starts_with("row,charge,last_refresh\n1,4000,0"));
    }

    proptest! {
        #[test]
        fn monotone_in_ton_and_alpha(t1 in 96u64..52_000, t2 in 96u64..52_000, a1 in 0u32..=10_000, a2 in 0u32..=10_000) {
            let tp = default_timing();
            let (tlo, thi) = (t1.min(t2), t1.max(t2));
            let (alo, ahi) = (a1.min(a2), a1.max(a2));
            let m = |a| ChargeModel::new(Alpha::from_parts(a).unwrap());
            prop_assert!(tcl_episode(tlo, &m(alo), &tp).unwrap() <= tcl_episode(thi, &m(alo), &tp).unwrap());
            prop_assert!(tcl_episode(tlo, &m(alo), &tp).unwrap() <= tcl_episode(tlo, &m(ahi), &tp).unwrap());
        }

        #[test]
        fn damage_rate_at_most_rowhammer(t_on in 96u64..=52_000, a in 0u32..=10_000) {
            // tcl / ((tON + tPRE) / tRC) <= 1, equality iff tON == tRAS or alpha == 1
            let tp = default_timing();
            let c = tcl_episode(t_on, &ChargeModel::new(Alpha::from_parts(a).unwrap()), &tp).unwrap();
            let time_units = Charge::from_fixed7((t_on + tp.t_pre) * 128 / tp.t_rc);
            prop_assert!(c <= time_units);
            prop_assert_eq!(c == time_units, t_on == tp.t_ras || a == 10_000);
        }

        #[test]
        fn never_undercounts(t_on in 96u64..=52_000, a in 0u32..=10_000) {
            let tp = default_timing();
            let c = tcl_episode(t_on, &ChargeModel::new(Alpha::from_parts(a).unwrap()), &tp).unwrap();
            let exact = 1.0 + (a as f64 / 1e4) * (t_on - tp.t_ras) as f64 / tp.t_rc as f64;
            prop_assert!(c.to_f64() >= exact - 1e-12);
            // the 7-bit view of the oracle rounds up as well
            prop_assert!(c.ceil_fixed7() as f64 / 128.0 >= exact - 1e-12);
        }

        #[test]
        fn order_independent(eps in proptest::collection::vec((0u32..8, 96u64..2000), 1..30), seed in any::<u64>()) {
            let tp = default_timing();
            let bc = BlastConfig::default();
            let m = cm(0.35);
            let mut a = VictimChargeState::new(8);
            for &(r, t) in &eps { a.apply_episode(r, t, &m, &tp, &bc).unwrap(); }
            let mut shuffled = eps.clone();
            let n = shuffled.len();
            for i in 0..n { shuffled.swap(i, (seed.wrapping_mul(i as u64 + 1) % n as u64) as usize); }
            let mut b = VictimChargeState::new(8);
            for &(r, t) in &shuffled { b.apply_episode(r, t, &m, &tp, &bc).unwrap(); }
            prop_assert_eq!(a.clone(), b);
            let mut twice = a.clone();
            twice.refresh_rows([1, 2], 5);
            let once = twice.clone();
            twice.refresh_rows([1, 2], 5);
            prop_assert_eq!(once, twice);
        }
    }
}
