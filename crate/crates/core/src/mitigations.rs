//! Row-Press policies: how row-open episodes become tracker events.
//!
//! * `NoRp` reports one unit event per ACT and ignores open time.
//! * `ExPress` caps open time at tMRO by splitting long episodes, then
//!   reports every (re-)ACT.
//! * `ImPressN` reports the ACT plus one synthetic unit event for every tRC
//!   boundary at which an open-row register still holds the same row.
//! * `ImPressP` reports one event at PRE weighing `(tON + tPRE) / tRC`,
//!   truncated to the configured number of fractional bits.

use serde::{Deserialize, Serialize};

use crate::charge::{tcl_unchecked, ChargeModel};
use crate::error::{Error, Result};
use crate::fixed::{Alpha, Charge, FRAC_BITS};
use crate::timing::{row_open_episodes, Command, CommandKind, CommandTimeline, Episode, RowId, Tick, TimingParams};

pub use crate::trackers::WeightedAct;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "norp")]
    NoRp,
    #[serde(rename = "express")]
    ExPress,
    #[serde(rename = "impress_n")]
    ImPressN,
    #[serde(rename = "impress_p")]
    ImPressP,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] =
        [PolicyKind::NoRp, PolicyKind::ExPress, PolicyKind::ImPressN, PolicyKind::ImPressP];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::NoRp => "norp",
            PolicyKind::ExPress => "express",
            PolicyKind::ImPressN => "impress_n",
            PolicyKind::ImPressP => "impress_p",
        }
    }

    pub fn parse(s: &str) -> Option<PolicyKind> {
        PolicyKind::ALL.into_iter().find(|p| p.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Maximum row-open time enforced by ExPress.
    pub tmro: Tick,
    /// Fractional bits kept by ImPress-P.
    pub frac_bits: u32,
    /// Alpha the tracker was sized for (reporting only).
    pub alpha_assumed: Alpha,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, tp: &TimingParams) -> Self {
        PolicyConfig { kind, tmro: tp.t_ras, frac_bits: FRAC_BITS, alpha_assumed: Alpha::ZERO }
    }

    pub fn check(&self, tp: &TimingParams) -> Result<()> {
        if self.frac_bits > FRAC_BITS {
            return Err(Error::InvalidArgument(format!("frac_bits {} exceeds {}", self.frac_bits, FRAC_BITS)));
        }
        if self.kind == PolicyKind::ExPress && (self.tmro < tp.t_ras || self.tmro > tp.t_on_max) {
            return Err(Error::TonOutOfRange { ton: self.tmro, min: tp.t_ras, max: tp.t_on_max });
        }
        Ok(())
    }
}

/// Equivalent activation count of one episode, truncated to `frac_bits`
/// fractional bits and never below one.
pub fn eact(t_on: Tick, tp: &TimingParams, frac_bits: u32) -> Charge {
    let raw7 = if tp.t_rc.is_power_of_two() && tp.t_rc >= 1 << FRAC_BITS {
        (t_on + tp.t_pre) >> (tp.t_rc.trailing_zeros() - FRAC_BITS)
    } else {
        ((t_on + tp.t_pre) << FRAC_BITS) / tp.t_rc
    };
    Charge::from_fixed7(raw7).truncate_frac_bits(frac_bits).max(Charge::ONE)
}

/// Threshold ExPress tolerates when every episode may stay open for `tmro`.
pub fn express_effective_threshold(trh: f64, tmro: Tick, cm: &ChargeModel, tp: &TimingParams) -> f64 {
    trh / tcl_unchecked(tmro, cm, tp).to_f64()
}

/// Open times of the pieces ExPress cuts one episode of `t_on` into.
pub fn express_pieces(t_on: Tick, tp: &TimingParams, tmro: Tick) -> Vec<Tick> {
    let mut pieces = Vec::new();
    let mut rest = t_on;
    while rest > tmro {
        pieces.push(tmro);
        rest = rest.saturating_sub(tmro + tp.t_pre);
        rest = rest.max(tp.t_ras);
    }
    pieces.push(rest.max(tp.t_ras));
    pieces
}

/// Splits every episode longer than `tmro` into PRE / re-ACT pieces.
/// Later commands shift when a split forces the final piece past its
/// original close to honour tRAS.
pub fn express_rewrite(tl: &CommandTimeline, tp: &TimingParams, tmro: Tick) -> Result<CommandTimeline> {
    if tmro < tp.t_ras {
        return Err(Error::TonOutOfRange { ton: tmro, min: tp.t_ras, max: tp.t_on_max });
    }
    let mut out = CommandTimeline::new(tl.bank_rows);
    let mut shift: Tick = 0;
    let mut open: Option<(RowId, Tick)> = None;
    for c in &tl.commands {
        let t = c.time + shift;
        match c.kind {
            CommandKind::Act(row) => {
                open = Some((row, t));
                out.push(Command::act(row, t));
            }
            CommandKind::Pre | CommandKind::Ref => {
                let mut t_close = t;
                if let Some((row, mut cur)) = open.take() {
                    while t_close - cur > tmro {
                        out.push(Command::pre(cur + tmro));
                        cur += tmro + tp.t_pre;
                        out.push(Command::act(row, cur));
                        if t_close < cur + tp.t_ras {
                            shift += cur + tp.t_ras - t_close;
                            t_close = cur + tp.t_ras;
                        }
                    }
                }
                out.push(Command { kind: c.kind, time: t_close });
            }
            CommandKind::Rfm => out.push(Command { kind: c.kind, time: t }),
        }
    }
    if let Some((row, open_time)) = open {
        return Err(crate::error::TimelineError::UnclosedRow { row, open_time }.into());
    }
    Ok(out)
}

pub fn transform_norp(episodes: &[Episode]) -> Vec<WeightedAct> {
    episodes.iter().map(|e| WeightedAct::unit(e.row, e.open)).collect()
}

/// Unit event per episode plus synthetic events at tRC boundaries.
///
/// At boundary `b` the register latches the row whose episode satisfies
/// `open < b < close + tPRE`: the row occupies the bank until its precharge
/// completes, and an ACT issued exactly at `b` is not yet latched. A
/// synthetic event fires at `b` when the latched row at `b` and at
/// `b - tRC` is the same row.
pub fn transform_impress_n(episodes: &[Episode], tp: &TimingParams) -> Vec<WeightedAct> {
    let mut out = Vec::with_capacity(episodes.len());
    let mut last: Option<(Tick, RowId)> = None;
    for e in episodes {
        let mut acts = vec![WeightedAct::unit(e.row, e.open)];
        let end = e.close + tp.t_pre;
        let mut b = (tp.div_trc(e.open) + 1) * tp.t_rc;
        while b < end {
            if last == Some((b - tp.t_rc, e.row)) {
                acts.push(WeightedAct::unit(e.row, b));
            }
            last = Some((b, e.row));
            b += tp.t_rc;
        }
        out.extend(acts);
    }
    out.sort_by_key(|a| a.time);
    out
}

pub fn transform_impress_p(episodes: &[Episode], tp: &TimingParams, frac_bits: u32) -> Vec<WeightedAct> {
    episodes.iter().map(|e| WeightedAct { row: e.row, weight: eact(e.t_on(), tp, frac_bits), time: e.close }).collect()
}

/// Tracker events for already-rewritten episodes, in time order.
pub fn policy_events(policy: &PolicyConfig, episodes: &[Episode], tp: &TimingParams) -> Vec<WeightedAct> {
    match policy.kind {
        PolicyKind::NoRp | PolicyKind::ExPress => transform_norp(episodes),
        PolicyKind::ImPressN => transform_impress_n(episodes, tp),
        PolicyKind::ImPressP => transform_impress_p(episodes, tp, policy.frac_bits),
    }
}

/// Applies the policy's command rewrite (ExPress only) and returns the
/// resulting timeline with its tracker events.
pub fn apply_policy(
    policy: &PolicyConfig,
    tl: &CommandTimeline,
    tp: &TimingParams,
) -> Result<(CommandTimeline, Vec<WeightedAct>)> {
    let tl = match policy.kind {
        PolicyKind::ExPress => express_rewrite(tl, tp, policy.tmro)?,
        _ => tl.clone(),
    };
    let episodes = row_open_episodes(&tl)?;
    let events = policy_events(policy, &episodes, tp);
    Ok((tl, events))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charge::tcl_unchecked;
    use crate::timing::{default_timing, timeline_from_episodes, validate_timeline};
    use proptest::prelude::*;

    fn ep(row: RowId, open: Tick, t_on: Tick) -> Episode {
        Episode { row, open, close: open + t_on }
    }

    #[test]
    fn eact_matches_full_charge_at_alpha_one() {
        let tp = default_timing();
        let cm = ChargeModel::new(Alpha::ONE);
        for t_on in [96, 97, 128, 224, 1000, 52_000] {
            assert_eq!(eact(t_on, &tp, FRAC_BITS), tcl_unchecked(t_on, &cm, &tp));
        }
        assert_eq!(eact(96, &tp, 0), Charge::ONE);
        assert_eq!(eact(223, &tp, 0), Charge::ONE);
        assert_eq!(eact(224, &tp, 0), Charge::from_int(2));
    }

    #[test]
    fn impress_n_boundary_straddling_episode_sees_one_event() {
        let tp = default_timing();
        // ACT on a boundary, open for tRC + tRAS
        let eps = [ep(1, 384, 224), ep(7, 640, 96), ep(1, 768, 224)];
        let ev = transform_impress_n(&eps, &tp);
        assert_eq!(ev.iter().filter(|e| e.row == 1).count(), 2);
    }

    #[test]
    fn impress_n_long_episode_events() {
        let tp = default_timing();
        // open at 10, close at 10 + 1000; boundaries 128..=1024 are latched
        let ev = transform_impress_n(&[ep(3, 10, 1000)], &tp);
        assert_eq!(ev.len(), 1 + 7);
        assert!(ev.windows(2).all(|w| w[0].time <= w[1].time));
    }

    #[test]
    fn express_split_is_legal() {
        let tp = default_timing();
        let tl = timeline_from_episodes(&[ep(2, 0, 1000), ep(5, 1200, 96), ep(2, 1400, 150)], 64);
        let out = express_rewrite(&tl, &tp, 128).unwrap();
        validate_timeline(&out, &tp, 4).unwrap();
        let eps = row_open_episodes(&out).unwrap();
        assert!(eps.iter().all(|e| e.t_on() <= 128 && e.t_on() >= tp.t_ras));
        assert!(out.act_count() > tl.act_count());
    }

    #[test]
    fn pieces_match_rewrite() {
        let tp = default_timing();
        for t_on in [96, 128, 129, 200, 300, 1000, 5000] {
            let tl = timeline_from_episodes(&[ep(1, 0, t_on)], 8);
            let eps = row_open_episodes(&express_rewrite(&tl, &tp, 160).unwrap()).unwrap();
            let got: Vec<_> = eps.iter().map(|e| e.t_on()).collect();
            assert_eq!(got, express_pieces(t_on, &tp, 160), "t_on={t_on}");
        }
    }

    #[test]
    fn norp_matches_impress_p_on_rowhammer() {
        let tp = default_timing();
        let eps: Vec<_> = (0..20).map(|i| ep(i % 3, i as Tick * 128, 96)).collect();
        let a: Vec<_> = transform_norp(&eps).iter().map(|e| (e.row, e.weight)).collect();
        let b: Vec<_> = transform_impress_p(&eps, &tp, FRAC_BITS).iter().map(|e| (e.row, e.weight)).collect();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn eact_never_below_charge(t_on in 96u64..=52_000, parts in 0u32..=10_000) {
            let tp = default_timing();
            let cm = ChargeModel::new(Alpha::from_parts(parts).unwrap());
            prop_assert!(eact(t_on, &tp, FRAC_BITS) >= tcl_unchecked(t_on, &cm, &tp));
        }

        #[test]
        fn truncation_loses_less_than_one_ulp(t_on in 96u64..=52_000, bits in 0u32..=7) {
            let tp = default_timing();
            let full = eact(t_on, &tp, FRAC_BITS);
            let cut = eact(t_on, &tp, bits);
            prop_assert!(cut <= full);
            prop_assert!(full.raw() - cut.raw() < Charge::ONE.raw() >> bits);
        }

        // Per-episode charge above the events ImPress-N reports is bounded by alpha.
        #[test]
        fn impress_n_leakage_bounded(
            gaps in prop::collection::vec((0u64..300, 96u64..2000, 0u32..3), 1..30),
            parts in 0u32..=10_000,
        ) {
            let tp = default_timing();
            let cm = ChargeModel::new(Alpha::from_parts(parts).unwrap());
            let mut eps = Vec::new();
            let mut t = 0;
            for (gap, t_on, row) in gaps {
                let open = t + gap;
                eps.push(ep(row, open, t_on));
                t = (open + t_on + tp.t_pre).max(open + tp.t_rc);
            }
            let ev = transform_impress_n(&eps, &tp);
            for e in &eps {
                let seen = ev.iter().filter(|a| a.row == e.row && a.time >= e.open && a.time < e.close + tp.t_pre).count() as u64;
                let charge = tcl_unchecked(e.t_on(), &cm, &tp);
                prop_assert!(charge <= Charge::from_int(seen) + Charge::from_raw(cm.alpha.parts() as u64 * (1 << FRAC_BITS)));
            }
        }

        #[test]
        fn express_rewrite_always_legal(
            eps in prop::collection::vec((0u64..300, 96u64..3000, 0u32..8), 1..20),
            tmro in 96u64..600,
        ) {
            let tp = default_timing();
            let mut list = Vec::new();
            let mut t = 0;
            for (gap, t_on, row) in eps {
                let open = t + gap;
                list.push(ep(row, open, t_on));
                t = (open + t_on + tp.t_pre).max(open + tp.t_rc);
            }
            let tl = timeline_from_episodes(&list, 8);
            validate_timeline(&tl, &tp, 4).unwrap();
            let out = express_rewrite(&tl, &tp, tmro).unwrap();
            prop_assert!(validate_timeline(&out, &tp, 4).is_ok());
            prop_assert!(row_open_episodes(&out).unwrap().iter().all(|e| e.t_on() <= tmro));
        }
    }
}
