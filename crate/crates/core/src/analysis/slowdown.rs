//! Throughput lost to mitigation under a worst-case attack loop.

use crate::attacks::gen_rowpress;
use crate::engine::{run, SimSetup};
use crate::error::{Error, Result};
use crate::fixed::Charge;
use crate::mitigations::PolicyKind;
use crate::trackers::{TrackerConfig, TrackerKind};

use super::montecarlo::wilson_interval;

/// Fewest mitigations a simulated estimate must contain.
pub const MIN_MITIGATIONS: u64 = 10;

/// Victim rows refreshed per mitigation (two on each side).
const ROWS_PER_MITIGATION: f64 = 4.0;

/// Graphene with an internal threshold of T/2 mitigates once per T/2
/// activation equivalents, each mitigation costing four row cycles.
pub fn graphene_attack_slowdown(trh: f64) -> f64 {
    2.0 * ROWS_PER_MITIGATION / trh
}

/// PARA against a loop whose single event weighs `k + 1`.
pub fn para_attack_slowdown(p: f64, k: u64) -> f64 {
    let w = (k + 1) as f64;
    ROWS_PER_MITIGATION * (p * w).min(1.0) / w
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlowdownEstimate {
    pub slowdown: f64,
    /// 95% interval for stochastic trackers.
    pub ci: Option<(f64, f64)>,
    pub mitigations: u64,
    pub iterations: u64,
}

/// Runs `iterations` of a loop that holds one aggressor open for
/// `k * tRC + tRAS` under ImPress-P, so each episode weighs `k + 1`.
pub fn simulated_attack_slowdown(
    base: &SimSetup,
    tracker: &TrackerConfig,
    k: u64,
    iterations: u64,
    seed: u64,
) -> Result<SlowdownEstimate> {
    let mut setup = base.clone();
    setup.policy.kind = PolicyKind::ImPressP;
    setup.tracker = tracker.clone();
    setup.seed = seed;
    setup.trh = Charge::from_int(u32::MAX as u64);
    let tp = setup.timing;
    let t_on = k * tp.t_rc + tp.t_ras;
    let row = setup.bank.rows / 2;
    let tl = gen_rowpress(&[row], t_on, iterations, &tp, setup.bank.rows)?;
    let report = run(&setup, &tl)?;
    if report.mitigations < MIN_MITIGATIONS {
        return Err(Error::InsufficientMitigations { found: report.mitigations, needed: MIN_MITIGATIONS });
    }
    // the loop occupies the bank for (k + 1) tRC per iteration
    let duration = (iterations * (k + 1) * tp.t_rc) as f64;
    let slowdown = (report.mitigation_ticks + report.rfm_ticks) as f64 / duration;
    let ci = (tracker.kind == TrackerKind::Para).then(|| {
        let (lo, hi) = wilson_interval(report.mitigations, iterations, 1.96);
        let scale = ROWS_PER_MITIGATION / (k + 1) as f64;
        (lo * scale, hi * scale)
    });
    Ok(SlowdownEstimate { slowdown, ci, mitigations: report.mitigations, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timing::default_timing;
    use crate::trackers::graphene_half_threshold;

    #[test]
    fn closed_forms() {
        assert!((graphene_attack_slowdown(1000.0) - 0.008).abs() < 1e-12);
        assert!((para_attack_slowdown(1.0 / 84.0, 0) - 4.0 / 84.0).abs() < 1e-12);
        assert!((para_attack_slowdown(1.0 / 84.0, 100) - 4.0 / 101.0).abs() < 1e-12);
    }

    #[test]
    fn graphene_simulation_tracks_closed_form() {
        let base = SimSetup::new(default_timing());
        let t = 1000;
        let cfg = TrackerConfig::graphene(16, graphene_half_threshold(Charge::from_int(t)));
        let est = simulated_attack_slowdown(&base, &cfg, 8, 20 * t / 9, 0).unwrap();
        let want = graphene_attack_slowdown(t as f64);
        assert!((est.slowdown - want).abs() / want < 0.1, "{est:?}");
    }

    #[test]
    fn too_few_mitigations_is_an_error() {
        let base = SimSetup::new(default_timing());
        let cfg = TrackerConfig::graphene(16, Charge::from_int(500));
        assert!(matches!(
            simulated_attack_slowdown(&base, &cfg, 0, 100, 0),
            Err(Error::InsufficientMitigations { .. })
        ));
    }
}
