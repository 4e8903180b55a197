//! Seeded Monte-Carlo failure estimates for stochastic trackers.

use rayon::prelude::*;

use crate::engine::{run, SimSetup};
use crate::error::{Error, Result};
use crate::timing::CommandTimeline;

#[derive(Clone, Debug, PartialEq)]
pub struct FailureEstimate {
    pub trials: u64,
    pub failures: u64,
    pub probability: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Per-trial outcome, in seed order.
    pub outcomes: Vec<bool>,
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Runs `trials` independent simulations of `timeline`, trial `i` seeded with
/// `seed_base + i`, and counts the ones that flip any row. Results do not
/// depend on `jobs`.
pub fn monte_carlo_failure(
    setup: &SimSetup,
    timeline: &CommandTimeline,
    trials: u64,
    seed_base: u64,
    jobs: usize,
) -> Result<FailureEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let outcomes: Vec<bool> = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut s = setup.clone();
                s.seed = seed_base.wrapping_add(i);
                run(&s, timeline).map(|r| r.flipped())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let failures = outcomes.iter().filter(|&&f| f).count() as u64;
    let (ci_low, ci_high) = wilson_interval(failures, trials, 1.96);
    Ok(FailureEstimate { trials, failures, probability: failures as f64 / trials as f64, ci_low, ci_high, outcomes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::gen_rowhammer;
    use crate::fixed::Charge;
    use crate::timing::default_timing;
    use crate::trackers::TrackerConfig;

    #[test]
    fn wilson_contains_point_estimate() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
        assert_eq!(wilson_interval(0, 10, 1.96).0, 0.0);
    }

    #[test]
    fn independent_of_thread_count() {
        let mut s = SimSetup::new(default_timing());
        s.bank.rows = 64;
        s.bank.auto_refresh = false;
        s.trh = Charge::from_int(64);
        s.tracker = TrackerConfig::para(1.0 / 32.0);
        let tl = gen_rowhammer(&[20], 128, &s.timing, 64).unwrap();
        let a = monte_carlo_failure(&s, &tl, 200, 5, 1).unwrap();
        let b = monte_carlo_failure(&s, &tl, 200, 5, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.failures > 0 && a.failures < 200);
    }
}
