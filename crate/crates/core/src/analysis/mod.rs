//! Adversarial search and closed-form models used to cross-check the engine.

pub mod amplification;
pub mod montecarlo;
pub mod slowdown;

pub use amplification::{amplification_search, AmplificationResult, Ratio, SearchOptions, SearchSource};
pub use montecarlo::{monte_carlo_failure, wilson_interval, FailureEstimate};
pub use slowdown::{graphene_attack_slowdown, para_attack_slowdown, simulated_attack_slowdown, SlowdownEstimate};

use crate::fixed::FRAC_BITS;

/// Threshold an attacker effectively faces when the policy lets it reach
/// `amplification` times more charge than the tracker sees.
pub fn effective_threshold(trh: f64, amplification: f64) -> f64 {
    trh / amplification
}

/// Relative threshold left to ImPress-P when EACT keeps `bits` fractional
/// bits: `1 - 2^-bits`, full at the native precision, and one half with
/// integer-only counts (an episode then never weighs less than half its
/// charge).
pub fn precision_relative_threshold(bits: u32) -> f64 {
    match bits {
        0 => 0.5,
        b if b >= FRAC_BITS => 1.0,
        b => 1.0 - (0.5f64).powi(b as i32),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precision_curve() {
        assert_eq!(precision_relative_threshold(0), 0.5);
        assert_eq!(precision_relative_threshold(4), 0.9375);
        assert!((precision_relative_threshold(6) - 0.984).abs() < 0.002);
        assert_eq!(precision_relative_threshold(7), 1.0);
        assert_eq!(effective_threshold(32.0, 2.0), 16.0);
    }
}
