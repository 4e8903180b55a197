//! Tracker sizing at a target threshold, rescaled for the Row-Press policy.

use super::{TrackerConfig, TrackerKind};
use crate::error::{Error, Result};
use crate::fixed::{Alpha, Charge, ALPHA_DENOM, CHARGE_SCALE};
use crate::mitigations::PolicyKind;

const GRAPHENE_BASE_ENTRIES: u128 = 448;
const BASE_TRH: u64 = 4000;
const PARA_BASE_INVERSE_P: u64 = 184;
const MITHRIL_RFMTH: u32 = 80;

/// Alpha that the sizing has to absorb for `policy`.
fn effective_alpha(policy: PolicyKind, alpha: Alpha) -> u64 {
    match policy {
        PolicyKind::ImPressN | PolicyKind::ExPress => alpha.parts() as u64,
        PolicyKind::NoRp | PolicyKind::ImPressP => 0,
    }
}

fn integral_trh(trh: Charge) -> Result<u64> {
    if trh.raw() == 0 || !trh.raw().is_multiple_of(CHARGE_SCALE) {
        return Err(Error::InvalidArgument(format!("threshold {trh} must be a positive integer")));
    }
    Ok(trh.raw() / CHARGE_SCALE)
}

fn round_div(num: u128, den: u128) -> u128 {
    (2 * num + den) / (2 * den)
}

/// Graphene internal threshold of T/2 used by the slowdown presets.
pub fn graphene_half_threshold(trh: Charge) -> Charge {
    Charge::from_raw(trh.raw() / 2)
}

/// Largest internal threshold for which a victim cannot reach `trh` when each
/// event weighs at most `max_weight`: two neighbours, each seen across at
/// most two counter epochs per victim refresh interval.
pub fn graphene_secure_threshold(trh: Charge, max_weight: Charge) -> Charge {
    let quarter = Charge::from_raw(trh.raw() / 4);
    quarter.saturating_sub(max_weight).max(Charge::ONE)
}

/// Tracker configuration sized for `trh` under `policy`.
pub fn size_tracker(
    kind: TrackerKind,
    policy: PolicyKind,
    trh: Charge,
    alpha: Alpha,
    rfmth: u32,
) -> Result<TrackerConfig> {
    let a = effective_alpha(policy, alpha);
    let denom = ALPHA_DENOM;
    match kind {
        TrackerKind::None => Ok(TrackerConfig::none()),
        TrackerKind::Graphene => {
            let t = integral_trh(trh)? as u128;
            let entries = round_div(GRAPHENE_BASE_ENTRIES * BASE_TRH as u128 * (denom + a) as u128, t * denom as u128);
            // internal threshold: a third of the tolerated threshold, floored
            let internal = (t * denom as u128) / (3 * (denom + a) as u128);
            Ok(TrackerConfig::graphene(entries as usize, Charge::from_int(internal as u64)))
        }
        TrackerKind::Para => {
            if integral_trh(trh)? != BASE_TRH {
                return Err(Error::UnsupportedCombination(format!(
                    "PARA sizing is only defined at threshold {BASE_TRH}"
                )));
            }
            let inv = round_div((PARA_BASE_INVERSE_P * denom) as u128, (denom + a) as u128) as u64;
            Ok(TrackerConfig::para(1.0 / inv as f64))
        }
        TrackerKind::Mithril => {
            if integral_trh(trh)? != BASE_TRH || rfmth != MITHRIL_RFMTH {
                return Err(Error::UnsupportedCombination(format!(
                    "Mithril sizing is only tabulated at threshold {BASE_TRH} and RFM threshold {MITHRIL_RFMTH}"
                )));
            }
            let entries = match a {
                0 => 383,
                3500 => 615,
                10_000 => 1545,
                _ => {
                    return Err(Error::UnsupportedCombination(format!(
                        "Mithril sizing is only tabulated for alpha 0, 0.35 and 1 (got {})",
                        a as f64 / denom as f64
                    )))
                }
            };
            Ok(TrackerConfig::mithril(entries, rfmth))
        }
        TrackerKind::Mint => Ok(TrackerConfig::mint(rfmth)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(x: f64) -> Alpha {
        Alpha::from_f64(x).unwrap()
    }

    #[test]
    fn graphene_entries_scale_with_alpha() {
        let t = Charge::from_int(4000);
        for (alpha, want) in [(0.0, 448), (0.35, 605), (1.0, 896)] {
            let c = size_tracker(TrackerKind::Graphene, PolicyKind::ImPressN, t, a(alpha), 80).unwrap();
            assert_eq!(c.entries, want);
        }
        let p = size_tracker(TrackerKind::Graphene, PolicyKind::ImPressP, t, a(1.0), 80).unwrap();
        assert_eq!(p.entries, 448);
        assert_eq!(p.internal_threshold, Charge::from_int(1333));
    }

    #[test]
    fn para_probability_table() {
        let t = Charge::from_int(4000);
        for (alpha, inv) in [(0.0, 184.0), (0.35, 136.0), (1.0, 92.0)] {
            let c = size_tracker(TrackerKind::Para, PolicyKind::ExPress, t, a(alpha), 80).unwrap();
            assert_eq!(c.p, 1.0 / inv);
        }
        assert!(matches!(
            size_tracker(TrackerKind::Para, PolicyKind::NoRp, Charge::from_int(2000), a(0.0), 80),
            Err(Error::UnsupportedCombination(_))
        ));
    }

    #[test]
    fn mithril_table() {
        let t = Charge::from_int(4000);
        for (alpha, want) in [(0.0, 383), (0.35, 615), (1.0, 1545)] {
            let c = size_tracker(TrackerKind::Mithril, PolicyKind::ImPressN, t, a(alpha), 80).unwrap();
            assert_eq!(c.entries, want);
        }
        assert!(size_tracker(TrackerKind::Mithril, PolicyKind::ImPressN, t, a(0.5), 80).is_err());
        assert!(size_tracker(TrackerKind::Mithril, PolicyKind::ImPressN, t, a(0.0), 40).is_err());
    }
}
