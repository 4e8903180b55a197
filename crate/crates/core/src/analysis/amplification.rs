//! Worst-case charge-to-weight ratio an attacker can reach under a policy.
//!
//! The amplification of a timeline is, for the worst aggressor row, the
//! charge its episodes leak divided by the weight the tracker sees for it.
//! Victim charge is a sum over aggressors, so the per-aggressor maximum
//! bounds any victim. Three searches run and the largest ratio wins:
//!
//! * a sweep of single episodes over every open time at tick resolution
//!   and every phase against the tRC grid,
//! * an exhaustive search over all timelines on the tPRE grid up to a
//!   horizon, solved as a fractional program (Dinkelbach iteration over
//!   exact integer ratios with a dynamic program per step),
//! * random legal timelines.

use std::cmp::Ordering;

use crate::attacks::{gen_random_legal, RandomConstraints};
use crate::charge::{tcl_unchecked, ChargeModel};
use crate::error::{Error, Result};
use crate::fixed::Charge;
use crate::mitigations::{apply_policy, eact, express_pieces, PolicyConfig, PolicyKind};
use crate::timing::{row_open_episodes, timeline_from_episodes, CommandTimeline, Episode, RowId, Tick, TimingParams};

/// Exact non-negative ratio `charge / weight`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ratio {
    pub charge: Charge,
    pub weight: Charge,
}

impl Ratio {
    pub fn new(charge: Charge, weight: Charge) -> Self {
        Ratio { charge, weight }
    }

    pub fn to_f64(self) -> f64 {
        self.charge.raw() as f64 / self.weight.raw() as f64
    }

    fn cmp_exact(&self, other: &Ratio) -> Ordering {
        (self.charge.raw() as u128 * other.weight.raw() as u128)
            .cmp(&(other.charge.raw() as u128 * self.weight.raw() as u128))
    }

    /// True when the ratio equals `value` exactly.
    pub fn equals(&self, value: Charge) -> bool {
        self.charge.raw() as u128 * Charge::ONE.raw() as u128 == value.raw() as u128 * self.weight.raw() as u128
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchSource {
    Sweep,
    Exhaustive,
    Random,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmplificationResult {
    pub amplification: f64,
    pub ratio: Ratio,
    pub source: SearchSource,
    pub sweep: Ratio,
    pub exhaustive: Option<Ratio>,
    pub random: Option<Ratio>,
    /// Timeline reaching `ratio`; aggressor episodes use `aggressor`.
    pub witness: CommandTimeline,
    pub aggressor: RowId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    /// Horizon of the exhaustive search in tRC; 0 skips it.
    pub horizon_trc: u64,
    pub random_trials: u64,
    pub random_episodes: u64,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { horizon_trc: 64, random_trials: 200, random_episodes: 64, seed: 0 }
    }
}

/// Row of the aggressor in witness timelines; other rows are decoys.
pub const WITNESS_AGGRESSOR: RowId = 3;
pub const WITNESS_ROWS: u32 = 8;

/// Charge and tracker weight of one isolated episode opened at `open`.
pub fn episode_ratio(policy: &PolicyConfig, cm: &ChargeModel, tp: &TimingParams, open: Tick, t_on: Tick) -> Ratio {
    match policy.kind {
        PolicyKind::NoRp => Ratio::new(tcl_unchecked(t_on, cm, tp), Charge::ONE),
        PolicyKind::ImPressP => Ratio::new(tcl_unchecked(t_on, cm, tp), eact(t_on, tp, policy.frac_bits)),
        PolicyKind::ExPress => {
            let pieces = express_pieces(t_on, tp, policy.tmro);
            let charge = pieces.iter().map(|&p| tcl_unchecked(p, cm, tp)).sum();
            Ratio::new(charge, Charge::from_int(pieces.len() as u64))
        }
        PolicyKind::ImPressN => {
            let latched = latched_boundaries(open, open + t_on, tp);
            Ratio::new(tcl_unchecked(t_on, cm, tp), Charge::from_int(latched.max(1)))
        }
    }
}

/// Number of tRC boundaries `b` with `open < b < close + tPRE`.
fn latched_boundaries(open: Tick, close: Tick, tp: &TimingParams) -> u64 {
    let end = close + tp.t_pre;
    tp.div_trc(end - 1) - tp.div_trc(open)
}

fn isolated_witness(open_phase: Tick, t_on: Tick, tp: &TimingParams, rounds: u64) -> CommandTimeline {
    let decoy = WITNESS_AGGRESSOR + 4;
    let mut eps = Vec::new();
    let mut t = open_phase;
    for _ in 0..rounds {
        eps.push(Episode { row: WITNESS_AGGRESSOR, open: t, close: t + t_on });
        // a decoy episode clears the open-row register between aggressor episodes
        let d = (t + t_on + tp.t_pre).max(t + tp.t_rc);
        eps.push(Episode { row: decoy, open: d, close: d + tp.t_ras });
        let next = d + tp.t_rc;
        t = next.div_ceil(tp.t_rc) * tp.t_rc + open_phase;
    }
    timeline_from_episodes(&eps, WITNESS_ROWS)
}

/// Best single episode over all open times and phases at tick resolution.
pub fn sweep_single_episode(policy: &PolicyConfig, cm: &ChargeModel, tp: &TimingParams) -> (Ratio, Tick, Tick) {
    let phases: Vec<Tick> = if policy.kind == PolicyKind::ImPressN { (0..tp.t_rc).collect() } else { vec![0] };
    let mut best = (Ratio::new(Charge::ONE, Charge::ONE), 0, tp.t_ras);
    for t_on in tp.t_ras..=tp.t_on_max {
        for &phase in &phases {
            let r = episode_ratio(policy, cm, tp, phase, t_on);
            if r.cmp_exact(&best.0) == Ordering::Greater {
                best = (r, phase, t_on);
            }
        }
    }
    best
}

/// Per-row charge and weight of an arbitrary timeline under `policy`.
pub fn timeline_ratios(
    policy: &PolicyConfig,
    cm: &ChargeModel,
    tp: &TimingParams,
    tl: &CommandTimeline,
) -> Result<Vec<(RowId, Ratio)>> {
    let (rewritten, events) = apply_policy(policy, tl, tp)?;
    let episodes = row_open_episodes(&rewritten)?;
    let mut rows: std::collections::BTreeMap<RowId, (Charge, Charge)> = Default::default();
    for e in &episodes {
        rows.entry(e.row).or_default().0 += tcl_unchecked(e.t_on(), cm, tp);
    }
    for ev in &events {
        rows.entry(ev.row).or_default().1 += ev.weight;
    }
    Ok(rows.into_iter().filter(|(_, (_, w))| *w > Charge::ZERO).map(|(r, (c, w))| (r, Ratio::new(c, w))).collect())
}

/// Outcome of the exhaustive grid search.
#[derive(Clone, Debug, PartialEq)]
pub struct ExhaustiveResult {
    pub ratio: Ratio,
    pub witness: CommandTimeline,
    /// Aggressor episodes of the witness.
    pub aggressor_episodes: Vec<Episode>,
    pub iterations: u32,
}

/// Grid slot of the ACT, open length in grid slots, and row class of one chosen episode.
type Step = (usize, usize, Class);

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Aggressor,
    Other,
}

#[derive(Clone, Copy)]
struct Choice {
    open: usize,
    len: usize,
    class: Class,
}

/// Exhaustive search over every timeline whose commands lie on the tPRE
/// grid within `horizon_trc` row cycles. Rows other than the aggressor are
/// interchangeable for the aggressor's ratio, so the state only tracks
/// whether the last episode belonged to the aggressor.
pub fn exhaustive_search(
    policy: &PolicyConfig,
    cm: &ChargeModel,
    tp: &TimingParams,
    horizon_trc: u64,
) -> Result<ExhaustiveResult> {
    let u = tp.t_pre;
    if u == 0 || !tp.t_rc.is_multiple_of(u) || !tp.t_ras.is_multiple_of(u) {
        return Err(Error::UnsupportedCombination("grid search needs tRC and tRAS to be multiples of tPRE".into()));
    }
    let grid = (horizon_trc * tp.t_rc / u) as usize;
    let per_rc = (tp.t_rc / u) as usize;
    let min_len = (tp.t_ras / u) as usize;
    let max_len = ((tp.t_on_max / u) as usize).min(grid);
    if grid < min_len {
        return Err(Error::BudgetTooSmall(format!("horizon of {horizon_trc} tRC holds no episode")));
    }

    // per (open, len): charge, base weight, first latched boundary, latched count
    let cell = |open: usize, len: usize| -> (u64, u64, usize, usize) {
        let t_open = open as Tick * u;
        let t_on = len as Tick * u;
        let r = episode_ratio(policy, cm, tp, t_open, t_on);
        let latched = if policy.kind == PolicyKind::ImPressN {
            latched_boundaries(t_open, t_open + t_on, tp) as usize
        } else {
            0
        };
        (r.charge.raw(), r.weight.raw(), (open / per_rc + 1) * per_rc, latched)
    };
    let mut table = vec![(0u64, 0u64, 0usize, 0usize); (grid + 1) * (max_len + 1)];
    for open in 0..=grid {
        for len in min_len..=max_len.min(grid - open.min(grid)) {
            table[open * (max_len + 1) + len] = cell(open, len);
        }
    }
    let one = Charge::ONE.raw() as i128;

    // Dinkelbach: lambda = num / den, maximise sum(charge * den - weight * num)
    let (mut num, mut den) = (0i128, 1i128);
    let mut best: Option<(Ratio, Vec<Step>)> = None;
    let mut iterations = 0;
    loop {
        iterations += 1;
        // state index: earliest next open (0..=grid+1) x latched flag x last class
        let states = grid + 2;
        let idx = |e: usize, latched: bool, class: Class| {
            (e * 2 + latched as usize) * 2 + (class == Class::Aggressor) as usize
        };
        let mut value = vec![0i128; states * 4];
        let mut choice: Vec<Option<Choice>> = vec![None; states * 4];
        for e in (0..states).rev() {
            for latched in [false, true] {
                for class in [Class::Other, Class::Aggressor] {
                    let mut v_best = 0i128;
                    let mut c_best = None;
                    // last latched boundary of the previous episode
                    let prev_last = if e >= 1 { ((e - 1) / per_rc) * per_rc } else { 0 };
                    for open in e..=grid {
                        let max_here = max_len.min(grid - open);
                        if max_here < min_len {
                            break;
                        }
                        for len in min_len..=max_here {
                            let (charge, weight, first, n) = table[open * (max_len + 1) + len];
                            let next_e = open + len + 1;
                            let next_latched = n > 0;
                            for new_class in [Class::Aggressor, Class::Other] {
                                let gain = if new_class == Class::Aggressor {
                                    let chained = class == Class::Aggressor
                                        && latched
                                        && n > 0
                                        && e >= 1
                                        && first == prev_last + per_rc;
                                    let w = weight as i128 + if chained { one } else { 0 };
                                    charge as i128 * den - w * num
                                } else {
                                    0
                                };
                                let v = gain + value[idx(next_e.min(states - 1), next_latched, new_class)];
                                if v > v_best {
                                    v_best = v;
                                    c_best = Some(Choice { open, len, class: new_class });
                                }
                            }
                        }
                    }
                    value[idx(e, latched, class)] = v_best;
                    choice[idx(e, latched, class)] = c_best;
                }
            }
        }
        let start = idx(0, false, Class::Other);
        if value[start] <= 0 {
            break;
        }
        // walk the optimal schedule and compute its exact ratio
        let mut sched = Vec::new();
        let (mut e, mut latched, mut class) = (0usize, false, Class::Other);
        let (mut sum_c, mut sum_w) = (0u128, 0u128);
        while let Some(c) = choice[idx(e, latched, class)] {
            let (charge, weight, first, n) = table[c.open * (max_len + 1) + c.len];
            if c.class == Class::Aggressor {
                let prev_last = if e >= 1 { ((e - 1) / per_rc) * per_rc } else { 0 };
                let chained = class == Class::Aggressor && latched && n > 0 && e >= 1 && first == prev_last + per_rc;
                sum_c += charge as u128;
                sum_w += weight as u128 + if chained { one as u128 } else { 0 };
            }
            sched.push((c.open, c.len, c.class));
            e = (c.open + c.len + 1).min(states - 1);
            latched = n > 0;
            class = c.class;
        }
        if sum_w == 0 {
            break;
        }
        let r = Ratio::new(Charge::from_raw(sum_c as u64), Charge::from_raw(sum_w as u64));
        let (n2, d2) = (sum_c as i128, sum_w as i128);
        if n2 * den <= num * d2 {
            break;
        }
        num = n2;
        den = d2;
        best = Some((r, sched));
        if iterations > 64 {
            break;
        }
    }
    let (ratio, sched) = best.ok_or_else(|| Error::BudgetTooSmall("no aggressor episode fits the horizon".into()))?;
    let decoy = WITNESS_AGGRESSOR + 4;
    let eps: Vec<Episode> = sched
        .iter()
        .map(|&(open, len, class)| Episode {
            row: if class == Class::Aggressor { WITNESS_AGGRESSOR } else { decoy },
            open: open as Tick * u,
            close: (open + len) as Tick * u,
        })
        .collect();
    let aggressor_episodes = eps.iter().copied().filter(|e| e.row == WITNESS_AGGRESSOR).collect();
    Ok(ExhaustiveResult { ratio, witness: timeline_from_episodes(&eps, WITNESS_ROWS), aggressor_episodes, iterations })
}

/// Runs every search and returns the largest ratio with its witness.
pub fn amplification_search(
    policy: &PolicyConfig,
    cm: &ChargeModel,
    tp: &TimingParams,
    opts: &SearchOptions,
) -> Result<AmplificationResult> {
    policy.check(tp)?;
    let (sweep, phase, t_on) = sweep_single_episode(policy, cm, tp);
    let mut result = AmplificationResult {
        amplification: sweep.to_f64(),
        ratio: sweep,
        source: SearchSource::Sweep,
        sweep,
        exhaustive: None,
        random: None,
        witness: isolated_witness(phase, t_on, tp, 4),
        aggressor: WITNESS_AGGRESSOR,
    };
    if opts.horizon_trc > 0 {
        let ex = exhaustive_search(policy, cm, tp, opts.horizon_trc)?;
        result.exhaustive = Some(ex.ratio);
        if ex.ratio.cmp_exact(&result.ratio) == Ordering::Greater {
            result.ratio = ex.ratio;
            result.source = SearchSource::Exhaustive;
            result.witness = ex.witness;
        }
    }
    if opts.random_trials > 0 {
        let c = RandomConstraints {
            rows: WITNESS_ROWS,
            episodes: opts.random_episodes,
            max_t_on: tp.t_on_max.min(16 * tp.t_rc),
            max_gap: 2 * tp.t_rc,
        };
        let mut best: Option<(Ratio, CommandTimeline, RowId)> = None;
        for i in 0..opts.random_trials {
            let tl = gen_random_legal(opts.seed.wrapping_add(i), &c, tp, WITNESS_ROWS)?;
            for (row, r) in timeline_ratios(policy, cm, tp, &tl)? {
                if best.as_ref().is_none_or(|b| r.cmp_exact(&b.0) == Ordering::Greater) {
                    best = Some((r, tl.clone(), row));
                }
            }
        }
        if let Some((r, tl, row)) = best {
            result.random = Some(r);
            if r.cmp_exact(&result.ratio) == Ordering::Greater {
                result.ratio = r;
                result.source = SearchSource::Random;
                result.witness = tl;
                result.aggressor = row;
            }
        }
    }
    result.amplification = result.ratio.to_f64();
    Ok(result)
}

/// True when every aggressor episode opens on a tRC boundary, stays open
/// for exactly tRC + tRAS and is seen by the tracker as a single event.
pub fn is_boundary_straddling_witness(
    episodes: &[Episode],
    policy: &PolicyConfig,
    cm: &ChargeModel,
    tp: &TimingParams,
) -> bool {
    !episodes.is_empty()
        && episodes.iter().all(|e| {
            e.open % tp.t_rc == 0
                && e.t_on() == tp.t_rc + tp.t_ras
                && episode_ratio(policy, cm, tp, e.open, e.t_on()).weight == Charge::ONE
        })
}
