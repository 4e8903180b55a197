//! Timeline generators for attack patterns and benign streams.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::timing::{CommandTimeline, RowId, Tick, TimingParams};

/// Earliest legal ACT after an episode opened at `open` and closed at `close`.
fn next_act(open: Tick, close: Tick, tp: &TimingParams) -> Tick {
    (open + tp.t_rc).max(close + tp.t_pre)
}

fn check_rows(rows_used: &[RowId], bank_rows: u32) -> Result<()> {
    match rows_used.iter().find(|&&r| r >= bank_rows) {
        Some(&row) => Err(Error::RowOutOfRange { row, rows: bank_rows }),
        None => Ok(()),
    }
}

fn check_ton(t_on: Tick, tp: &TimingParams) -> Result<()> {
    if t_on < tp.t_ras || t_on > tp.t_on_max {
        return Err(Error::TonOutOfRange { ton: t_on, min: tp.t_ras, max: tp.t_on_max });
    }
    Ok(())
}

fn nonempty(aggressors: &[RowId]) -> Result<()> {
    if aggressors.is_empty() {
        return Err(Error::InvalidArgument("at least one aggressor row is required".into()));
    }
    Ok(())
}

/// `rounds` passes over `aggressors`, every episode open for `t_on`.
pub fn gen_rowpress(
    aggressors: &[RowId],
    t_on: Tick,
    rounds: u64,
    tp: &TimingParams,
    bank_rows: u32,
) -> Result<CommandTimeline> {
    nonempty(aggressors)?;
    check_rows(aggressors, bank_rows)?;
    check_ton(t_on, tp)?;
    let mut tl = CommandTimeline::new(bank_rows);
    let mut t = 0;
    for _ in 0..rounds {
        for &row in aggressors {
            tl.push_episode(row, t, t_on);
            t = next_act(t, t + t_on, tp);
        }
    }
    Ok(tl)
}

/// Plain activations at tRC spacing.
pub fn gen_rowhammer(aggressors: &[RowId], rounds: u64, tp: &TimingParams, bank_rows: u32) -> Result<CommandTimeline> {
    gen_rowpress(aggressors, tp.t_ras, rounds, tp, bank_rows)
}

/// Each iteration visits every aggressor with `k_rh` plain activations
/// followed by one episode held open for `t_on`.
pub fn gen_combined_loop(
    aggressors: &[RowId],
    k_rh: u64,
    t_on: Tick,
    iterations: u64,
    tp: &TimingParams,
    bank_rows: u32,
) -> Result<CommandTimeline> {
    nonempty(aggressors)?;
    check_rows(aggressors, bank_rows)?;
    check_ton(t_on, tp)?;
    let mut tl = CommandTimeline::new(bank_rows);
    let mut t = 0;
    for _ in 0..iterations {
        for &row in aggressors {
            for _ in 0..k_rh {
                tl.push_episode(row, t, tp.t_ras);
                t = next_act(t, t + tp.t_ras, tp);
            }
            tl.push_episode(row, t, t_on);
            t = next_act(t, t + t_on, tp);
        }
    }
    Ok(tl)
}

/// Pattern that hides all but one tRC of each aggressor episode from an
/// open-row sampler: the aggressor opens exactly on a tRC boundary and
/// stays open for tRC + tRAS, then a decoy row occupies the bank so no
/// two consecutive boundaries latch the aggressor.
pub fn gen_impressn_evasion(
    aggressor: RowId,
    decoy: RowId,
    rounds: u64,
    refresh_radius: u32,
    tp: &TimingParams,
    bank_rows: u32,
) -> Result<CommandTimeline> {
    check_rows(&[aggressor, decoy], bank_rows)?;
    let min_distance = 2 * refresh_radius + 1;
    if aggressor.abs_diff(decoy) < min_distance {
        return Err(Error::RowsTooClose { aggressor, decoy, min_distance });
    }
    let period = 3 * tp.t_rc;
    let mut tl = CommandTimeline::new(bank_rows);
    for r in 0..rounds {
        let s = r * period;
        tl.push_episode(aggressor, s, tp.t_rc + tp.t_ras);
        tl.push_episode(decoy, s + 2 * tp.t_rc, tp.t_ras);
    }
    Ok(tl)
}

/// Benign sequential scan: each row serves `lines` accesses `interval`
/// ticks apart before the next row opens.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamWorkload {
    pub lines: u64,
    pub interval: Tick,
    pub first_row: RowId,
    pub row_count: u32,
    pub episodes: u64,
}

impl StreamWorkload {
    pub fn t_on(&self, tp: &TimingParams) -> Tick {
        (self.lines * self.interval).clamp(tp.t_ras, tp.t_on_max)
    }
}

pub fn gen_stream(w: &StreamWorkload, tp: &TimingParams, bank_rows: u32) -> Result<CommandTimeline> {
    if w.row_count == 0 || w.lines == 0 {
        return Err(Error::InvalidArgument("stream needs at least one row and one line".into()));
    }
    let last = w.first_row as u64 + w.row_count as u64 - 1;
    if last >= bank_rows as u64 {
        return Err(Error::RowOutOfRange { row: last.min(u32::MAX as u64) as RowId, rows: bank_rows });
    }
    let t_on = w.t_on(tp);
    let mut tl = CommandTimeline::new(bank_rows);
    let mut t = 0;
    for i in 0..w.episodes {
        let row = w.first_row + (i % w.row_count as u64) as RowId;
        tl.push_episode(row, t, t_on);
        t = next_act(t, t + t_on, tp);
    }
    Ok(tl)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomConstraints {
    pub rows: u32,
    pub episodes: u64,
    pub max_t_on: Tick,
    pub max_gap: Tick,
}

/// Random legal timeline (no REF/RFM) drawn from `seed`.
pub fn gen_random_legal(
    seed: u64,
    c: &RandomConstraints,
    tp: &TimingParams,
    bank_rows: u32,
) -> Result<CommandTimeline> {
    if c.rows == 0 || c.rows > bank_rows {
        return Err(Error::InvalidArgument(format!("random row span {} must be in 1..={bank_rows}", c.rows)));
    }
    let max_t_on = c.max_t_on.clamp(tp.t_ras, tp.t_on_max);
    let mut rng = SimRng::new(seed);
    let mut tl = CommandTimeline::new(bank_rows);
    let mut earliest = 0;
    for _ in 0..c.episodes {
        let open = earliest + rng.range_inclusive(0, c.max_gap);
        let t_on = rng.range_inclusive(tp.t_ras, max_t_on);
        let row = rng.range_inclusive(0, c.rows as u64 - 1) as RowId;
        tl.push_episode(row, open, t_on);
        earliest = next_act(open, open + t_on, tp);
    }
    Ok(tl)
}

/// Serializable description of a workload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackSpec {
    Rowhammer {
        aggressors: Vec<RowId>,
        rounds: u64,
    },
    Rowpress {
        aggressors: Vec<RowId>,
        t_on: Tick,
        rounds: u64,
    },
    Combined {
        aggressors: Vec<RowId>,
        k_rh: u64,
        t_on: Tick,
        iterations: u64,
    },
    Evasion {
        aggressor: RowId,
        #[serde(default)]
        decoy: Option<RowId>,
        rounds: u64,
    },
    Stream {
        lines: u64,
        interval: Tick,
        #[serde(default)]
        first_row: RowId,
        row_count: u32,
        episodes: u64,
    },
    Random {
        rows: u32,
        episodes: u64,
        max_t_on: Tick,
        max_gap: Tick,
    },
}

/// Decoy distance used when none is given.
pub const DEFAULT_DECOY_DISTANCE: u32 = 8;

impl AttackSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AttackSpec::Rowhammer { .. } => "rowhammer",
            AttackSpec::Rowpress { .. } => "rowpress",
            AttackSpec::Combined { .. } => "combined",
            AttackSpec::Evasion { .. } => "evasion",
            AttackSpec::Stream { .. } => "stream",
            AttackSpec::Random { .. } => "random",
        }
    }

    pub fn generate(
        &self,
        tp: &TimingParams,
        bank_rows: u32,
        refresh_radius: u32,
        seed: u64,
    ) -> Result<CommandTimeline> {
        match self {
            AttackSpec::Rowhammer { aggressors, rounds } => gen_rowhammer(aggressors, *rounds, tp, bank_rows),
            AttackSpec::Rowpress { aggressors, t_on, rounds } => {
                gen_rowpress(aggressors, *t_on, *rounds, tp, bank_rows)
            }
            AttackSpec::Combined { aggressors, k_rh, t_on, iterations } => {
                gen_combined_loop(aggressors, *k_rh, *t_on, *iterations, tp, bank_rows)
            }
            AttackSpec::Evasion { aggressor, decoy, rounds } => {
                let decoy = decoy.unwrap_or_else(|| {
                    if *aggressor >= DEFAULT_DECOY_DISTANCE {
                        aggressor - DEFAULT_DECOY_DISTANCE
                    } else {
                        aggressor + DEFAULT_DECOY_DISTANCE
                    }
                });
                gen_impressn_evasion(*aggressor, decoy, *rounds, refresh_radius, tp, bank_rows)
            }
            AttackSpec::Stream { lines, interval, first_row, row_count, episodes } => gen_stream(
                &StreamWorkload {
                    lines: *lines,
                    interval: *interval,
                    first_row: *first_row,
                    row_count: *row_count,
                    episodes: *episodes,
                },
                tp,
                bank_rows,
            ),
            AttackSpec::Random { rows, episodes, max_t_on, max_gap } => gen_random_legal(
                seed,
                &RandomConstraints { rows: *rows, episodes: *episodes, max_t_on: *max_t_on, max_gap: *max_gap },
                tp,
                bank_rows,
            ),
        }
    }
}
