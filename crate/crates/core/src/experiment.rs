//! Orchestration behind the command-line tool: sweep execution and the
//! closed-form tables.

use rayon::prelude::*;

use crate::analysis::{
    effective_threshold, graphene_attack_slowdown, para_attack_slowdown, precision_relative_threshold,
};
use crate::charge::ChargeModel;
use crate::config::ExperimentConfig;
use crate::engine::run_with_timeline;
use crate::error::{Error, Result};
use crate::fixed::Alpha;
use crate::mitigations::express_effective_threshold;
use crate::report::{sim_row, ReportTable, RowContext, SIM_COLUMNS};
use crate::timing::{default_timing, CommandTimeline};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides `run.seed` as the first trial seed.
    pub seed_base: Option<u64>,
    pub jobs: usize,
    pub keep_timelines: bool,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub table: ReportTable,
    /// Issued timelines (with REF/RFM) keyed by `point<i>_seed<s>`, when requested.
    pub timelines: Vec<(String, CommandTimeline)>,
    pub runs: usize,
    pub flipped_runs: usize,
}

/// Runs every sweep point for every seed. Rows come out in sweep order, then
/// seed order, whatever the thread count.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let points = cfg.expand()?;
    let mut jobs = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let seeded = p.params.iter().any(|(k, _)| k == "seed");
        if seeded {
            jobs.push((i, p.config.run.seed));
        } else {
            let base = opts.seed_base.unwrap_or(p.config.run.seed);
            for t in 0..p.config.run.trials.max(1) {
                jobs.push((i, base.wrapping_add(t)));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let label = cfg.name.clone().unwrap_or_else(|| "run".into());
    let results: Vec<_> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, seed)| {
                let mut c = points[i].config.clone();
                c.run.seed = seed;
                let setup = c.to_setup()?;
                let tl = c.timeline()?;
                let (report, issued) = run_with_timeline(&setup, &tl)?;
                let ctx = RowContext {
                    label: label.clone(),
                    params: points[i].params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";"),
                    policy: setup.policy.kind.name().into(),
                    tracker: setup.tracker.kind.name().into(),
                    alpha: c.oracle.alpha.to_f64().to_string(),
                    trh: c.oracle.trh.to_string(),
                };
                Ok((format!("point{i}_seed{seed}"), sim_row(&ctx, &report), report.flipped(), issued))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut out = ExperimentOutput {
        table: ReportTable::new(SIM_COLUMNS),
        timelines: Vec::new(),
        runs: results.len(),
        flipped_runs: 0,
    };
    for (name, row, flipped, issued) in results {
        out.table.push(row)?;
        out.flipped_runs += flipped as usize;
        if opts.keep_timelines {
            out.timelines.push((name, issued));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyticKind {
    Precision,
    GrapheneSlowdown,
    ParaSlowdown,
    EffectiveThreshold,
    ExpressTstar,
}

impl AnalyticKind {
    pub const ALL: [AnalyticKind; 5] = [
        AnalyticKind::Precision,
        AnalyticKind::GrapheneSlowdown,
        AnalyticKind::ParaSlowdown,
        AnalyticKind::EffectiveThreshold,
        AnalyticKind::ExpressTstar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnalyticKind::Precision => "precision",
            AnalyticKind::GrapheneSlowdown => "graphene_slowdown",
            AnalyticKind::ParaSlowdown => "para_slowdown",
            AnalyticKind::EffectiveThreshold => "effective_threshold",
            AnalyticKind::ExpressTstar => "express_tstar",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            Error::InvalidArgument(format!("unknown analytic kind '{s}' (expected one of {})", names.join(", ")))
        })
    }
}

/// Axis values for the closed-form tables. Unset axes fall back to a default.
#[derive(Clone, Debug, Default)]
pub struct AnalyticArgs {
    pub bits: Option<Vec<u64>>,
    pub trh: Option<Vec<f64>>,
    pub k: Option<Vec<u64>>,
    pub p: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
    pub amplification: Option<Vec<f64>>,
    pub tmro: Option<Vec<u64>>,
}

pub fn analytic_table(kind: AnalyticKind, a: &AnalyticArgs) -> Result<ReportTable> {
    let or = |v: &Option<Vec<f64>>, d: &[f64]| v.clone().unwrap_or_else(|| d.to_vec());
    let ks = a.k.clone().unwrap_or_else(|| (0..=100).collect());
    let mut t;
    match kind {
        AnalyticKind::Precision => {
            t = ReportTable::new(&["bits", "relative_threshold"]);
            for b in a.bits.clone().unwrap_or_else(|| (0..=7).collect()) {
                let b = u32::try_from(b).map_err(|_| Error::InvalidArgument(format!("bits {b} out of range")))?;
                t.push(vec![b.to_string(), format!("{:.6}", precision_relative_threshold(b))])?;
            }
        }
        AnalyticKind::GrapheneSlowdown => {
            t = ReportTable::new(&["trh", "k", "slowdown"]);
            for trh in or(&a.trh, &[1000.0, 2000.0, 4000.0]) {
                positive("trh", trh)?;
                for &k in &ks {
                    t.push(vec![trh.to_string(), k.to_string(), format!("{:.6}", graphene_attack_slowdown(trh))])?;
                }
            }
        }
        AnalyticKind::ParaSlowdown => {
            t = ReportTable::new(&["p", "k", "slowdown"]);
            for p in or(&a.p, &[1.0 / 84.0]) {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::InvalidArgument(format!("p must lie in (0, 1], got {p}")));
                }
                for &k in &ks {
                    t.push(vec![format!("{p:.6}"), k.to_string(), format!("{:.6}", para_attack_slowdown(p, k))])?;
                }
            }
        }
        AnalyticKind::EffectiveThreshold => {
            t = ReportTable::new(&["trh", "amplification", "effective_threshold"]);
            for trh in or(&a.trh, &[4000.0]) {
                positive("trh", trh)?;
                for amp in or(&a.amplification, &[1.0, 1.35, 2.0]) {
                    if amp < 1.0 {
                        return Err(Error::InvalidArgument(format!("amplification must be at least 1, got {amp}")));
                    }
                    t.push(vec![trh.to_string(), amp.to_string(), format!("{:.3}", effective_threshold(trh, amp))])?;
                }
            }
        }
        AnalyticKind::ExpressTstar => {
            let tp = default_timing();
            t = ReportTable::new(&["trh", "alpha", "tmro", "threshold"]);
            let tmros = a.tmro.clone().unwrap_or_else(|| vec![tp.t_ras, tp.t_ras + tp.t_rc]);
            for trh in or(&a.trh, &[4000.0]) {
                positive("trh", trh)?;
                for alpha in or(&a.alpha, &[0.35, 1.0]) {
                    let cm = ChargeModel::new(Alpha::from_f64(alpha)?);
                    for &tmro in &tmros {
                        if tmro < tp.t_ras || tmro > tp.t_on_max {
                            return Err(Error::InvalidArgument(format!(
                                "tmro must lie in [{}, {}] ticks, got {tmro}",
                                tp.t_ras, tp.t_on_max
                            )));
                        }
                        let v = express_effective_threshold(trh, tmro, &cm, &tp);
                        t.push(vec![trh.to_string(), alpha.to_string(), tmro.to_string(), format!("{v:.3}")])?;
                    }
                }
            }
        }
    }
    Ok(t)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// `a..b` (inclusive) or a comma-separated list.
pub fn parse_int_axis(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidArgument(format!("cannot parse '{s}' as an integer range or list"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect()
}

/// Comma-separated numbers; each may be a fraction such as `1/84`.
pub fn parse_real_axis(s: &str) -> Result<Vec<f64>> {
    let bad = |v: &str| Error::InvalidArgument(format!("cannot parse '{v}' as a number"));
    s.split(',')
        .map(|v| {
            let v = v.trim();
            match v.split_once('/') {
                Some((n, d)) => {
                    let n: f64 = n.trim().parse().map_err(|_| bad(v))?;
                    let d: f64 = d.trim().parse().map_err(|_| bad(v))?;
                    if d == 0.0 {
                        return Err(bad(v));
                    }
                    Ok(n / d)
                }
                None => v.parse().map_err(|_| bad(v)),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes_parse() {
        assert_eq!(parse_int_axis("0..3").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_int_axis("1000,2000").unwrap(), vec![1000, 2000]);
        assert!(parse_int_axis("5..2").is_err());
        assert_eq!(parse_real_axis("1/84, 0.5").unwrap(), vec![1.0 / 84.0, 0.5]);
        assert!(parse_real_axis("1/0").is_err());
    }

    #[test]
    fn graphene_table_is_flat_in_k() {
        let a = AnalyticArgs { trh: Some(vec![1000.0]), k: Some((0..=200).collect()), ..Default::default() };
        let t = analytic_table(AnalyticKind::GrapheneSlowdown, &a).unwrap();
        assert_eq!(t.rows.len(), 201);
        assert!(t.rows.iter().all(|r| r[2] == "0.008000"));
    }

    #[test]
    fn precision_table_ends_at_one() {
        let t = analytic_table(AnalyticKind::Precision, &AnalyticArgs::default()).unwrap();
        assert_eq!(t.rows.len(), 8);
        assert_eq!(t.rows[0][1], "0.500000");
        assert_eq!(t.rows[7][1], "1.000000");
    }

    #[test]
    fn unknown_kind_is_rejected() {
        assert!(AnalyticKind::parse("histogram").is_err());
        assert_eq!(AnalyticKind::parse("express_tstar").unwrap(), AnalyticKind::ExpressTstar);
    }
}
