//! Event-driven bank simulation.
//!
//! `run` validates a timeline, applies the policy rewrite, schedules
//! refresh, then replays one merged, time-ordered event stream. Events at
//! the same tick are ordered: episode close (charge deposit and flip check),
//! REF and counter-epoch reset, tracker event, demand ACT, RFM.

use std::collections::BTreeMap;

use crate::charge::{neighbors, tcl_unchecked, BlastConfig, ChargeModel, VictimChargeState};
use crate::error::{Error, Result};
use crate::fixed::{Alpha, Charge};
use crate::mitigations::{express_rewrite, policy_events, PolicyConfig, PolicyKind};
use crate::rng::SimRng;
use crate::timing::{
    ns_to_ticks_ceil, row_open_episodes, validate_timeline, Command, CommandKind, CommandTimeline, Episode, RowId,
    Tick, TimingParams,
};
use crate::trackers::{Tracker, TrackerConfig, TrackerKind, WeightedAct};

/// RFM busy time in nanoseconds.
pub const DEFAULT_RFM_LATENCY_NS: u64 = 205;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BankConfig {
    pub rows: u32,
    /// Rows are refreshed round-robin in this many groups, one per REF.
    pub refresh_groups: u32,
    pub postponed_refs: u32,
    /// Schedule REFs when the timeline carries none.
    pub auto_refresh: bool,
    pub rfmth: u32,
    pub rfm_latency: Tick,
}

impl Default for BankConfig {
    fn default() -> Self {
        BankConfig {
            rows: 1024,
            refresh_groups: 16,
            postponed_refs: 4,
            auto_refresh: true,
            rfmth: 80,
            rfm_latency: ns_to_ticks_ceil(DEFAULT_RFM_LATENCY_NS),
        }
    }
}

impl BankConfig {
    pub fn rows_per_group(&self) -> u32 {
        self.rows.div_ceil(self.refresh_groups.max(1))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimSetup {
    pub timing: TimingParams,
    pub bank: BankConfig,
    pub charge: ChargeModel,
    pub blast: BlastConfig,
    pub trh: Charge,
    pub policy: PolicyConfig,
    pub tracker: TrackerConfig,
    /// Counter reset period for trackers that have one.
    pub tracker_epoch: Tick,
    pub seed: u64,
}

impl SimSetup {
    pub fn new(timing: TimingParams) -> Self {
        SimSetup {
            bank: BankConfig::default(),
            charge: ChargeModel::new(Alpha::ZERO),
            blast: BlastConfig::default(),
            trh: Charge::from_int(4000),
            policy: PolicyConfig::new(PolicyKind::NoRp, &timing),
            tracker: TrackerConfig::none(),
            tracker_epoch: timing.t_refw,
            seed: 0,
            timing,
        }
    }

    pub fn check(&self) -> Result<()> {
        self.timing.check()?;
        self.blast.check()?;
        self.policy.check(&self.timing)?;
        if self.bank.rows == 0 || self.bank.refresh_groups == 0 || self.bank.refresh_groups > self.bank.rows {
            return Err(Error::InvalidArgument("need 1 <= refresh_groups <= rows".into()));
        }
        if self.trh == Charge::ZERO {
            return Err(Error::InvalidArgument("threshold must be positive".into()));
        }
        if self.tracker.kind.is_in_dram() {
            if self.bank.rfmth == 0 {
                return Err(Error::InvalidArgument("rfmth must be positive".into()));
            }
            if self.policy.kind == PolicyKind::ExPress {
                return Err(Error::IncompatiblePairing { policy: "express", tracker: self.tracker.kind.name() });
            }
        }
        if self.tracker.kind == TrackerKind::Para && !(0.0..=1.0).contains(&self.tracker.p) {
            return Err(Error::InvalidArgument(format!("PARA probability {} outside [0, 1]", self.tracker.p)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Flip {
    pub row: RowId,
    pub time: Tick,
    pub charge: Charge,
    /// Aggressor episodes that deposited onto the row since its last refresh.
    pub episodes: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimReport {
    pub flips: Vec<Flip>,
    pub peak_charge: BTreeMap<RowId, Charge>,
    pub demand_acts: u64,
    pub mitigative_acts: u64,
    pub mitigations: u64,
    pub rfm_count: u64,
    pub refresh_count: u64,
    pub forced_closes: u64,
    pub tracker_events: u64,
    pub tracker_weight: Charge,
    pub elapsed: Tick,
    pub mitigation_ticks: Tick,
    pub rfm_ticks: Tick,
    pub seed: u64,
    pub workload_id: u64,
}

impl SimReport {
    pub fn flipped(&self) -> bool {
        !self.flips.is_empty()
    }

    pub fn first_flip(&self) -> Option<&Flip> {
        self.flips.first()
    }

    pub fn max_peak(&self) -> Charge {
        self.peak_charge.values().copied().max().unwrap_or(Charge::ZERO)
    }

    /// Time spent on mitigation relative to the workload duration.
    pub fn slowdown(&self) -> f64 {
        if self.elapsed == 0 {
            return 0.0;
        }
        (self.mitigation_ticks + self.rfm_ticks) as f64 / self.elapsed as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverheadBreakdown {
    pub demand: f64,
    pub mitigative: f64,
    pub total: f64,
}

/// Extra activations of `with` over `base`, normalised to the baseline demand.
pub fn count_overheads(base: &SimReport, with: &SimReport) -> Result<OverheadBreakdown> {
    if base.workload_id != with.workload_id {
        return Err(Error::MismatchedWorkload);
    }
    let denom = base.demand_acts.max(1) as f64;
    let demand = (with.demand_acts as f64 - base.demand_acts as f64) / denom;
    let mitigative = (with.mitigative_acts as f64 - base.mitigative_acts as f64) / denom;
    Ok(OverheadBreakdown { demand, mitigative, total: demand + mitigative })
}

/// FNV-1a over the command stream.
pub fn workload_hash(tl: &CommandTimeline) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(tl.bank_rows as u64);
    for c in &tl.commands {
        eat(c.time);
        eat(match c.kind {
            CommandKind::Act(r) => r as u64,
            CommandKind::Pre => 1 << 40,
            CommandKind::Ref => 2 << 40,
            CommandKind::Rfm => 3 << 40,
        });
    }
    h
}

/// REF issue times and the episodes after forced closes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RefreshSchedule {
    pub refs: Vec<Tick>,
    /// Indices of episodes that a REF closed early.
    pub forced: Vec<usize>,
}

/// Schedules a REF every tREFI. A REF that falls due while a row is open
/// waits for the row to close, but no longer than `postponed` intervals;
/// past that the row is closed at the deadline.
pub fn auto_refresh_events(episodes: &mut [Episode], end: Tick, tp: &TimingParams, postponed: u32) -> RefreshSchedule {
    let mut sched = RefreshSchedule::default();
    let mut due = tp.t_refi;
    let grace = postponed as Tick * tp.t_refi;
    for (i, e) in episodes.iter_mut().enumerate() {
        while due <= e.open {
            sched.refs.push(due);
            due += tp.t_refi;
        }
        if due < e.close {
            let deadline = due + grace;
            if e.close > deadline {
                sched.forced.push(i);
                e.close = deadline;
            }
            while due < e.close {
                sched.refs.push(e.close);
                due += tp.t_refi;
            }
        }
    }
    while due <= end {
        sched.refs.push(due);
        due += tp.t_refi;
    }
    sched
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EventKind {
    Close(usize),
    Refresh,
    Epoch,
    Track(usize),
    Act(usize),
}

impl EventKind {
    fn priority(self) -> u8 {
        match self {
            EventKind::Close(_) => 0,
            EventKind::Refresh | EventKind::Epoch => 1,
            EventKind::Track(_) => 2,
            EventKind::Act(_) => 3,
        }
    }
}

/// Runs the simulation and returns the report.
pub fn run(setup: &SimSetup, timeline: &CommandTimeline) -> Result<SimReport> {
    run_with_timeline(setup, timeline).map(|(r, _)| r)
}

/// Runs the simulation and also returns the issued command stream,
/// including scheduled REF and RFM commands.
pub fn run_with_timeline(setup: &SimSetup, timeline: &CommandTimeline) -> Result<(SimReport, CommandTimeline)> {
    setup.check()?;
    let tp = &setup.timing;
    let rows = setup.bank.rows;
    validate_timeline(timeline, tp, setup.bank.postponed_refs)?;
    for c in &timeline.commands {
        if let CommandKind::Act(row) = c.kind {
            if row >= rows {
                return Err(Error::RowOutOfRange { row, rows });
            }
        }
    }
    let workload_id = workload_hash(timeline);

    let rewritten = match setup.policy.kind {
        PolicyKind::ExPress => express_rewrite(timeline, tp, setup.policy.tmro)?,
        _ => timeline.clone(),
    };
    let mut episodes = row_open_episodes(&rewritten)?;
    let end = rewritten.end_time();
    let explicit_refs: Vec<Tick> =
        rewritten.commands.iter().filter(|c| c.kind == CommandKind::Ref).map(|c| c.time).collect();
    let sched = if !explicit_refs.is_empty() {
        RefreshSchedule { refs: explicit_refs, forced: Vec::new() }
    } else if setup.bank.auto_refresh {
        auto_refresh_events(&mut episodes, end, tp, setup.bank.postponed_refs)
    } else {
        RefreshSchedule::default()
    };

    let acts = policy_events(&setup.policy, &episodes, tp);
    let in_dram = setup.tracker.kind.is_in_dram();

    let mut events: Vec<(Tick, u8, EventKind)> = Vec::with_capacity(episodes.len() * 3 + acts.len());
    for (i, e) in episodes.iter().enumerate() {
        events.push((e.open, EventKind::Act(i).priority(), EventKind::Act(i)));
        events.push((e.close, EventKind::Close(i).priority(), EventKind::Close(i)));
    }
    for (i, a) in acts.iter().enumerate() {
        events.push((a.time, 2, EventKind::Track(i)));
    }
    for &t in &sched.refs {
        events.push((t, 1, EventKind::Refresh));
    }
    if setup.tracker.kind == TrackerKind::Graphene && setup.tracker_epoch > 0 {
        let mut t = setup.tracker_epoch;
        while t <= end {
            events.push((t, 1, EventKind::Epoch));
            t += setup.tracker_epoch;
        }
    }
    // stable sort keeps insertion order within (time, priority)
    events.sort_by_key(|&(t, p, k)| (t, p, matches!(k, EventKind::Epoch)));

    let mut sim = Sim {
        setup,
        state: VictimChargeState::new(rows),
        tracker: Tracker::from_config(&setup.tracker, SimRng::new(setup.seed).split(1)),
        flipped: vec![false; rows as usize],
        deposits: vec![0; rows as usize],
        report: SimReport {
            flips: Vec::new(),
            peak_charge: BTreeMap::new(),
            demand_acts: 0,
            mitigative_acts: 0,
            mitigations: 0,
            rfm_count: 0,
            refresh_count: 0,
            forced_closes: sched.forced.len() as u64,
            tracker_events: 0,
            tracker_weight: Charge::ZERO,
            elapsed: end,
            mitigation_ticks: 0,
            rfm_ticks: 0,
            seed: setup.seed,
            workload_id,
        },
        raa: 0,
        next_group: 0,
    };

    let mut rfm_pending = false;
    let mut issued: Vec<(Tick, u8, Command)> = Vec::new();
    let emit_closing =
        |i: usize| if sched.forced.binary_search(&i).is_ok() { CommandKind::Ref } else { CommandKind::Pre };

    for &(t, _, kind) in &events {
        match kind {
            EventKind::Close(i) => {
                let e = episodes[i];
                sim.close_episode(&e)?;
                let k = emit_closing(i);
                if k == CommandKind::Pre {
                    issued.push((t, 0, Command { kind: k, time: t }));
                }
                if rfm_pending && in_dram {
                    rfm_pending = false;
                    issued.push((t, 2, Command::rfm(t)));
                    sim.rfm(t);
                }
            }
            EventKind::Refresh => {
                issued.push((t, 1, Command::refresh(t)));
                sim.refresh_group(t);
            }
            EventKind::Epoch => sim.tracker.reset_epoch(),
            EventKind::Track(i) => sim.track(&acts[i]),
            EventKind::Act(i) => {
                let e = episodes[i];
                issued.push((t, 3, Command::act(e.row, t)));
                sim.report.demand_acts += 1;
                if in_dram {
                    sim.raa += 1;
                    if sim.raa >= setup.bank.rfmth {
                        sim.raa = 0;
                        rfm_pending = true;
                    }
                }
            }
        }
    }
    issued.sort_by_key(|&(t, p, _)| (t, p));
    let mut out = CommandTimeline::new(timeline.bank_rows);
    out.commands = issued.into_iter().map(|(_, _, c)| c).collect();
    Ok((sim.report, out))
}

struct Sim<'a> {
    setup: &'a SimSetup,
    state: VictimChargeState,
    tracker: Tracker,
    flipped: Vec<bool>,
    deposits: Vec<u64>,
    report: SimReport,
    raa: u32,
    next_group: u32,
}

impl Sim<'_> {
    fn close_episode(&mut self, e: &Episode) -> Result<()> {
        let amount = tcl_unchecked(e.t_on(), &self.setup.charge, &self.setup.timing);
        let trh = self.setup.trh;
        let flipped = &mut self.flipped;
        let deposits = &mut self.deposits;
        let peaks = &mut self.report.peak_charge;
        let flips = &mut self.report.flips;
        self.state.deposit(e.row, amount, &self.setup.blast, |v, c| {
            deposits[v as usize] += 1;
            let p = peaks.entry(v).or_insert(Charge::ZERO);
            *p = (*p).max(c);
            if c >= trh && !flipped[v as usize] {
                flipped[v as usize] = true;
                flips.push(Flip { row: v, time: e.close, charge: c, episodes: deposits[v as usize] });
            }
        })
    }

    fn refresh(&mut self, rows: impl IntoIterator<Item = RowId>, now: Tick) -> u64 {
        let mut n = 0;
        for r in rows {
            self.flipped[r as usize] = false;
            self.deposits[r as usize] = 0;
            self.state.refresh_rows([r], now);
            n += 1;
        }
        n
    }

    fn refresh_group(&mut self, now: Tick) {
        let per = self.setup.bank.rows_per_group();
        let lo = self.next_group * per;
        let hi = (lo + per).min(self.setup.bank.rows);
        self.refresh(lo..hi, now);
        self.next_group = (self.next_group + 1) % self.setup.bank.refresh_groups;
        self.report.refresh_count += 1;
    }

    fn mitigate(&mut self, target: RowId, now: Tick) {
        let rows = self.setup.bank.rows;
        let n = self.refresh(neighbors(target, self.setup.blast.refresh_radius, rows).collect::<Vec<_>>(), now);
        self.report.mitigations += 1;
        self.report.mitigative_acts += n;
        self.report.mitigation_ticks += n * self.setup.timing.t_rc;
    }

    fn track(&mut self, ev: &WeightedAct) {
        self.report.tracker_events += 1;
        self.report.tracker_weight += ev.weight;
        if let Some(target) = self.tracker.on_act(ev) {
            self.mitigate(target, ev.time);
        }
    }

    fn rfm(&mut self, now: Tick) {
        self.report.rfm_count += 1;
        self.report.rfm_ticks += self.setup.bank.rfm_latency;
        if let Some(target) = self.tracker.on_rfm() {
            let before = self.report.mitigation_ticks;
            self.mitigate(target, now);
            // in-DRAM mitigation runs inside the RFM window
            self.report.mitigation_ticks = before;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::{gen_random_legal, gen_rowhammer, gen_rowpress, RandomConstraints};
    use crate::fixed::FRAC_BITS;
    use crate::mitigations::eact;
    use crate::timing::default_timing;
    use crate::trackers::graphene_secure_threshold;
    use proptest::prelude::*;

    fn quiet_setup(trh: u64) -> SimSetup {
        let mut s = SimSetup::new(default_timing());
        s.bank.auto_refresh = false;
        s.bank.rows = 64;
        s.trh = Charge::from_int(trh);
        s
    }

    #[test]
    fn flips_exactly_at_threshold_without_tracker() {
        let s = quiet_setup(50);
        let tp = s.timing;
        let r = run(&s, &gen_rowhammer(&[20], 49, &tp, 64).unwrap()).unwrap();
        assert!(!r.flipped());
        let r = run(&s, &gen_rowhammer(&[20], 50, &tp, 64).unwrap()).unwrap();
        let rows: Vec<_> = r.flips.iter().map(|f| f.row).collect();
        assert_eq!(rows, vec![19, 21]);
        assert_eq!(r.flips[0].episodes, 50);
        assert_eq!(r.flips[0].charge, Charge::from_int(50));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let mut s = quiet_setup(40);
        s.bank.auto_refresh = true;
        s.tracker = TrackerConfig::para(0.02);
        s.seed = 11;
        let tl = gen_rowpress(&[10, 12], 400, 300, &s.timing, 64).unwrap();
        let a = run(&s, &tl).unwrap();
        assert_eq!(a, run(&s, &tl).unwrap());
        s.seed = 12;
        assert_eq!(a.workload_id, run(&s, &tl).unwrap().workload_id);
    }

    #[test]
    fn rowpress_issues_fewer_acts_per_time() {
        let mut s = quiet_setup(100_000);
        s.charge = ChargeModel::new(Alpha::ONE);
        let tp = s.timing;
        let rh = run(&s, &gen_rowhammer(&[5], 200, &tp, 64).unwrap()).unwrap();
        let rp = run(&s, &gen_rowpress(&[5], 1000, 200, &tp, 64).unwrap()).unwrap();
        assert_eq!(rh.demand_acts, rp.demand_acts);
        assert!(rp.elapsed > 5 * rh.elapsed);
        assert!(rp.max_peak() > rh.max_peak());
    }

    #[test]
    fn rfm_cadence_and_pairing() {
        let mut s = quiet_setup(1000);
        s.tracker = TrackerConfig::mint(8);
        s.bank.rfmth = 8;
        let tl = gen_rowhammer(&[3, 9], 40, &s.timing, 64).unwrap();
        let r = run(&s, &tl).unwrap();
        assert_eq!(r.rfm_count, 10);
        assert_eq!(r.mitigations, 10);
        assert_eq!(r.rfm_ticks, 10 * s.bank.rfm_latency);
        s.policy.kind = PolicyKind::ExPress;
        assert!(matches!(run(&s, &tl), Err(Error::IncompatiblePairing { .. })));
    }

    #[test]
    fn refresh_postponement_and_forced_close() {
        let mut s = quiet_setup(100_000);
        s.bank.auto_refresh = true;
        let tp = s.timing;
        let tl = gen_rowpress(&[7], tp.t_refi * 2, 3, &tp, 64).unwrap();
        let (r, issued) = run_with_timeline(&s, &tl).unwrap();
        assert_eq!(r.forced_closes, 0);
        assert!(r.refresh_count >= 5);
        validate_timeline(&issued, &tp, s.bank.postponed_refs).unwrap();
        s.bank.postponed_refs = 0;
        let (r, issued) = run_with_timeline(&s, &tl).unwrap();
        assert!(r.forced_closes > 0);
        validate_timeline(&issued, &tp, 0).unwrap();
    }

    #[test]
    fn overheads_require_same_workload() {
        let s = quiet_setup(1000);
        let a = run(&s, &gen_rowhammer(&[3], 10, &s.timing, 64).unwrap()).unwrap();
        let b = run(&s, &gen_rowhammer(&[3], 11, &s.timing, 64).unwrap()).unwrap();
        assert!(matches!(count_overheads(&a, &b), Err(Error::MismatchedWorkload)));
        let o = count_overheads(&a, &a).unwrap();
        assert_eq!(o.total, 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        // With a threshold sized for the largest episode weight, no
        // timeline flips a row under Graphene and ImPress-P.
        #[test]
        fn graphene_impress_p_never_flips(seed in any::<u64>(), alpha in 0u32..=10_000, rows in 3u32..10) {
            let mut s = quiet_setup(64);
            s.bank.auto_refresh = true;
            s.bank.refresh_groups = 16;
            s.charge = ChargeModel::new(Alpha::from_parts(alpha).unwrap());
            s.policy.kind = PolicyKind::ImPressP;
            let max_t_on = 600;
            let w = eact(max_t_on, &s.timing, FRAC_BITS);
            s.tracker = TrackerConfig::graphene(4, graphene_secure_threshold(s.trh, w));
            let c = RandomConstraints { rows, episodes: 3000, max_t_on, max_gap: 64 };
            let tl = gen_random_legal(seed, &c, &s.timing, 64).unwrap();
            let r = run(&s, &tl).unwrap();
            prop_assert!(!r.flipped(), "{:?}", r.first_flip());
        }
    }
}
