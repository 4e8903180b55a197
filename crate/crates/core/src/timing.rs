//! DRAM timing parameters, the command vocabulary and timeline legality.
//!
//! Time is an integer tick count at 8/3 ticks per ns (2.66 GHz), which makes
//! tRC exactly 128 ticks in the DDR5 profile.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Rule, TimelineError};

pub type Tick = u64;
pub type RowId = u32;

/// Ticks per ns as an exact ratio.
pub const TICKS_PER_NS: (u64, u64) = (8, 3);

/// Number of refresh groups a full DDR5 bank is split into.
pub const DDR5_REFRESH_GROUPS: u64 = 8192;

/// Converts whole nanoseconds to ticks; fails unless the result is integral.
pub fn ns_to_ticks(ns: u64) -> Option<Tick> {
    let (num, den) = TICKS_PER_NS;
    let scaled = ns * num;
    scaled.is_multiple_of(den).then_some(scaled / den)
}

/// Converts nanoseconds to ticks, rounding up.
pub fn ns_to_ticks_ceil(ns: u64) -> Tick {
    let (num, den) = TICKS_PER_NS;
    (ns * num).div_ceil(den)
}

pub fn ticks_to_ns(t: Tick) -> f64 {
    let (num, den) = TICKS_PER_NS;
    t as f64 * den as f64 / num as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingParams {
    pub t_act: Tick,
    pub t_pre: Tick,
    pub t_ras: Tick,
    pub t_rc: Tick,
    pub t_refw: Tick,
    pub t_refi: Tick,
    pub t_rfc: Tick,
    pub t_on_max: Tick,
}

/// DDR5 timings in ns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingNs {
    pub t_act_ns: u64,
    pub t_pre_ns: u64,
    pub t_ras_ns: u64,
    pub t_rc_ns: u64,
    pub t_refi_ns: u64,
    pub t_rfc_ns: u64,
    pub t_on_max_ns: u64,
}

impl Default for TimingNs {
    fn default() -> Self {
        TimingNs {
            t_act_ns: 12,
            t_pre_ns: 12,
            t_ras_ns: 36,
            t_rc_ns: 48,
            t_refi_ns: 3900,
            t_rfc_ns: 350,
            t_on_max_ns: 19_500,
        }
    }
}

/// The DDR5 profile in ticks.
///
/// tRFC (350 ns) does not land on the tick grid and is rounded up to 934
/// ticks. tREFW is taken as 8192 × tREFI so that one REF per tREFI covers
/// every refresh group exactly once per window.
pub fn default_timing() -> TimingParams {
    let ns = TimingNs::default();
    let mut tp = TimingParams::from_ns(&TimingNs { t_rfc_ns: 0, ..ns }).expect("DDR5 profile lands on the tick grid");
    tp.t_rfc = ns_to_ticks_ceil(ns.t_rfc_ns);
    tp
}

impl Default for TimingParams {
    fn default() -> Self {
        default_timing()
    }
}

impl TimingParams {
    /// Exact conversion; every value must land on an integer tick.
    /// A zero `t_rfc_ns` is allowed and left at zero for the caller to fill.
    pub fn from_ns(ns: &TimingNs) -> Result<Self, ConfigError> {
        let conv = |key: &str, v: u64| {
            ns_to_ticks(v).ok_or_else(|| {
                ConfigError::invalid(key, format!("{v} ns is not a whole number of ticks at 8/3 ticks/ns"))
            })
        };
        let t_refi = conv("t_refi_ns", ns.t_refi_ns)?;
        let tp = TimingParams {
            t_act: conv("t_act_ns", ns.t_act_ns)?,
            t_pre: conv("t_pre_ns", ns.t_pre_ns)?,
            t_ras: conv("t_ras_ns", ns.t_ras_ns)?,
            t_rc: conv("t_rc_ns", ns.t_rc_ns)?,
            t_refw: t_refi * DDR5_REFRESH_GROUPS,
            t_refi,
            t_rfc: conv("t_rfc_ns", ns.t_rfc_ns)?,
            t_on_max: conv("t_on_max_ns", ns.t_on_max_ns)?,
        };
        tp.check()?;
        Ok(tp)
    }

    /// Checks the structural invariants of a profile.
    pub fn check(&self) -> Result<(), ConfigError> {
        let fields = [
            ("t_act", self.t_act),
            ("t_pre", self.t_pre),
            ("t_ras", self.t_ras),
            ("t_rc", self.t_rc),
            ("t_refw", self.t_refw),
            ("t_refi", self.t_refi),
            ("t_on_max", self.t_on_max),
        ];
        for (key, v) in fields {
            if v == 0 {
                return Err(ConfigError::invalid(key, "must be positive"));
            }
        }
        if self.t_ras + self.t_pre != self.t_rc {
            return Err(ConfigError::invalid("t_rc", "tRAS + tPRE must equal tRC"));
        }
        if self.t_on_max > 5 * self.t_refi {
            return Err(ConfigError::invalid("t_on_max", "must not exceed 5 x tREFI"));
        }
        if self.t_on_max < self.t_ras {
            return Err(ConfigError::invalid("t_on_max", "must be at least tRAS"));
        }
        Ok(())
    }

    /// `x / tRC`, as a shift when tRC is a power of two.
    pub fn div_trc(&self, x: Tick) -> Tick {
        if self.t_rc.is_power_of_two() {
            x >> self.t_rc.trailing_zeros()
        } else {
            x / self.t_rc
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CommandKind {
    Act(RowId),
    Pre,
    Ref,
    Rfm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Command {
    pub kind: CommandKind,
    pub time: Tick,
}

impl Command {
    pub fn act(row: RowId, time: Tick) -> Self {
        Command { kind: CommandKind::Act(row), time }
    }
    pub fn pre(time: Tick) -> Self {
        Command { kind: CommandKind::Pre, time }
    }
    pub fn refresh(time: Tick) -> Self {
        Command { kind: CommandKind::Ref, time }
    }
    pub fn rfm(time: Tick) -> Self {
        Command { kind: CommandKind::Rfm, time }
    }
}

/// Ordered commands for one bank.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CommandTimeline {
    pub commands: Vec<Command>,
    pub bank_rows: u32,
}

/// One row-open interval: the row is open on `[open, close)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Episode {
    pub row: RowId,
    pub open: Tick,
    pub close: Tick,
}

impl Episode {
    pub fn t_on(&self) -> Tick {
        self.close - self.open
    }
}

impl CommandTimeline {
    pub fn new(bank_rows: u32) -> Self {
        CommandTimeline { commands: Vec::new(), bank_rows }
    }

    pub fn push(&mut self, c: Command) {
        self.commands.push(c);
    }

    /// ACT at `open`, PRE at `open + t_on`.
    pub fn push_episode(&mut self, row: RowId, open: Tick, t_on: Tick) {
        self.push(Command::act(row, open));
        self.push(Command::pre(open + t_on));
    }

    pub fn len(&self) -> usize {
        self.commands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }

    pub fn end_time(&self) -> Tick {
        self.commands.last().map_or(0, |c| c.time)
    }

    pub fn act_count(&self) -> usize {
        self.commands.iter().filter(|c| matches!(c.kind, CommandKind::Act(_))).count()
    }

    /// Serializes to the line-oriented text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("rows={}\n", self.bank_rows);
        for c in &self.commands {
            let _ = match c.kind {
                CommandKind::Act(r) => writeln!(out, "ACT {r} @{}", c.time),
                CommandKind::Pre => writeln!(out, "PRE @{}", c.time),
                CommandKind::Ref => writeln!(out, "REF @{}", c.time),
                CommandKind::Rfm => writeln!(out, "RFM @{}", c.time),
            };
        }
        out
    }

    /// Parses the text format. Blank lines and `#` comments are ignored.
    pub fn parse_text(text: &str) -> Result<Self, TimelineError> {
        let err = |line: usize, message: String| TimelineError::Parse { line, message };
        let mut rows = None;
        let mut commands = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if rows.is_none() {
                let n = line.strip_prefix("rows=").ok_or_else(|| err(line_no, "expected header `rows=<n>`".into()))?;
                let n: u32 = n.trim().parse().map_err(|_| err(line_no, format!("bad row count `{n}`")))?;
                rows = Some(n);
                continue;
            }
            let mut parts = line.split_whitespace();
            let op = parts.next().unwrap_or_default();
            let mut rest: Vec<&str> = parts.collect();
            let time_tok = rest.pop().ok_or_else(|| err(line_no, "missing `@<tick>`".into()))?;
            let time: Tick = time_tok
                .strip_prefix('@')
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err(line_no, format!("bad time `{time_tok}`")))?;
            let kind = match (op, rest.as_slice()) {
                ("ACT", [row]) => CommandKind::Act(row.parse().map_err(|_| err(line_no, format!("bad row `{row}`")))?),
                ("PRE", []) => CommandKind::Pre,
                ("REF", []) => CommandKind::Ref,
                ("RFM", []) => CommandKind::Rfm,
                _ => return Err(err(line_no, format!("unrecognized command `{line}`"))),
            };
            commands.push(Command { kind, time });
        }
        let bank_rows = rows.ok_or_else(|| err(1, "missing header `rows=<n>`".into()))?;
        Ok(CommandTimeline { commands, bank_rows })
    }
}

/// Checks command legality against `tp`.
///
/// REF cadence is only checked for timelines that carry REF commands;
/// attack timelines without REFs get refresh scheduled by the engine.
pub fn validate_timeline(
    tl: &CommandTimeline,
    tp: &TimingParams,
    postponed_refs_allowed: u32,
) -> Result<(), TimelineError> {
    if tl.is_empty() {
        return Err(TimelineError::EmptyTimeline);
    }
    let violation = |index: usize, time: Tick, rule: Rule| Err(TimelineError::Violation { index, time, rule });
    let mut prev_time = 0;
    let mut open: Option<Tick> = None;
    let mut last_act: Option<Tick> = None;
    let mut last_close: Option<Tick> = None;
    let has_refs = tl.commands.iter().any(|c| c.kind == CommandKind::Ref);
    let max_ref_gap = (1 + postponed_refs_allowed as u64) * tp.t_refi;
    let mut last_ref = 0;

    for (i, c) in tl.commands.iter().enumerate() {
        let t = c.time;
        if t < prev_time {
            return violation(i, t, Rule::Monotonic);
        }
        prev_time = t;
        if has_refs && t - last_ref > max_ref_gap {
            return violation(i, t, Rule::RefCadence);
        }
        match c.kind {
            CommandKind::Act(row) => {
                if row >= tl.bank_rows {
                    return violation(i, t, Rule::RowRange);
                }
                if open.is_some() {
                    return violation(i, t, Rule::DoubleAct);
                }
                if last_act.is_some_and(|a| t - a < tp.t_rc) {
                    return violation(i, t, Rule::Trc);
                }
                if last_close.is_some_and(|p| t - p < tp.t_pre) {
                    return violation(i, t, Rule::Tpre);
                }
                open = Some(t);
                last_act = Some(t);
            }
            CommandKind::Pre | CommandKind::Ref => {
                if let Some(a) = open.take() {
                    let t_on = t - a;
                    if t_on < tp.t_ras {
                        return violation(i, t, Rule::Tras);
                    }
                    if t_on > tp.t_on_max {
                        return violation(i, t, Rule::TonMax);
                    }
                    last_close = Some(t);
                }
                if c.kind == CommandKind::Ref {
                    last_ref = t;
                }
            }
            CommandKind::Rfm => {
                if open.is_some() {
                    return violation(i, t, Rule::RfmWhileOpen);
                }
            }
        }
    }
    if has_refs && tl.end_time() - last_ref > max_ref_gap {
        return violation(tl.len() - 1, tl.end_time(), Rule::RefCadence);
    }
    Ok(())
}

/// One episode per ACT, closed by the next PRE or REF.
pub fn row_open_episodes(tl: &CommandTimeline) -> Result<Vec<Episode>, TimelineError> {
    let mut out = Vec::with_capacity(tl.len() / 2);
    let mut open: Option<(RowId, Tick)> = None;
    for c in &tl.commands {
        match c.kind {
            CommandKind::Act(row) => {
                if let Some((r, t)) = open {
                    // validate_timeline rejects this; close defensively at the new ACT
                    out.push(Episode { row: r, open: t, close: c.time });
                }
                open = Some((row, c.time));
            }
            CommandKind::Pre | CommandKind::Ref => {
                if let Some((row, t)) = open.take() {
                    out.push(Episode { row, open: t, close: c.time });
                }
            }
            CommandKind::Rfm => {}
        }
    }
    if let Some((row, open_time)) = open {
        return Err(TimelineError::UnclosedRow { row, open_time });
    }
    Ok(out)
}

/// Rebuilds a timeline of ACT/PRE pairs from episodes.
pub fn timeline_from_episodes(episodes: &[Episode], bank_rows: u32) -> CommandTimeline {
    let mut tl = CommandTimeline::new(bank_rows);
    for e in episodes {
        tl.push_episode(e.row, e.open, e.t_on());
    }
    tl
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tl(rows: u32, cmds: &[Command]) -> CommandTimeline {
        CommandTimeline { commands: cmds.to_vec(), bank_rows: rows }
    }

    #[test]
    fn ddr5_profile() {
        let tp = default_timing();
        assert_eq!(tp.t_rc, 128);
        assert_eq!(tp.t_ras, 96);
        assert_eq!(tp.t_pre, 32);
        assert_eq!(tp.t_ras + tp.t_pre, tp.t_rc);
        assert_eq!(tp.t_on_max / tp.t_refi, 5);
        assert_eq!(tp.t_on_max % tp.t_refi, 0);
        assert_eq!(tp.t_refi, 10_400);
        assert_eq!(tp.t_on_max, 52_000);
    }

    #[test]
    fn non_integral_ns_is_rejected() {
        let ns = TimingNs { t_refi_ns: 3901, ..TimingNs::default() };
        let e = TimingParams::from_ns(&ns).unwrap_err();
        assert_eq!(e.key, "t_refi_ns");
    }

    #[test]
    fn minimal_legal_timeline() {
        let tp = default_timing();
        let t = tl(2, &[Command::act(0, 0), Command::pre(96), Command::act(1, 128), Command::pre(224)]);
        assert_eq!(validate_timeline(&t, &tp, 4), Ok(()));
    }

    #[test]
    fn tras_violation() {
        let tp = default_timing();
        let t = tl(1, &[Command::act(0, 0), Command::pre(50)]);
        assert_eq!(validate_timeline(&t, &tp, 4).unwrap_err().rule(), Some(Rule::Tras));
    }

    #[test]
    fn ton_max_boundary() {
        let tp = default_timing();
        let ok = tl(1, &[Command::act(0, 0), Command::pre(52_000)]);
        assert_eq!(validate_timeline(&ok, &tp, 4), Ok(()));
        let bad = tl(1, &[Command::act(0, 0), Command::pre(52_001)]);
        assert_eq!(validate_timeline(&bad, &tp, 4).unwrap_err().rule(), Some(Rule::TonMax));
    }

    #[test]
    fn other_rules() {
        let tp = default_timing();
        let cases = [
            (vec![Command::act(0, 0), Command::act(1, 200)], Rule::DoubleAct),
            (vec![Command::act(0, 0), Command::pre(96), Command::act(1, 127)], Rule::Trc),
            (vec![Command::act(0, 0), Command::pre(110), Command::act(1, 130)], Rule::Tpre),
            (vec![Command::act(5, 0)], Rule::RowRange),
            (vec![Command::act(0, 10), Command::pre(5)], Rule::Monotonic),
            (vec![Command::act(0, 0), Command::rfm(50)], Rule::RfmWhileOpen),
            (vec![Command::refresh(10), Command::refresh(10 + 5 * 10_400 + 1)], Rule::RefCadence),
        ];
        for (cmds, rule) in cases {
            let err = validate_timeline(&tl(2, &cmds), &tp, 4).unwrap_err();
            assert_eq!(err.rule(), Some(rule), "{cmds:?}");
        }
        assert_eq!(validate_timeline(&tl(2, &[]), &tp, 4), Err(TimelineError::EmptyTimeline));
    }

    #[test]
    fn ref_cadence_respects_postponement() {
        let tp = default_timing();
        let t = tl(1, &[Command::refresh(0), Command::refresh(2 * tp.t_refi)]);
        assert!(validate_timeline(&t, &tp, 1).is_ok());
        assert_eq!(validate_timeline(&t, &tp, 0).unwrap_err().rule(), Some(Rule::RefCadence));
    }

    #[test]
    fn episodes() {
        let t = tl(2, &[Command::act(0, 0), Command::pre(96)]);
        assert_eq!(row_open_episodes(&t).unwrap(), vec![Episode { row: 0, open: 0, close: 96 }]);
        let t = tl(2, &[Command::act(0, 0), Command::pre(224), Command::act(1, 256), Command::pre(352)]);
        let eps = row_open_episodes(&t).unwrap();
        assert_eq!(eps.iter().map(|e| (e.row, e.t_on())).collect::<Vec<_>>(), vec![(0, 224), (1, 96)]);
        let t = tl(2, &[Command::act(0, 0)]);
        assert_eq!(row_open_episodes(&t), Err(TimelineError::UnclosedRow { row: 0, open_time: 0 }));
        let t = tl(2, &[Command::act(1, 0), Command::refresh(100)]);
        assert_eq!(row_open_episodes(&t).unwrap()[0].close, 100);
    }

    #[test]
    fn text_format() {
        let t = tl(4, &[Command::act(3, 0), Command::pre(96), Command::refresh(200), Command::rfm(300)]);
        let text = t.to_text();
        assert_eq!(text, "rows=4\nACT 3 @0\nPRE @96\nREF @200\nRFM @300\n");
        assert_eq!(CommandTimeline::parse_text(&text).unwrap(), t);
        let e = CommandTimeline::parse_text("rows=4\nACT x @0\n").unwrap_err();
        assert!(matches!(e, TimelineError::Parse { line: 2, .. }));
        assert!(CommandTimeline::parse_text("ACT 1 @0\n").is_err());
    }
}
