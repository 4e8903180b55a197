//! Experiment configuration files (TOML).
//!
//! Times in `[timing]` are nanoseconds; every other time value is in ticks
//! (3/8 ns). Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::analysis::SearchOptions;
use crate::attacks::AttackSpec;
use crate::charge::{BlastConfig, ChargeModel};
use crate::engine::{BankConfig, SimSetup, DEFAULT_RFM_LATENCY_NS};
use crate::error::{ConfigError, Error, Result};
use crate::fixed::{Alpha, Charge, FRAC_BITS};
use crate::mitigations::{PolicyConfig, PolicyKind};
use crate::timing::{ns_to_ticks_ceil, CommandTimeline, Tick, TimingNs, TimingParams};
use crate::trackers::{size_tracker, TrackerConfig, TrackerKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub timing: TimingSection,
    #[serde(default)]
    pub bank: BankSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub policy: PolicySection,
    #[serde(default)]
    pub tracker: TrackerSection,
    pub attack: AttackSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// Budget of the adversarial amplification search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    /// Horizon of the exhaustive grid search in tRC; 0 disables it.
    pub horizon_trc: u64,
    pub random_trials: u64,
    pub random_episodes: u64,
}

impl Default for SearchSection {
    fn default() -> Self {
        let d = SearchOptions::default();
        SearchSection { horizon_trc: d.horizon_trc, random_trials: d.random_trials, random_episodes: d.random_episodes }
    }
}

impl SearchSection {
    pub fn options(&self, seed: u64) -> SearchOptions {
        SearchOptions {
            horizon_trc: self.horizon_trc,
            random_trials: self.random_trials,
            random_episodes: self.random_episodes,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    /// Independent seeded repetitions per configuration.
    pub trials: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seed: 0, trials: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingSection {
    pub profile: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_act_ns: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_pre_ns: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_ras_ns: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_rc_ns: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_refi_ns: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_rfc_ns: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_on_max_ns: Option<u64>,
}

impl Default for TimingSection {
    fn default() -> Self {
        TimingSection {
            profile: "ddr5".into(),
            t_act_ns: None,
            t_pre_ns: None,
            t_ras_ns: None,
            t_rc_ns: None,
            t_refi_ns: None,
            t_rfc_ns: None,
            t_on_max_ns: None,
        }
    }
}

impl TimingSection {
    pub fn params(&self) -> std::result::Result<TimingParams, ConfigError> {
        if self.profile != "ddr5" {
            return Err(ConfigError::invalid("timing.profile", format!("unknown profile '{}'", self.profile)));
        }
        let d = TimingNs::default();
        let ns = TimingNs {
            t_act_ns: self.t_act_ns.unwrap_or(d.t_act_ns),
            t_pre_ns: self.t_pre_ns.unwrap_or(d.t_pre_ns),
            t_ras_ns: self.t_ras_ns.unwrap_or(d.t_ras_ns),
            t_rc_ns: self.t_rc_ns.unwrap_or(d.t_rc_ns),
            t_refi_ns: self.t_refi_ns.unwrap_or(d.t_refi_ns),
            t_rfc_ns: self.t_rfc_ns.unwrap_or(d.t_rfc_ns),
            t_on_max_ns: self.t_on_max_ns.unwrap_or(d.t_on_max_ns),
        };
        // tRFC is rounded up to the tick grid, like the built-in profile
        let mut tp = TimingParams::from_ns(&TimingNs { t_rfc_ns: 0, ..ns }).map_err(|mut e| {
            e.key = format!("timing.{}", e.key);
            e
        })?;
        tp.t_rfc = ns_to_ticks_ceil(ns.t_rfc_ns);
        tp.check().map_err(|mut e| {
            e.key = format!("timing.{}", e.key);
            e
        })?;
        Ok(tp)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BankSection {
    pub rows: u32,
    pub refresh_groups: u32,
    pub postponed_refs: u32,
    pub auto_refresh: bool,
    pub rfmth: u32,
    pub rfm_latency_ns: u64,
}

impl Default for BankSection {
    fn default() -> Self {
        let b = BankConfig::default();
        BankSection {
            rows: b.rows,
            refresh_groups: b.refresh_groups,
            postponed_refs: b.postponed_refs,
            auto_refresh: b.auto_refresh,
            rfmth: b.rfmth,
            rfm_latency_ns: DEFAULT_RFM_LATENCY_NS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub alpha: Alpha,
    pub trh: u64,
    pub charge_radius: u32,
    pub refresh_radius: u32,
}

impl Default for OracleSection {
    fn default() -> Self {
        let b = BlastConfig::default();
        OracleSection {
            alpha: Alpha::ZERO,
            trh: 4000,
            charge_radius: b.charge_radius,
            refresh_radius: b.refresh_radius,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicySection {
    pub kind: PolicyKind,
    /// ExPress open-time cap in ticks; defaults to tRAS.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tmro: Option<Tick>,
    pub frac_bits: u32,
    /// Alpha used when sizing the tracker automatically.
    pub alpha_assumed: Alpha,
}

impl Default for PolicySection {
    fn default() -> Self {
        PolicySection { kind: PolicyKind::NoRp, tmro: None, frac_bits: FRAC_BITS, alpha_assumed: Alpha::ZERO }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sizing {
    Explicit,
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerSection {
    pub kind: TrackerKind,
    pub sizing: Sizing,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entries: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub internal_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub frac_bits: u32,
}

impl Default for TrackerSection {
    fn default() -> Self {
        TrackerSection {
            kind: TrackerKind::None,
            sizing: Sizing::Explicit,
            entries: None,
            internal_threshold: None,
            p: None,
            frac_bits: FRAC_BITS,
        }
    }
}

/// Parameter lists whose cartesian product a sweep runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trh: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tmro: Option<Vec<Tick>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frac_bits: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    /// Plain activations per iteration of a combined loop.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
}

/// One point of an expanded sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    /// `(parameter, value)` pairs that distinguish this point.
    pub params: Vec<(String, String)>,
    pub config: ExperimentConfig,
}

/// 1-based line of the first `key = ...` assignment inside `[section]`.
fn find_key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') {
            current = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

/// `section.key` assigned on the 1-based `line`, if any.
fn key_at_line(text: &str, line: usize) -> Option<String> {
    let mut section = String::new();
    for (i, l) in text.lines().enumerate() {
        let t = l.trim();
        if t.starts_with('[') {
            section = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        } else if i + 1 == line {
            let (k, _) = t.split_once('=')?;
            return Some(if section.is_empty() { k.trim().to_string() } else { format!("{section}.{}", k.trim()) });
        }
    }
    None
}

fn locate(text: &str, mut e: ConfigError) -> ConfigError {
    if e.line.is_none() {
        if let Some((section, key)) = e.key.split_once('.') {
            let key = key.split('.').next().unwrap_or(key);
            e.line = find_key_line(text, section, key);
        }
    }
    e
}

impl ExperimentConfig {
    /// Parses and validates a configuration file's contents.
    pub fn parse(text: &str) -> std::result::Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            let msg = e.message().to_string();
            let key = line
                .and_then(|l| key_at_line(text, l))
                .or_else(|| msg.split('`').nth(1).map(str::to_string))
                .unwrap_or_else(|| "<document>".to_string());
            ConfigError { key, message: msg, line }
        })?;
        cfg.validate().map_err(|e| locate(text, e))?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::parse(&text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        let setup = self.to_setup_inner()?;
        self.attack
            .generate(&setup.timing, setup.bank.rows, setup.blast.refresh_radius, self.run.seed)
            .map_err(|e| ConfigError::invalid(format!("attack.{}", attack_key(&e)), e.to_string()))?;
        if let Some(s) = &self.sweep {
            let lists: [(&str, bool); 7] = [
                ("alpha", s.alpha.as_ref().is_some_and(Vec::is_empty)),
                ("trh", s.trh.as_ref().is_some_and(Vec::is_empty)),
                ("tmro", s.tmro.as_ref().is_some_and(Vec::is_empty)),
                ("frac_bits", s.frac_bits.as_ref().is_some_and(Vec::is_empty)),
                ("p", s.p.as_ref().is_some_and(Vec::is_empty)),
                ("k", s.k.as_ref().is_some_and(Vec::is_empty)),
                ("seeds", s.seeds.as_ref().is_some_and(Vec::is_empty)),
            ];
            if let Some((k, _)) = lists.iter().find(|(_, empty)| *empty) {
                return Err(ConfigError::invalid(format!("sweep.{k}"), "sweep lists must not be empty"));
            }
            for point in self.expand_unchecked() {
                point.config.to_setup_inner()?;
            }
        }
        if self.run.trials == 0 {
            return Err(ConfigError::invalid("run.trials", "must be positive"));
        }
        Ok(())
    }

    pub fn timing(&self) -> std::result::Result<TimingParams, ConfigError> {
        self.timing.params()
    }

    fn to_setup_inner(&self) -> std::result::Result<SimSetup, ConfigError> {
        let tp = self.timing()?;
        let mut s = SimSetup::new(tp);
        s.bank = BankConfig {
            rows: self.bank.rows,
            refresh_groups: self.bank.refresh_groups,
            postponed_refs: self.bank.postponed_refs,
            auto_refresh: self.bank.auto_refresh,
            rfmth: self.bank.rfmth,
            rfm_latency: ns_to_ticks_ceil(self.bank.rfm_latency_ns),
        };
        if s.bank.rows == 0 {
            return Err(ConfigError::invalid("bank.rows", "must be positive"));
        }
        if s.bank.refresh_groups == 0 || s.bank.refresh_groups > s.bank.rows {
            return Err(ConfigError::invalid("bank.refresh_groups", "must lie in 1..=rows"));
        }
        s.charge = ChargeModel::new(self.oracle.alpha);
        s.blast = BlastConfig { charge_radius: self.oracle.charge_radius, refresh_radius: self.oracle.refresh_radius };
        s.blast.check().map_err(|mut e| {
            e.key = format!("oracle.{}", e.key);
            e
        })?;
        if self.oracle.trh == 0 {
            return Err(ConfigError::invalid("oracle.trh", "must be positive"));
        }
        s.trh = Charge::from_int(self.oracle.trh);
        s.policy = PolicyConfig {
            kind: self.policy.kind,
            tmro: self.policy.tmro.unwrap_or(tp.t_ras),
            frac_bits: self.policy.frac_bits,
            alpha_assumed: self.policy.alpha_assumed,
        };
        if s.policy.frac_bits > FRAC_BITS {
            return Err(ConfigError::invalid("policy.frac_bits", format!("must be at most {FRAC_BITS}")));
        }
        if s.policy.kind == PolicyKind::ExPress && (s.policy.tmro < tp.t_ras || s.policy.tmro > tp.t_on_max) {
            return Err(ConfigError::invalid(
                "policy.tmro",
                format!("must lie in [{}, {}] ticks", tp.t_ras, tp.t_on_max),
            ));
        }
        s.tracker = self.tracker_config(&s)?;
        s.seed = self.run.seed;
        s.check().map_err(|e| match e {
            Error::Config(c) => c,
            Error::IncompatiblePairing { .. } => ConfigError::invalid("tracker.kind", e.to_string()),
            other => ConfigError::invalid("<document>", other.to_string()),
        })?;
        Ok(s)
    }

    fn tracker_config(&self, s: &SimSetup) -> std::result::Result<TrackerConfig, ConfigError> {
        let t = &self.tracker;
        let mut cfg = match t.sizing {
            Sizing::Auto => size_tracker(t.kind, s.policy.kind, s.trh, self.policy.alpha_assumed, s.bank.rfmth)
                .map_err(|e| ConfigError::invalid("tracker.sizing", e.to_string()))?,
            Sizing::Explicit => {
                let need = |v: Option<f64>, key: &str| {
                    v.ok_or_else(|| ConfigError::invalid(format!("tracker.{key}"), "required for this tracker"))
                };
                match t.kind {
                    TrackerKind::None => TrackerConfig::none(),
                    TrackerKind::Graphene => {
                        let thr = need(t.internal_threshold, "internal_threshold")?;
                        let thr = Charge::from_f64(thr)
                            .filter(|c| *c > Charge::ZERO)
                            .ok_or_else(|| ConfigError::invalid("tracker.internal_threshold", "must be positive"))?;
                        TrackerConfig::graphene(need(t.entries.map(|e| e as f64), "entries")? as usize, thr)
                    }
                    TrackerKind::Para => {
                        let p = need(t.p, "p")?;
                        if !(0.0..=1.0).contains(&p) {
                            return Err(ConfigError::invalid("tracker.p", "must lie in [0, 1]"));
                        }
                        TrackerConfig::para(p)
                    }
                    TrackerKind::Mithril => {
                        TrackerConfig::mithril(need(t.entries.map(|e| e as f64), "entries")? as usize, s.bank.rfmth)
                    }
                    TrackerKind::Mint => TrackerConfig::mint(s.bank.rfmth),
                }
            }
        };
        if t.sizing == Sizing::Auto {
            if let Some(e) = t.entries {
                cfg.entries = e;
            }
            if let Some(thr) = t.internal_threshold.and_then(Charge::from_f64) {
                cfg.internal_threshold = thr;
            }
            if let Some(p) = t.p {
                cfg.p = p;
            }
        }
        if t.frac_bits > FRAC_BITS {
            return Err(ConfigError::invalid("tracker.frac_bits", format!("must be at most {FRAC_BITS}")));
        }
        cfg.frac_bits = t.frac_bits;
        cfg.rfmth = s.bank.rfmth;
        Ok(cfg)
    }

    /// Simulation setup for this configuration (ignores `[sweep]`).
    pub fn to_setup(&self) -> Result<SimSetup> {
        Ok(self.to_setup_inner()?)
    }

    pub fn timeline(&self) -> Result<CommandTimeline> {
        let s = self.to_setup()?;
        self.attack.generate(&s.timing, s.bank.rows, s.blast.refresh_radius, self.run.seed)
    }

    /// Cartesian product of the sweep lists, or the configuration itself.
    pub fn expand(&self) -> Result<Vec<SweepPoint>> {
        let points = self.expand_unchecked();
        for p in &points {
            p.config.to_setup_inner()?;
        }
        Ok(points)
    }

    fn expand_unchecked(&self) -> Vec<SweepPoint> {
        let mut points =
            vec![SweepPoint { params: Vec::new(), config: ExperimentConfig { sweep: None, ..self.clone() } }];
        let Some(s) = &self.sweep else {
            return points;
        };
        fn axis<T: Clone + ToString>(
            points: Vec<SweepPoint>,
            name: &str,
            values: &Option<Vec<T>>,
            apply: impl Fn(&mut ExperimentConfig, &T),
        ) -> Vec<SweepPoint> {
            let Some(values) = values else {
                return points;
            };
            let mut out = Vec::with_capacity(points.len() * values.len());
            for p in &points {
                for v in values {
                    let mut q = p.clone();
                    apply(&mut q.config, v);
                    q.params.push((name.to_string(), v.to_string()));
                    out.push(q);
                }
            }
            out
        }
        points = axis(points, "alpha", &s.alpha, |c, &a| {
            if let Ok(a) = Alpha::from_f64(a) {
                c.oracle.alpha = a;
                c.policy.alpha_assumed = a;
            }
        });
        points = axis(points, "trh", &s.trh, |c, &t| c.oracle.trh = t);
        points = axis(points, "tmro", &s.tmro, |c, &t| c.policy.tmro = Some(t));
        points = axis(points, "frac_bits", &s.frac_bits, |c, &b| c.policy.frac_bits = b);
        points = axis(points, "p", &s.p, |c, &p| c.tracker.p = Some(p));
        points = axis(points, "k", &s.k, |c, &k| {
            if let AttackSpec::Combined { k_rh, .. } = &mut c.attack {
                *k_rh = k;
            }
        });
        points = axis(points, "seed", &s.seeds, |c, &seed| c.run.seed = seed);
        points
    }
}

fn attack_key(e: &Error) -> &'static str {
    match e {
        Error::TonOutOfRange { .. } => "t_on",
        Error::RowOutOfRange { .. } => "aggressors",
        Error::RowsTooClose { .. } => "decoy",
        _ => "kind",
    }
}
