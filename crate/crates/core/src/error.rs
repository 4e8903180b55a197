use thiserror::Error;

use crate::timing::{RowId, Tick};

/// Timeline rule names reported by validation.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Monotonic,
    RowRange,
    DoubleAct,
    Trc,
    Tpre,
    Tras,
    TonMax,
    RfmWhileOpen,
    RefCadence,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Monotonic => "monotonic",
            Rule::RowRange => "row_range",
            Rule::DoubleAct => "double_act",
            Rule::Trc => "tRC",
            Rule::Tpre => "tPRE",
            Rule::Tras => "tRAS",
            Rule::TonMax => "tONMax",
            Rule::RfmWhileOpen => "rfm_while_open",
            Rule::RefCadence => "ref_cadence",
        }
    }
}

impl std::fmt::Display for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TimelineError {
    #[error("timeline is empty")]
    EmptyTimeline,
    #[error("{rule} violation at command {index} (t={time})")]
    Violation { index: usize, time: Tick, rule: Rule },
    #[error("row {row} opened at t={open_time} is never closed")]
    UnclosedRow { row: RowId, open_time: Tick },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl TimelineError {
    pub fn rule(&self) -> Option<Rule> {
        match self {
            TimelineError::Violation { rule, .. } => Some(*rule),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{}{key}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub key: String,
    pub message: String,
    pub line: Option<usize>,
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { key: key.into(), message: message.into(), line: None }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Timeline(#[from] TimelineError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("open time {ton} outside [{min}, {max}]")]
    TonOutOfRange { ton: Tick, min: Tick, max: Tick },
    #[error("row {row} outside bank of {rows} rows")]
    RowOutOfRange { row: RowId, rows: u32 },
    #[error("{policy} cannot be paired with in-DRAM tracker {tracker}")]
    IncompatiblePairing { policy: &'static str, tracker: &'static str },
    #[error("reports describe different workloads")]
    MismatchedWorkload,
    #[error("only {found} mitigations observed, need at least {needed}")]
    InsufficientMitigations { found: u64, needed: u64 },
    #[error("search budget too small: {0}")]
    BudgetTooSmall(String),
    #[error("aggressor {aggressor} and decoy {decoy} are closer than {min_distance} rows")]
    RowsTooClose { aggressor: RowId, decoy: RowId, min_distance: u32 },
    #[error("no preset sizing for {0}; supply the tracker parameters explicitly")]
    UnsupportedCombination(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("report schema mismatch: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
