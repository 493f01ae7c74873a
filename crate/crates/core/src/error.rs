use thiserror::Error;

use crate::correlation::CorrelationResult;
use crate::numeric::{Nat, Rat};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cut count r = {0} is below 2")]
    CutCountTooSmall(usize),

    #[error("spacer schedule expands to {got} columns but r = {expected}")]
    SpacerLengthMismatch { expected: usize, got: usize },

    #[error("stage {0} has not been built")]
    StageNotBuilt(usize),

    #[error("reference stage {reference} is above query stage {query}")]
    StageOrder { reference: usize, query: usize },

    #[error("position {position} is outside stage {stage} of height {height}")]
    PositionOutOfRange { position: Nat, stage: usize, height: Nat },

    #[error("stage {stage} word has {height} symbols, above the materialization guard {guard}")]
    GuardExceeded { stage: usize, height: Nat, guard: u64 },

    #[error("finite-measure budget exceeded at stage {stage}: {measure} > {bound}")]
    MeasureBudgetExceeded { stage: usize, measure: Rat, bound: Rat },

    #[error("invalid level set: {0}")]
    InvalidLevelSet(String),

    #[error("certified width {} above tolerance {tolerance} at stage {}", best.width(), best.stage)]
    ToleranceUnreachable { best: Box<CorrelationResult>, tolerance: Rat },

    #[error("interval family exhausted at stage {stage}: need an entry with L >= {required_len}, a >= {required_start} and multiplicity >= {required_multiplicity}")]
    IntervalFamilyExhausted { stage: usize, required_len: Nat, required_start: Nat, required_multiplicity: usize },

    #[error("horizon {horizon} exhausted at stage {stage}; last blocking window [{window_lo}, {window_hi}]")]
    HorizonExhausted { stage: usize, horizon: Nat, window_lo: Nat, window_hi: Nat },

    #[error("height pool exhausted at stage {stage}: no element >= {needed}")]
    PoolExhausted { stage: usize, needed: Nat },

    #[error("schedule is not in finite-measure mode")]
    NotFiniteMode,

    #[error("κ is unidentifiable: μ(A∩B) equals μ(A)μ(B)/μ(X)")]
    Unidentifiable,

    #[error("regions of a joint cylinder event overlap")]
    OverlappingRegions,

    #[error("overlap {overlap} exceeds min(μ(A), μ(B)) = {bound}")]
    InconsistentOverlap { overlap: Rat, bound: Rat },

    #[error("lag-{lag} image of the region is not resolvable at stage {stage}; unresolved mass {mass}")]
    Unresolvable { stage: usize, lag: Nat, mass: Rat },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Toml(Box<toml::de::Error>),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Toml(Box::new(e))
    }
}
