//! Correlations `μ(R^m A ∩ B)` and the verifiers built on them.
//!
//! Every evaluation at a finite stage `J` yields a certified interval: the
//! windowed pair count `w_J · #{p : label(p) ∈ A, label(p+m) ∈ B, p+m < h_J}` is
//! a lower bound, and the `A`-levels in the top `m` positions (whose orbit
//! leaves the stage-`J` tower) bound the remaining mass.

mod brute;
mod engine;
pub mod montecarlo;
mod sp;
mod sweep;
mod verify;

use std::fmt;

use crate::numeric::{Nat, Rat};

pub use brute::{bruteforce_sweep, correlation_bruteforce, WindowCounts};
pub use engine::{correlation_exact, CorrelationEngine, EngineOptions, Orientation};
pub use montecarlo::{correlation_montecarlo, MonteCarloEstimate, CONFIDENCE_99};
pub use sp::{sp_decompose, SpForm, SpTerm};
pub use sweep::{correlation_sweep, default_workers};
pub use verify::{
    default_cutoff, kappa_mixing_check, rigidity_defect, sp_completeness, verify_mixing_along, KappaReport, KappaRow,
    MixingReport, MixingRow, SpCompletenessReport, Verdict,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    ExactDp,
    BruteForce,
    MonteCarlo,
    Windowed,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ExactDp => "exact-dp",
            Method::BruteForce => "brute-force",
            Method::MonteCarlo => "monte-carlo",
            Method::Windowed => "windowed",
        })
    }
}

/// Certified enclosure `[lo, hi]` of `μ(R^m A ∩ B)` obtained at stage `stage`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrelationResult {
    pub lag: Nat,
    pub lo: Rat,
    pub hi: Rat,
    pub stage: usize,
    pub method: Method,
}

impl CorrelationResult {
    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn value(&self) -> Option<&Rat> {
        self.is_exact().then_some(&self.lo)
    }
}
