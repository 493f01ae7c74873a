//! Exact symbolic laboratory for rank-one cutting-and-stacking transformations.
//!
//! A construction is described stage by stage (cut counts and spacer columns);
//! nothing is ever simulated on real intervals. All measures are exact
//! rationals and all heights are arbitrary-precision integers, so the
//! correlation engine can certify that `μ(R^m A ∩ B)` is exactly zero, which is
//! what mixing along a sparse set of times amounts to for infinite-measure
//! constructions.
//!
//! Module map:
//!
//! * [`schedule`] and [`levelset`]: the construction itself and finite unions of
//!   tower levels.
//! * [`correlation`]: exact, brute-force and Monte Carlo correlations, plus the
//!   rigidity / mixing / κ-mixing / (sp) verifiers.
//! * [`synthesis`]: constructive parameter choices that make a construction
//!   rigid while mixing along a prescribed set.
//! * [`suspension`]: cylinder-event probabilities for the Poisson suspension.
//! * [`spectral`]: Fourier coefficients of the spectral measure and Fejér
//!   density estimates.
//! * [`config`] and [`output`]: plain-text schedule files and CSV emission.

// errors carry exact rationals; they are cold paths
#![allow(clippy::result_large_err)]

pub mod config;
pub mod correlation;
pub mod error;
pub mod levelset;
pub mod numeric;
pub mod output;
pub mod schedule;
pub mod spectral;
pub mod suspension;
pub mod synthesis;

pub use correlation::{
    correlation_bruteforce, correlation_exact, correlation_montecarlo, CorrelationEngine, CorrelationResult,
    EngineOptions, Method,
};
pub use error::{Error, Result};
pub use levelset::LevelSet;
pub use numeric::{Nat, Rat};
pub use schedule::{ConstructionSchedule, Label, MeasureMode, SpacerSchedule, StageRecord};
