//! Fourier coefficients `σ̂(m) = ⟨U^m f, f⟩` of the spectral measure of the
//! normalized indicator `f = 1_A / √μ(A)`, and Fejér-smoothed density pictures.
//!
//! The coefficient sequence is the deliverable; the densities are visual aids.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::{One, Signed, Zero};

use crate::correlation::{CorrelationEngine, EngineOptions};
use crate::error::{Error, Result};
use crate::levelset::LevelSet;
use crate::numeric::{rat_to_f64, Nat, Rat};
use crate::schedule::ConstructionSchedule;

/// One coefficient, exact when `lo == hi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectralCoefficient {
    pub lag: Nat,
    pub lo: Rat,
    pub hi: Rat,
    pub stage: usize,
}

impl SpectralCoefficient {
    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn midpoint(&self) -> Rat {
        (&self.lo + &self.hi) / Rat::from_integer(2.into())
    }

    pub fn to_f64(&self) -> f64 {
        rat_to_f64(&self.midpoint())
    }
}

#[derive(Clone, Debug)]
pub struct SpectralSequence {
    pub vector: LevelSet,
    pub coefficients: Vec<SpectralCoefficient>,
}

impl SpectralSequence {
    /// Coefficient at `|m|`, using the symmetry `σ̂(-m) = σ̂(m)`.
    pub fn get(&self, m: i64) -> Option<&SpectralCoefficient> {
        let key = Nat::from(m.unsigned_abs());
        self.coefficients.iter().find(|c| c.lag == key)
    }

    /// `σ̂(0) = 1`, `|σ̂(m)| <= 1` and no duplicate lags.
    pub fn check_invariants(&self) -> Result<()> {
        let one = Rat::one();
        for c in &self.coefficients {
            if c.lo.is_negative() || c.hi > one || c.lo > c.hi {
                return Err(Error::InvalidParameter(format!("coefficient at lag {} leaves [0, 1]", c.lag)));
            }
            if c.lag.is_zero() && (c.lo != one || c.hi != one) {
                return Err(Error::InvalidParameter("coefficient at lag 0 is not 1".into()));
            }
        }
        let mut lags: Vec<&Nat> = self.coefficients.iter().map(|c| &c.lag).collect();
        lags.sort();
        if lags.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate lag in spectral sequence".into()));
        }
        Ok(())
    }

    /// Longest run `σ̂(0), σ̂(1), ...` of exact coefficients, as floats. Only
    /// certified values are guaranteed to form a positive-definite sequence.
    pub fn exact_prefix(&self) -> Vec<f64> {
        (0..).map_while(|m| self.get(m).filter(|c| c.is_exact()).map(SpectralCoefficient::to_f64)).collect()
    }

    /// Contiguous `f64` coefficients `σ̂(0..=n)`, if every lag up to `n` is present.
    pub fn dense_prefix(&self, n: usize) -> Option<Vec<f64>> {
        (0..=n as i64).map(|m| self.get(m).map(SpectralCoefficient::to_f64)).collect()
    }
}

/// `σ̂(m) = μ(R^m A ∩ A) / μ(A)` for every requested lag.
///
/// Lags where `options.tolerance` is out of reach keep their certified interval
/// instead of failing.
pub fn spectral_coefficients(
    schedule: &ConstructionSchedule,
    a: &LevelSet,
    lags: &[Nat],
    options: EngineOptions,
) -> Result<SpectralSequence> {
    let measure = a.measure(schedule)?;
    if measure.is_zero() {
        return Err(Error::InvalidLevelSet("spectral vector needs μ(A) > 0".into()));
    }
    let mut engine = CorrelationEngine::new(schedule, a, a, options)?;
    let mut coefficients = Vec::with_capacity(lags.len());
    for lag in lags {
        let r = engine.correlation_or_best(lag)?;
        coefficients.push(SpectralCoefficient {
            lag: lag.clone(),
            lo: r.lo / &measure,
            hi: r.hi / &measure,
            stage: r.stage,
        });
    }
    let seq = SpectralSequence { vector: a.clone(), coefficients };
    seq.check_invariants()?;
    Ok(seq)
}

#[derive(Clone, Debug)]
pub struct DensityEstimate {
    pub theta: Vec<f64>,
    pub density: Vec<f64>,
    /// Trapezoid integral over `[0, 2π)`.
    pub integral: f64,
    /// Accumulated rounding bound on each density value.
    pub rounding_bound: f64,
}

impl DensityEstimate {
    pub fn min(&self) -> f64 {
        self.density.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// No value below `-rounding_bound`.
    pub fn is_nonnegative(&self) -> bool {
        self.min() >= -self.rounding_bound
    }
}

/// Fejér mean `(1/2π) Σ_{|m|<=N} (1 - |m|/(N+1)) σ̂(m) e^{imθ}` on `grid` equally spaced angles.
///
/// Takes `σ̂(0..=N)` as floats. On the uniform grid the trapezoid rule integrates
/// every trigonometric polynomial of degree below `grid` exactly, so the integral
/// equals `σ̂(0)` up to rounding once `grid > N`.
pub fn fejer_density(coefficients: &[f64], grid: usize) -> DensityEstimate {
    let n = coefficients.len().saturating_sub(1);
    let step = 2.0 * PI / grid.max(1) as f64;
    let weights: Vec<f64> =
        coefficients.iter().enumerate().map(|(m, c)| (1.0 - m as f64 / (n + 1) as f64) * c).collect();
    let theta: Vec<f64> = (0..grid).map(|i| i as f64 * step).collect();
    let density: Vec<f64> = theta
        .iter()
        .map(|&t| {
            let tail: f64 = weights.iter().enumerate().skip(1).map(|(m, w)| w * (m as f64 * t).cos()).sum();
            (weights.first().copied().unwrap_or(0.0) + 2.0 * tail) / (2.0 * PI)
        })
        .collect();
    let integral = density.iter().sum::<f64>() * step;
    let magnitude: f64 = weights.iter().map(|w| w.abs()).sum::<f64>() * 2.0;
    let rounding_bound = 4.0 * (n + 2) as f64 * f64::EPSILON * magnitude;
    DensityEstimate { theta, density, integral, rounding_bound }
}

/// Smallest eigenvalue of `[σ̂(m_a - m_b)]` over the given lags.
pub fn toeplitz_min_eigenvalue(seq: &SpectralSequence, lags: &[u64]) -> Result<f64> {
    let d = lags.len();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for (i, &x) in lags.iter().enumerate() {
        for (j, &y) in lags.iter().enumerate() {
            let diff = x as i64 - y as i64;
            let c = seq
                .get(diff)
                .ok_or_else(|| Error::InvalidParameter(format!("coefficient at lag {} missing", diff.abs())))?;
            m[(i, j)] = c.to_f64();
        }
    }
    Ok(SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}
