//! CSV emission. Integers are written in full decimal and floats with 17
//! significant digits, so every file is byte-stable for fixed inputs.

use std::io::Write;

use crate::correlation::CorrelationResult;
use crate::error::Result;
use crate::numeric::{fmt_f64, Nat};
use crate::spectral::{DensityEstimate, SpectralSequence};

/// Header plus pre-rendered rows.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `lag, lo, hi, method, stage_used`.
pub fn write_correlation_csv<W: Write>(out: W, results: &[CorrelationResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lag", "lo", "hi", "method", "stage_used"])?;
    for r in results {
        w.write_record([
            r.lag.to_string(),
            r.lo.to_string(),
            r.hi.to_string(),
            r.method.to_string(),
            r.stage.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of a suspension report.
#[derive(Clone, Debug, PartialEq)]
pub struct SuspensionRow {
    pub lag: Nat,
    pub k: u32,
    pub n: u32,
    pub analytic: f64,
    pub mc_freq: Option<f64>,
    pub ci: Option<(f64, f64)>,
}

/// `lag, k, n, analytic_prob, mc_freq, ci_lo, ci_hi`; Monte Carlo columns are empty when not sampled.
pub fn write_suspension_csv<W: Write>(out: W, rows: &[SuspensionRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lag", "k", "n", "analytic_prob", "mc_freq", "ci_lo", "ci_hi"])?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.lag.to_string(),
            r.k.to_string(),
            r.n.to_string(),
            fmt_f64(r.analytic),
            opt(r.mc_freq),
            opt(r.ci.map(|c| c.0)),
            opt(r.ci.map(|c| c.1)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `m, coefficient_numerator, coefficient_denominator, float`. Inexact
/// coefficients are written as the midpoint of their certified interval.
pub fn write_spectral_csv<W: Write>(out: W, seq: &SpectralSequence) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "coefficient_numerator", "coefficient_denominator", "float"])?;
    for c in &seq.coefficients {
        let mid = c.midpoint();
        w.write_record([c.lag.to_string(), mid.numer().to_string(), mid.denom().to_string(), fmt_f64(c.to_f64())])?;
    }
    w.flush()?;
    Ok(())
}

/// `theta, density`.
pub fn write_density_csv<W: Write>(out: W, density: &DensityEstimate) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "density"])?;
    for (t, d) in density.theta.iter().zip(&density.density) {
        w.write_record([fmt_f64(*t), fmt_f64(*d)])?;
    }
    w.flush()?;
    Ok(())
}
