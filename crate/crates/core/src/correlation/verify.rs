use std::fmt;

use num_traits::Zero;

use super::{bruteforce_sweep, sp_decompose, CorrelationEngine, CorrelationResult, EngineOptions, SpForm};
use crate::error::{Error, Result};
use crate::levelset::LevelSet;
use crate::numeric::{nat, Nat, Rat};
use crate::schedule::{ConstructionSchedule, MeasureMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

impl Verdict {
    /// Fail dominates, then inconclusive; an empty set of judgements is inconclusive.
    pub fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut any = false;
        let mut out = Verdict::Pass;
        for v in verdicts {
            any = true;
            match v {
                Verdict::Fail => return Verdict::Fail,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::Pass => {}
            }
        }
        if any {
            out
        } else {
            Verdict::Inconclusive
        }
    }
}

/// `μ(A Δ R^{h_j} A) = 2μ(A) - 2μ(A ∩ R^{h_j} A)`, exactly.
pub fn rigidity_defect(schedule: &ConstructionSchedule, a: &LevelSet, j: usize, options: EngineOptions) -> Result<Rat> {
    let lag = schedule.height(j)?.clone();
    let options = EngineOptions { tolerance: Rat::zero(), ..options };
    let mut engine = CorrelationEngine::new(schedule, a, a, options)?;
    let c = engine.correlation(&lag)?;
    let two = Rat::from_integer(2.into());
    Ok(&two * a.measure(schedule)? - &two * c.lo)
}

#[derive(Clone, Debug)]
pub struct MixingRow {
    pub correlation: CorrelationResult,
    /// `None` below the cutoff, where nothing is claimed.
    pub verdict: Option<Verdict>,
}

#[derive(Clone, Debug)]
pub struct MixingReport {
    pub cutoff: Nat,
    pub target: Rat,
    pub rows: Vec<MixingRow>,
    pub verdict: Verdict,
}

impl MixingReport {
    pub fn count(&self, verdict: Verdict) -> usize {
        self.rows.iter().filter(|r| r.verdict == Some(verdict)).count()
    }
}

/// Smallest lag from which mixing claims are made for sets at stage `n`: `h_{n+1}`.
pub fn default_cutoff(schedule: &ConstructionSchedule, n: usize) -> Nat {
    schedule.height(n + 1).or_else(|_| schedule.height(n)).cloned().unwrap_or_default()
}

/// Judge correlations along sampled lags of the mixing set.
///
/// Infinite measure: every lag at or beyond the cutoff must be certified exactly 0.
/// Finite measure: `|μ(R^m A ∩ B) - μ(A)μ(B)/μ(X)|` must be below `threshold`,
/// with `μ(X)` taken at the last built stage.
pub fn verify_mixing_along(
    schedule: &ConstructionSchedule,
    lags: &[Nat],
    a: &LevelSet,
    b: &LevelSet,
    threshold: &Rat,
    cutoff: Option<Nat>,
    options: EngineOptions,
) -> Result<MixingReport> {
    if lags.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("lags must be sorted ascending".into()));
    }
    if lags.first().is_some_and(Zero::is_zero) {
        return Err(Error::InvalidParameter("lag 0 is excluded from mixing checks".into()));
    }
    let cutoff = cutoff.unwrap_or_else(|| default_cutoff(schedule, a.stage().max(b.stage())));
    let target = match schedule.mode() {
        MeasureMode::Infinite => Rat::zero(),
        MeasureMode::Finite { .. } => {
            a.measure(schedule)? * b.measure(schedule)? / schedule.stage_measure(schedule.stages())?
        }
    };
    let mut engine = CorrelationEngine::new(schedule, a, b, options)?;
    let mut rows = Vec::with_capacity(lags.len());
    for lag in lags {
        let correlation = engine.correlation_or_best(lag)?;
        let verdict = (lag >= &cutoff).then(|| judge(&correlation, &target, threshold, schedule.mode()));
        rows.push(MixingRow { correlation, verdict });
    }
    let verdict = Verdict::combine(rows.iter().filter_map(|r| r.verdict));
    Ok(MixingReport { cutoff, target, rows, verdict })
}

fn judge(c: &CorrelationResult, target: &Rat, threshold: &Rat, mode: &MeasureMode) -> Verdict {
    match mode {
        MeasureMode::Infinite => {
            if c.hi.is_zero() {
                Verdict::Pass
            } else if c.lo > Rat::zero() {
                Verdict::Fail
            } else {
                Verdict::Inconclusive
            }
        }
        MeasureMode::Finite { .. } => {
            let dist = |x: &Rat| if x > target { x - target } else { target - x };
            if &dist(&c.lo) < threshold && &dist(&c.hi) < threshold {
                Verdict::Pass
            } else if &(&c.lo - target) >= threshold || &(target - &c.hi) >= threshold {
                Verdict::Fail
            } else {
                Verdict::Inconclusive
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct KappaRow {
    pub correlation: CorrelationResult,
    pub kappa_lo: Rat,
    pub kappa_hi: Rat,
}

impl KappaRow {
    pub fn midpoint(&self) -> Rat {
        (&self.kappa_lo + &self.kappa_hi) / Rat::from_integer(2.into())
    }
}

#[derive(Clone, Debug)]
pub struct KappaReport {
    pub rows: Vec<KappaRow>,
    /// Spread of the κ̂ midpoints over the last three lags.
    pub spread: Option<Rat>,
    pub converged: bool,
}

/// Solve `c = κ μ(A)μ(B)/μ(X) + (1 - κ) μ(A ∩ B)` for κ at every lag.
pub fn kappa_mixing_check(
    schedule: &ConstructionSchedule,
    lags: &[Nat],
    a: &LevelSet,
    b: &LevelSet,
    convergence_tolerance: &Rat,
    options: EngineOptions,
) -> Result<KappaReport> {
    if !matches!(schedule.mode(), MeasureMode::Finite { .. }) {
        return Err(Error::NotFiniteMode);
    }
    let total = schedule.stage_measure(schedule.stages())?;
    let base = a.stage().max(b.stage());
    let overlap = Rat::from_integer(a.lift(schedule, base)?.intersection_count(&b.lift(schedule, base)?).into())
        * schedule.width(base)?;
    let product = a.measure(schedule)? * b.measure(schedule)? / total;
    let denom = &overlap - &product;
    if denom.is_zero() {
        return Err(Error::Unidentifiable);
    }
    let kappa = |c: &Rat| (&overlap - c) / &denom;
    let mut engine = CorrelationEngine::new(schedule, a, b, options)?;
    let mut rows = Vec::with_capacity(lags.len());
    for lag in lags {
        let correlation = engine.correlation_or_best(lag)?;
        let (k1, k2) = (kappa(&correlation.lo), kappa(&correlation.hi));
        let (kappa_lo, kappa_hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
        rows.push(KappaRow { correlation, kappa_lo, kappa_hi });
    }
    let spread = (rows.len() >= 3).then(|| {
        let mids: Vec<Rat> = rows[rows.len() - 3..].iter().map(KappaRow::midpoint).collect();
        let max = mids.iter().max().expect("three entries").clone();
        let min = mids.iter().min().expect("three entries").clone();
        max - min
    });
    let converged = spread.as_ref().is_some_and(|s| s <= convergence_tolerance);
    Ok(KappaReport { rows, spread, converged })
}

#[derive(Clone, Debug)]
pub struct SpCompletenessReport {
    pub stage: usize,
    pub cutoff: Nat,
    /// Lags with a positive windowed count at `stage`, with their decomposition.
    pub positive: Vec<(Nat, u64, Option<SpForm>)>,
    /// Positive lags with no decomposition.
    pub undecomposed: Vec<Nat>,
    /// Non-decomposable lags beyond the cutoff whose correlation is certified nonzero.
    pub nonzero_violations: Vec<Nat>,
    /// Non-decomposable lags beyond the cutoff the engine could not certify.
    pub inconclusive: Vec<Nat>,
    pub max_p: usize,
    pub max_residual: Nat,
    pub verdict: Verdict,
}

/// Brute-force sweep of every lag `1 <= m < h_J`, checked against the (sp) form.
#[allow(clippy::too_many_arguments)]
pub fn sp_completeness(
    schedule: &ConstructionSchedule,
    a: &LevelSet,
    b: &LevelSet,
    stage: usize,
    s_max: &Nat,
    p_max: usize,
    cutoff: Option<Nat>,
    guard: u64,
    options: EngineOptions,
) -> Result<SpCompletenessReport> {
    let sweep = bruteforce_sweep(schedule, a, b, stage, guard)?;
    let heights = &schedule.heights()[..stage];
    let cutoff = cutoff.unwrap_or_else(|| default_cutoff(schedule, a.stage().max(b.stage())));
    let mut engine = CorrelationEngine::new(schedule, a, b, options)?;
    let mut positive = Vec::new();
    let mut undecomposed = Vec::new();
    let mut nonzero_violations = Vec::new();
    let mut inconclusive = Vec::new();
    let (mut max_p, mut max_residual) = (0usize, Nat::zero());
    for (m, counts) in sweep.iter().enumerate().skip(1) {
        let lag = nat(m as u64);
        let form = sp_decompose(&lag, heights, s_max, p_max);
        if let Some(f) = &form {
            max_p = max_p.max(f.p());
            let r = f.residual.magnitude().clone();
            if r > max_residual {
                max_residual = r;
            }
        }
        if counts.pairs > 0 {
            if form.is_none() {
                undecomposed.push(lag.clone());
            }
            positive.push((lag, counts.pairs, form));
        } else if form.is_none() && lag >= cutoff {
            let c = engine.correlation_or_best(&lag)?;
            if c.lo > Rat::zero() {
                nonzero_violations.push(lag);
            } else if !c.hi.is_zero() {
                inconclusive.push(lag);
            }
        }
    }
    let verdict = if !undecomposed.is_empty() || !nonzero_violations.is_empty() {
        Verdict::Fail
    } else if !inconclusive.is_empty() {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(SpCompletenessReport {
        stage,
        cutoff,
        positive,
        undecomposed,
        nonzero_violations,
        inconclusive,
        max_p,
        max_residual,
        verdict,
    })
}
