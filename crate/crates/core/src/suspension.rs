//! Cylinder events of the Poisson suspension.
//!
//! A configuration is a Poisson point process of intensity `μ` on the phase
//! space; `C_{A,k}` is the event "exactly `k` points in `A`". Counts in disjoint
//! regions are independent Poisson variables, so every probability here is a
//! finite sum of `rational · e^{rational}` terms with one common exponent.
//! Joint events at lag `m` depend on the construction only through
//! `c = μ(R^m A ∩ B)`, which the correlation engine provides exactly.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::correlation::montecarlo::{clopper_pearson, stream_rng};
use crate::correlation::{CorrelationEngine, EngineOptions};
use crate::error::{Error, Result};
use crate::levelset::LevelSet;
use crate::numeric::{factorial, rat_from_nat, rat_to_f64, Nat, Rat};
use crate::schedule::ConstructionSchedule;

/// `coefficient · e^{exponent}`, both exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpRational {
    pub coefficient: Rat,
    pub exponent: Rat,
}

impl ExpRational {
    pub fn new(coefficient: Rat, exponent: Rat) -> Self {
        if coefficient.is_zero() {
            return ExpRational { coefficient, exponent: Rat::zero() };
        }
        ExpRational { coefficient, exponent }
    }

    pub fn zero() -> Self {
        ExpRational::new(Rat::zero(), Rat::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coefficient.is_zero()
    }

    pub fn mul(&self, other: &ExpRational) -> ExpRational {
        ExpRational::new(&self.coefficient * &other.coefficient, &self.exponent + &other.exponent)
    }

    /// Nearest-`f64` rendering, computed in log space so huge coefficients do not overflow.
    pub fn to_f64(&self) -> f64 {
        if self.coefficient.is_zero() {
            return 0.0;
        }
        let ln = ln_abs(&self.coefficient) + rat_to_f64(&self.exponent);
        let v = ln.exp();
        if self.coefficient.is_negative() {
            -v
        } else {
            v
        }
    }
}

fn ln_big(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().map_or(f64::NAN, |v| v.abs().ln());
    }
    let shift = bits - 64;
    let top: BigInt = n.abs() >> shift as usize;
    top.to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
}

fn ln_abs(r: &Rat) -> f64 {
    ln_big(r.numer()) - ln_big(r.denom())
}

impl fmt::Display for ExpRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        write!(f, "{}·e^({})", self.coefficient, self.exponent)
    }
}

/// `P(Pois(mean) = k) = mean^k / k! · e^{-mean}`.
pub fn poisson_pmf(mean: &Rat, k: u32) -> ExpRational {
    let coefficient = pow(mean, k) / rat_from_nat(&factorial(k));
    ExpRational::new(coefficient, -mean.clone())
}

fn pow(x: &Rat, k: u32) -> Rat {
    (0..k).fold(Rat::one(), |acc, _| acc * x)
}

/// `C_{A,k}`: exactly `count` points of the configuration in `region`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigurationEvent {
    pub region: LevelSet,
    pub count: u32,
}

/// `μ_*(∩ C_{A_i,k_i})` for pairwise disjoint regions: the product of Poisson weights.
pub fn poisson_event_prob(schedule: &ConstructionSchedule, events: &[ConfigurationEvent]) -> Result<ExpRational> {
    let top = events.iter().map(|e| e.region.stage()).max().unwrap_or(1);
    let mut lifted = Vec::with_capacity(events.len());
    for e in events {
        if e.region.is_empty() {
            return Err(Error::InvalidLevelSet("cylinder regions must have positive measure".into()));
        }
        lifted.push(e.region.lift(schedule, top)?);
    }
    for (i, a) in lifted.iter().enumerate() {
        if lifted[i + 1..].iter().any(|b| !a.intersection_count(b).is_zero()) {
            return Err(Error::OverlappingRegions);
        }
    }
    let mut out = ExpRational::new(Rat::one(), Rat::zero());
    for e in events {
        out = out.mul(&poisson_pmf(&e.region.measure(schedule)?, e.count));
    }
    Ok(out)
}

/// `P(N(A) = k, N(R^{-m}B) = n)` from `a = μ(A)`, `b = μ(B)` and the overlap
/// `c = μ(A ∩ R^{-m}B)`: the three pieces `A \ R^{-m}B`, `A ∩ R^{-m}B`,
/// `R^{-m}B \ A` carry independent Poisson counts with means `a - c`, `c`, `b - c`.
pub fn joint_prob_from_overlap(a: &Rat, b: &Rat, c: &Rat, k: u32, n: u32) -> Result<ExpRational> {
    let bound = if a < b { a.clone() } else { b.clone() };
    if c.is_negative() || c > &bound {
        return Err(Error::InconsistentOverlap { overlap: c.clone(), bound });
    }
    let (only_a, only_b) = (a - c, b - c);
    let mut coefficient = Rat::zero();
    for t in 0..=k.min(n) {
        let term = pow(c, t) * pow(&only_a, k - t) * pow(&only_b, n - t)
            / rat_from_nat(&(factorial(t) * factorial(k - t) * factorial(n - t)));
        coefficient += term;
    }
    Ok(ExpRational::new(coefficient, -(a + b - c)))
}

#[derive(Clone, Debug)]
pub struct JointProbability {
    pub lag: Nat,
    pub overlap: Rat,
    pub prob: ExpRational,
}

/// Joint cylinder probability at lag `m`, with `c` from the exact correlation engine.
pub fn joint_shifted_event_prob(
    schedule: &ConstructionSchedule,
    a: &LevelSet,
    k: u32,
    b: &LevelSet,
    n: u32,
    lag: &Nat,
    options: EngineOptions,
) -> Result<JointProbability> {
    let options = EngineOptions { tolerance: Rat::zero(), ..options };
    let c = CorrelationEngine::new(schedule, a, b, options)?.correlation(lag)?.lo;
    let prob = joint_prob_from_overlap(&a.measure(schedule)?, &b.measure(schedule)?, &c, k, n)?;
    Ok(JointProbability { lag: lag.clone(), overlap: c, prob })
}

/// How sampled configurations are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplingMode {
    /// Independent Poisson counts on the three pieces, with `c` from the engine.
    Pieces,
    /// Poisson points on the stage-`J` levels covering `A ∪ R^{-m}B`, each moved
    /// by `p ↦ p + m` and decoded at stage `J`.
    Full,
}

/// Empirical joint law of `(N(A), N(R^{-m}B))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointCounts {
    pub samples: u64,
    pub cells: BTreeMap<(u32, u32), u64>,
}

impl JointCounts {
    pub fn count(&self, k: u32, n: u32) -> u64 {
        self.cells.get(&(k, n)).copied().unwrap_or(0)
    }

    pub fn freq(&self, k: u32, n: u32) -> f64 {
        self.count(k, n) as f64 / self.samples as f64
    }

    pub fn marginal_a(&self, k: u32) -> u64 {
        self.cells.iter().filter(|((a, _), _)| *a == k).map(|(_, v)| v).sum()
    }

    pub fn interval(&self, k: u32, n: u32, confidence: f64) -> (f64, f64) {
        clopper_pearson(self.count(k, n), self.samples, confidence)
    }
}

fn draw(rng: &mut impl Rng, mean: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u32
}

/// Sample `samples` configurations with a fixed seed.
#[allow(clippy::too_many_arguments)]
pub fn sample_joint_counts(
    schedule: &ConstructionSchedule,
    a: &LevelSet,
    b: &LevelSet,
    lag: &Nat,
    stage: usize,
    samples: u64,
    seed: u64,
    mode: SamplingMode,
) -> Result<JointCounts> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let mut rng = stream_rng(seed, 1);
    let mut cells = BTreeMap::new();
    match mode {
        SamplingMode::Pieces => {
            let options = EngineOptions { max_stage: Some(stage), ..EngineOptions::default() };
            let c = CorrelationEngine::new(schedule, a, b, options)?.correlation(lag)?.lo;
            let (ma, mb) = (a.measure(schedule)?, b.measure(schedule)?);
            let means = [rat_to_f64(&(&ma - &c)), rat_to_f64(&c), rat_to_f64(&(&mb - &c))];
            for _ in 0..samples {
                let [x, y, z] = means.map(|m| draw(&mut rng, m));
                *cells.entry((x + y, y + z)).or_insert(0) += 1;
            }
        }
        SamplingMode::Full => {
            let cover = Cover::new(schedule, a, b, lag, stage)?;
            for _ in 0..samples {
                let points = draw(&mut rng, cover.mean);
                let (mut in_a, mut in_b) = (0u32, 0u32);
                for _ in 0..points {
                    let p = cover.position(rng.random_range(0..cover.size));
                    in_a += u32::from(contains(&cover.a, p));
                    in_b += u32::from(contains(&cover.b, p + cover.lag));
                }
                *cells.entry((in_a, in_b)).or_insert(0) += 1;
            }
        }
    }
    Ok(JointCounts { samples, cells })
}

/// Stage-`J` levels of `A ∪ R^{-m}B` as machine-word ranges.
struct Cover {
    a: Vec<(u64, u64)>,
    b: Vec<(u64, u64)>,
    ranges: Vec<(u64, u64)>,
    starts: Vec<u64>,
    size: u64,
    lag: u64,
    mean: f64,
}

fn to_u64_ranges(set: &LevelSet) -> Option<Vec<(u64, u64)>> {
    set.ranges().iter().map(|(x, y)| Some((x.to_u64()?, y.to_u64()?))).collect()
}

fn contains(ranges: &[(u64, u64)], p: u64) -> bool {
    let idx = ranges.partition_point(|(x, _)| *x <= p);
    idx > 0 && p < ranges[idx - 1].1
}

impl Cover {
    fn new(schedule: &ConstructionSchedule, a: &LevelSet, b: &LevelSet, lag: &Nat, stage: usize) -> Result<Self> {
        let h = schedule.height(stage)?;
        let la = a.lift(schedule, stage)?;
        let lb = b.lift(schedule, stage)?;
        // B levels below m and A levels in the top m have images outside W_J
        let below = lb.count_below(lag);
        let above = if lag >= h { la.count() } else { la.count() - la.count_below(&(h - lag)) };
        let stray = below + above;
        if !stray.is_zero() {
            return Err(Error::Unresolvable {
                stage,
                lag: lag.clone(),
                mass: rat_from_nat(&stray) * schedule.width(stage)?,
            });
        }
        let too_big = || Error::InvalidParameter("full simulation needs stage heights below 2^63".into());
        if h.bits() > 63 {
            return Err(too_big());
        }
        let m = lag.to_u64().ok_or_else(too_big)?;
        let ra = to_u64_ranges(&la).ok_or_else(too_big)?;
        let rb = to_u64_ranges(&lb).ok_or_else(too_big)?;
        let pre_b = rb.iter().map(|&(x, y)| (Nat::from(x - m), Nat::from(y - m)));
        let union = LevelSet::from_ranges(stage, la.ranges().iter().cloned().chain(pre_b));
        let ranges = to_u64_ranges(&union).ok_or_else(too_big)?;
        let mut starts = Vec::with_capacity(ranges.len());
        let mut size = 0u64;
        for (x, y) in &ranges {
            starts.push(size);
            size += y - x;
        }
        let mean = rat_to_f64(&(union.measure(schedule)?));
        Ok(Cover { a: ra, b: rb, ranges, starts, size, lag: m, mean })
    }

    /// The `idx`-th covered position.
    fn position(&self, idx: u64) -> u64 {
        let r = self.starts.partition_point(|&s| s <= idx) - 1;
        self.ranges[r].0 + (idx - self.starts[r])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InheritanceKind {
    /// Lag `h_j`: the joint probability should approach `μ_*(C_{A,k})`.
    Rigidity { j: usize },
    /// Lag in the mixing set: the joint probability should approach the product.
    Mixing,
}

#[derive(Clone, Debug)]
pub struct InheritanceRow {
    pub kind: InheritanceKind,
    pub joint: JointProbability,
    pub target: ExpRational,
    pub difference: f64,
    /// `2(μ(A) - c)` for rigidity rows; `None` for mixing rows.
    pub bound: Option<Rat>,
    pub verdict: crate::correlation::Verdict,
}

#[derive(Clone, Debug)]
pub struct InheritanceReport {
    pub rows: Vec<InheritanceRow>,
    pub verdict: crate::correlation::Verdict,
}

/// The same correlation sequence also drives the Gaussian automorphism with this
/// spectral measure; no Gaussian computation is done here.
pub const GAUSSIAN_NOTE: &str =
    "the Gaussian automorphism built on the same correlation sequence is spectrally isomorphic; it is not simulated";

/// Tabulate joint cylinder probabilities along rigidity times `h_j` (event
/// `C_{A,k}` against itself) and along mixing lags (`C_{A,k}` against `C_{B,n}`).
///
/// Rigidity rows pass when `|P - μ_*(C_{A,k})| <= 2(μ(A) - c)`, which bounds the
/// chance that a point falls in `A Δ R^{-h_j}A`. Mixing rows pass only when the
/// product formula holds exactly (`c = 0`); otherwise they are inconclusive.
#[allow(clippy::too_many_arguments)]
pub fn suspension_inheritance_report(
    schedule: &ConstructionSchedule,
    a: &LevelSet,
    k: u32,
    rigidity_stages: &[usize],
    b: &LevelSet,
    n: u32,
    mixing_lags: &[Nat],
    options: EngineOptions,
) -> Result<InheritanceReport> {
    use crate::correlation::Verdict;
    let ma = a.measure(schedule)?;
    let mb = b.measure(schedule)?;
    let alone = poisson_pmf(&ma, k);
    let product = alone.mul(&poisson_pmf(&mb, n));
    let mut rows = Vec::new();
    for &j in rigidity_stages {
        let lag = schedule.height(j)?.clone();
        let joint = joint_shifted_event_prob(schedule, a, k, a, k, &lag, options.clone())?;
        let bound = (&ma - &joint.overlap) * Rat::from_integer(2.into());
        let difference = (joint.prob.to_f64() - alone.to_f64()).abs();
        // a few ulps of slack for the float rendering of two exact quantities
        let slack = 4.0 * f64::EPSILON * alone.to_f64().max(1e-300);
        let verdict = if difference <= rat_to_f64(&bound) + slack { Verdict::Pass } else { Verdict::Fail };
        rows.push(InheritanceRow {
            kind: InheritanceKind::Rigidity { j },
            joint,
            target: alone.clone(),
            difference,
            bound: Some(bound),
            verdict,
        });
    }
    for lag in mixing_lags {
        let joint = joint_shifted_event_prob(schedule, a, k, b, n, lag, options.clone())?;
        let difference = (joint.prob.to_f64() - product.to_f64()).abs();
        let verdict =
            if joint.overlap.is_zero() && joint.prob == product { Verdict::Pass } else { Verdict::Inconclusive };
        rows.push(InheritanceRow {
            kind: InheritanceKind::Mixing,
            joint,
            target: product.clone(),
            difference,
            bound: None,
            verdict,
        });
    }
    let verdict = Verdict::combine(rows.iter().map(|r| r.verdict));
    Ok(InheritanceReport { rows, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{nat, rat};
    use crate::schedule::{MeasureMode, SpacerSchedule};

    #[test]
    fn single_region_formula() {
        let p = poisson_pmf(&rat(1, 1), 0);
        assert_eq!((p.coefficient.clone(), p.exponent.clone()), (rat(1, 1), rat(-1, 1)));
        assert_eq!(p.to_f64(), (-1f64).exp());
        let p = poisson_pmf(&rat(1, 2), 2);
        assert_eq!((p.coefficient, p.exponent), (rat(1, 8), rat(-1, 2)));
    }

    #[test]
    fn disjoint_product_and_overlap_error() {
        let mut s = ConstructionSchedule::new(nat(3), rat(1, 1), MeasureMode::Infinite).unwrap();
        s.advance_stage(2, SpacerSchedule::Explicit(vec![nat(0), nat(2)])).unwrap();
        let a: LevelSet = "1:0".parse().unwrap();
        let b: LevelSet = "1:1-2".parse().unwrap();
        let p = poisson_event_prob(
            &s,
            &[ConfigurationEvent { region: a.clone(), count: 1 }, ConfigurationEvent { region: b, count: 0 }],
        )
        .unwrap();
        assert_eq!(p, ExpRational::new(rat(1, 1), rat(-3, 1)));
        // stage-2 level 3 is the second copy of stage-1 level 0
        let c: LevelSet = "2:3".parse().unwrap();
        assert!(matches!(
            poisson_event_prob(
                &s,
                &[ConfigurationEvent { region: a, count: 1 }, ConfigurationEvent { region: c, count: 1 }]
            ),
            Err(Error::OverlappingRegions)
        ));
    }

    #[test]
    fn overlap_endpoints() {
        let (a, b) = (rat(3, 2), rat(1, 2));
        for (k, n) in [(0, 0), (1, 2), (3, 1)] {
            let independent = joint_prob_from_overlap(&a, &b, &rat(0, 1), k, n).unwrap();
            assert_eq!(independent, poisson_pmf(&a, k).mul(&poisson_pmf(&b, n)));
        }
        let x = rat(7, 3);
        for k in 0..4 {
            for n in 0..4 {
                let p = joint_prob_from_overlap(&x, &x, &x, k, n).unwrap();
                let expected = if k == n { poisson_pmf(&x, k) } else { ExpRational::zero() };
                assert_eq!(p, expected);
            }
        }
        let zero_counts = joint_prob_from_overlap(&a, &b, &rat(1, 4), 0, 0).unwrap();
        assert_eq!(zero_counts, ExpRational::new(rat(1, 1), -(&a + &b - rat(1, 4))));
        assert!(joint_prob_from_overlap(&a, &b, &rat(3, 4), 1, 1).is_err());
    }

    #[test]
    fn normalization() {
        let (a, b, c) = (rat(1, 1), rat(2, 1), rat(1, 2));
        let mut prev = 0.0;
        for cap in [4u32, 8, 16, 24] {
            let total: f64 = (0..=cap)
                .flat_map(|k| (0..=cap).map(move |n| (k, n)))
                .map(|(k, n)| joint_prob_from_overlap(&a, &b, &c, k, n).unwrap().to_f64())
                .sum();
            assert!(total <= 1.0 + 1e-12 && total >= prev);
            prev = total;
        }
        assert!((prev - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_lag_gives_equal_counts() {
        let mut s = ConstructionSchedule::new(nat(2), rat(1, 1), MeasureMode::Infinite).unwrap();
        s.advance_stage(2, SpacerSchedule::Explicit(vec![nat(1), nat(3)])).unwrap();
        let a: LevelSet = "1:0-1".parse().unwrap();
        for mode in [SamplingMode::Pieces, SamplingMode::Full] {
            let counts = sample_joint_counts(&s, &a, &a, &nat(0), 2, 2000, 5, mode).unwrap();
            assert!(counts.cells.keys().all(|(x, y)| x == y));
        }
    }

    #[test]
    fn unresolvable_lag_is_reported() {
        let mut s = ConstructionSchedule::new(nat(2), rat(1, 1), MeasureMode::Infinite).unwrap();
        s.advance_stage(2, SpacerSchedule::Explicit(vec![nat(0), nat(0)])).unwrap();
        let a: LevelSet = "1:0-1".parse().unwrap();
        assert!(matches!(
            sample_joint_counts(&s, &a, &a, &nat(1), 2, 10, 1, SamplingMode::Full),
            Err(Error::Unresolvable { .. })
        ));
    }

    #[test]
    fn huge_coefficients_render() {
        let big = Rat::from_integer(BigInt::from(10).pow(400));
        let p = ExpRational::new(big, rat(-920, 1));
        let expected = (400.0 * 10f64.ln() - 920.0).exp();
        assert!((p.to_f64() / expected - 1.0).abs() < 1e-12);
    }
}
