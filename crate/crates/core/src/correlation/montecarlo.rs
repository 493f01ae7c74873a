use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};
use crate::levelset::LevelSet;
use crate::numeric::{rat_to_f64, uniform_below, Nat};
use crate::schedule::{ConstructionSchedule, Label};

pub const CONFIDENCE_99: f64 = 0.99;

/// Counter-based stream: same `(seed, stream)` always gives the same draws,
/// independent of how streams are spread across workers.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Exact (Clopper–Pearson) two-sided interval for a binomial proportion.
pub fn clopper_pearson(hits: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(trials > 0 && hits <= trials);
    let alpha = 1.0 - confidence;
    let (x, n) = (hits as f64, trials as f64);
    let lo = if hits == 0 { 0.0 } else { Beta::new(x, n - x + 1.0).expect("positive shape").inverse_cdf(alpha / 2.0) };
    let hi = if hits == trials {
        1.0
    } else {
        Beta::new(x + 1.0, n - x).expect("positive shape").inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloEstimate {
    pub lag: Nat,
    pub stage: usize,
    pub samples: u64,
    pub hits: u64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl MonteCarloEstimate {
    pub fn contains(&self, value: f64) -> bool {
        self.ci_lo <= value && value <= self.ci_hi
    }
}

fn in_set(schedule: &ConstructionSchedule, set: &LevelSet, stage: usize, p: &Nat) -> Result<bool> {
    Ok(match schedule.level_label(stage, p, set.stage())? {
        Label::Level(l) => set.contains(&l),
        Label::Spacer => false,
    })
}

/// Estimate the stage-`J` windowed correlation from uniform positions of the tower.
pub fn correlation_montecarlo(
    schedule: &ConstructionSchedule,
    a: &LevelSet,
    b: &LevelSet,
    lag: &Nat,
    stage: usize,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    a.validate(schedule)?;
    b.validate(schedule)?;
    let height = schedule.height(stage)?.clone();
    if a.stage() > stage || b.stage() > stage {
        return Err(Error::StageOrder { reference: a.stage().max(b.stage()), query: stage });
    }
    let mut rng = stream_rng(seed, 0);
    let mut hits = 0u64;
    for _ in 0..samples {
        let p = uniform_below(&mut rng, &height);
        if !in_set(schedule, a, stage, &p)? {
            continue;
        }
        let q = &p + lag;
        if q < height && in_set(schedule, b, stage, &q)? {
            hits += 1;
        }
    }
    let scale = rat_to_f64(&schedule.stage_measure(stage)?);
    let (lo, hi) = clopper_pearson(hits, samples, CONFIDENCE_99);
    let estimate = if hits.is_zero() { 0.0 } else { scale * hits as f64 / samples as f64 };
    Ok(MonteCarloEstimate { lag: lag.clone(), stage, samples, hits, estimate, ci_lo: scale * lo, ci_hi: scale * hi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{nat, rat};
    use crate::schedule::{MeasureMode, SpacerSchedule};

    #[test]
    fn clopper_pearson_edges() {
        let (lo, hi) = clopper_pearson(0, 100, 0.99);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.04 && hi < 0.06);
        let (lo, hi) = clopper_pearson(100, 100, 0.99);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.94);
        let (lo, hi) = clopper_pearson(50, 100, 0.99);
        assert!(lo < 0.5 && hi > 0.5);
    }

    #[test]
    fn whole_tower_at_lag_zero() {
        let mut s = ConstructionSchedule::new(nat(3), rat(1, 1), MeasureMode::Infinite).unwrap();
        s.advance_stage(2, SpacerSchedule::Explicit(vec![nat(1), nat(2)])).unwrap();
        let a = LevelSet::whole_tower(&s, 1).unwrap();
        let est = correlation_montecarlo(&s, &a, &a, &nat(0), 2, 5000, 11).unwrap();
        assert!(est.contains(3.0), "{est:?}");
        let again = correlation_montecarlo(&s, &a, &a, &nat(0), 2, 5000, 11).unwrap();
        assert_eq!(est, again);
    }
}
