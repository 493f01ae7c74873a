use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;

use super::{CorrelationResult, Method};
use crate::error::{Error, Result};
use crate::levelset::LevelSet;
use crate::numeric::{rat_from_nat, Nat, Rat};
use crate::schedule::ConstructionSchedule;

/// Which set sits at the lower end of a counted pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    /// `label(p) ∈ A`, `label(p + δ) ∈ B`.
    Forward,
    /// `label(p) ∈ B`, `label(p + δ) ∈ A`.
    Reverse,
}

impl Orientation {
    fn flip(self) -> Self {
        match self {
            Orientation::Forward => Orientation::Reverse,
            Orientation::Reverse => Orientation::Forward,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EngineOptions {
    /// Largest acceptable `hi - lo`; zero asks for an exact value.
    pub tolerance: Rat,
    /// Highest stage the engine may use; defaults to the last built stage.
    pub max_stage: Option<usize>,
    /// Memo entries kept before insertion stops; unbounded when `None`.
    pub cache_cap: Option<usize>,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { tolerance: Rat::zero(), max_stage: None, cache_cap: None }
    }
}

/// Correlation evaluator for one pair of level sets over one schedule.
///
/// Pair counts of `W_{j+1}` split into pair counts of `W_j` at shifted lags: a
/// pair whose ends fall in copies `k <= k'` at copy offsets `o_k, o_{k'}` is a
/// `W_j` pair at lag `m - (o_{k'} - o_k)`, taken in reverse orientation when that
/// shift is negative. Results are memoized by `(stage, lag, orientation)`. The
/// memo belongs to the engine, so parallel callers use one engine per worker.
pub struct CorrelationEngine<'a> {
    schedule: &'a ConstructionSchedule,
    base: usize,
    a: LevelSet,
    b: LevelSet,
    measure_a: Rat,
    options: EngineOptions,
    memo: HashMap<(usize, Nat, Orientation), Nat>,
}

impl<'a> CorrelationEngine<'a> {
    pub fn new(schedule: &'a ConstructionSchedule, a: &LevelSet, b: &LevelSet, options: EngineOptions) -> Result<Self> {
        a.validate(schedule)?;
        b.validate(schedule)?;
        let base = a.stage().max(b.stage());
        if let Some(max) = options.max_stage {
            schedule.check_stage(max)?;
            if max < base {
                return Err(Error::StageOrder { reference: base, query: max });
            }
        }
        let measure_a = a.measure(schedule)?;
        Ok(CorrelationEngine {
            schedule,
            base,
            a: a.lift(schedule, base)?,
            b: b.lift(schedule, base)?,
            measure_a,
            options,
            memo: HashMap::new(),
        })
    }

    pub fn base_stage(&self) -> usize {
        self.base
    }

    pub fn max_stage(&self) -> usize {
        self.options.max_stage.unwrap_or(self.schedule.stages())
    }

    pub fn cache_len(&self) -> usize {
        self.memo.len()
    }

    fn height(&self, j: usize) -> &Nat {
        &self.schedule.heights()[j - 1]
    }

    /// Pairs `(p, p + lag)` inside `W_stage` with the orientation's labels.
    pub fn pair_count(&mut self, stage: usize, lag: &Nat, orientation: Orientation) -> Nat {
        if lag >= self.height(stage) {
            return Nat::zero();
        }
        if stage == self.base {
            return match orientation {
                Orientation::Forward => self.a.shifted_overlap(&self.b, lag),
                Orientation::Reverse => self.b.shifted_overlap(&self.a, lag),
            };
        }
        let key = (stage, lag.clone(), orientation);
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }

        let prev = stage - 1;
        let h = self.height(prev).clone();
        let mut sub_lags: BTreeMap<(Nat, Orientation), u64> = BTreeMap::new();
        {
            let offsets = &self.schedule.layout(prev).offsets;
            for (k, o_k) in offsets.iter().enumerate() {
                let reach = o_k + lag;
                // partner copies start strictly inside (reach - h, reach + h)
                let first = if reach >= h {
                    let floor = &reach - &h;
                    offsets.partition_point(|o| o <= &floor)
                } else {
                    0
                };
                let upper = &reach + &h;
                for o_kk in offsets[first.max(k)..].iter().take_while(|o| *o < &upper) {
                    let gap = o_kk - o_k;
                    let entry = if lag >= &gap { (lag - &gap, orientation) } else { (gap - lag, orientation.flip()) };
                    *sub_lags.entry(entry).or_insert(0) += 1;
                }
            }
        }

        let mut total = Nat::zero();
        for ((sub, orient), mult) in sub_lags {
            let count = self.pair_count(prev, &sub, orient);
            total += count * mult;
        }
        if self.options.cache_cap.is_none_or(|cap| self.memo.len() < cap) {
            self.memo.insert(key, total.clone());
        }
        total
    }

    fn total_count(&self, stage: usize) -> Nat {
        let copies = self.schedule.copies_between(self.base, stage).expect("stage checked by caller");
        self.a.count() * copies
    }

    /// `A`-positions `< bound` in `W_stage`.
    fn prefix_count(&self, stage: usize, bound: &Nat) -> Nat {
        let mut acc = Nat::zero();
        let mut stage = stage;
        let mut x = bound.clone();
        loop {
            if stage == self.base {
                return acc + self.a.count_below(&x);
            }
            if &x >= self.height(stage) {
                return acc + self.total_count(stage);
            }
            let prev = stage - 1;
            let layout = self.schedule.layout(prev);
            let k = layout.block_of(&x);
            let within = &x - &layout.offsets[k];
            let per_copy = self.total_count(prev);
            acc += &per_copy * k;
            if &within >= self.height(prev) {
                return acc + per_copy;
            }
            x = within;
            stage = prev;
        }
    }

    /// `A`-levels in the top `lag` positions of `W_stage`.
    pub fn top_count(&self, stage: usize, lag: &Nat) -> Nat {
        let h = self.height(stage);
        let total = self.total_count(stage);
        if lag >= h {
            return total;
        }
        total - self.prefix_count(stage, &(h - lag))
    }

    /// Certified interval from the stage-`stage` tower alone.
    pub fn windowed(&mut self, stage: usize, lag: &Nat) -> Result<CorrelationResult> {
        self.schedule.check_stage(stage)?;
        if stage < self.base {
            return Err(Error::StageOrder { reference: self.base, query: stage });
        }
        let w = self.schedule.width(stage)?.clone();
        let pairs = self.pair_count(stage, lag, Orientation::Forward);
        let top = self.top_count(stage, lag);
        let lo = rat_from_nat(&pairs) * &w;
        let hi = &lo + rat_from_nat(&top) * &w;
        Ok(CorrelationResult { lag: lag.clone(), lo, hi, stage, method: Method::Windowed })
    }

    /// Walk up the stages until the certified width meets the tolerance.
    pub fn correlation(&mut self, lag: &Nat) -> Result<CorrelationResult> {
        let max = self.max_stage();
        let mut best = None;
        for stage in self.base..=max {
            if lag >= self.height(stage) && stage < max {
                // no pairs fit yet; interval is [0, μ(A)]
                if self.measure_a > self.options.tolerance {
                    continue;
                }
            }
            let mut result = self.windowed(stage, lag)?;
            result.method = Method::ExactDp;
            if result.width() <= self.options.tolerance {
                return Ok(result);
            }
            best = Some(result);
        }
        let best = best.expect("loop visits the last stage");
        Err(Error::ToleranceUnreachable { best: Box::new(best), tolerance: self.options.tolerance.clone() })
    }

    /// Like [`correlation`](Self::correlation) but returns the best interval instead of an error.
    pub fn correlation_or_best(&mut self, lag: &Nat) -> Result<CorrelationResult> {
        match self.correlation(lag) {
            Err(Error::ToleranceUnreachable { best, .. }) => Ok(*best),
            other => other,
        }
    }
}

/// Certified `μ(R^m A ∩ B)` within `options.tolerance`.
pub fn correlation_exact(
    schedule: &ConstructionSchedule,
    a: &LevelSet,
    b: &LevelSet,
    lag: &Nat,
    options: EngineOptions,
) -> Result<CorrelationResult> {
    CorrelationEngine::new(schedule, a, b, options)?.correlation(lag)
}
