//! Finite unions of tower levels at an explicit reference stage.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numeric::{rat_from_nat, Nat, Rat};
use crate::schedule::ConstructionSchedule;

/// Sorted, disjoint, non-adjacent half-open ranges of level indices of stage `stage`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LevelSet {
    stage: usize,
    ranges: Vec<(Nat, Nat)>,
}

impl LevelSet {
    /// Build from arbitrary half-open ranges; empty ranges are dropped and the rest merged.
    pub fn from_ranges(stage: usize, ranges: impl IntoIterator<Item = (Nat, Nat)>) -> Self {
        let mut ranges: Vec<(Nat, Nat)> = ranges.into_iter().filter(|(a, b)| a < b).collect();
        ranges.sort();
        let mut merged: Vec<(Nat, Nat)> = Vec::with_capacity(ranges.len());
        for (a, b) in ranges {
            match merged.last_mut() {
                Some(last) if a <= last.1 => {
                    if b > last.1 {
                        last.1 = b;
                    }
                }
                _ => merged.push((a, b)),
            }
        }
        LevelSet { stage, ranges: merged }
    }

    pub fn from_levels(stage: usize, levels: impl IntoIterator<Item = Nat>) -> Self {
        Self::from_ranges(
            stage,
            levels.into_iter().map(|l| {
                let next = &l + 1u32;
                (l, next)
            }),
        )
    }

    /// Every level of the stage-`stage` tower.
    pub fn whole_tower(schedule: &ConstructionSchedule, stage: usize) -> Result<Self> {
        let h = schedule.height(stage)?.clone();
        Ok(Self::from_ranges(stage, [(Nat::zero(), h)]))
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn ranges(&self) -> &[(Nat, Nat)] {
        &self.ranges
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Number of levels.
    pub fn count(&self) -> Nat {
        self.ranges.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, level: &Nat) -> bool {
        let idx = self.ranges.partition_point(|(a, _)| a <= level);
        idx > 0 && level < &self.ranges[idx - 1].1
    }

    /// Levels strictly below `bound`.
    pub fn count_below(&self, bound: &Nat) -> Nat {
        let mut total = Nat::zero();
        for (a, b) in &self.ranges {
            if a >= bound {
                break;
            }
            total += if b <= bound { b - a } else { bound - a };
        }
        total
    }

    /// Indices must lie inside the reference tower.
    pub fn validate(&self, schedule: &ConstructionSchedule) -> Result<()> {
        let h = schedule
            .height(self.stage)
            .map_err(|_| Error::InvalidLevelSet(format!("stage {} is not built", self.stage)))?;
        if let Some((_, end)) = self.ranges.last() {
            if end > h {
                return Err(Error::InvalidLevelSet(format!(
                    "level {} is outside stage {} of height {}",
                    end - 1u32,
                    self.stage,
                    h
                )));
            }
        }
        Ok(())
    }

    /// `count · w_n`.
    pub fn measure(&self, schedule: &ConstructionSchedule) -> Result<Rat> {
        Ok(rat_from_nat(&self.count()) * schedule.width(self.stage)?)
    }

    /// Re-express at a later stage: each level becomes the set of its copy positions.
    pub fn lift(&self, schedule: &ConstructionSchedule, target: usize) -> Result<LevelSet> {
        if target < self.stage {
            return Err(Error::StageOrder { reference: self.stage, query: target });
        }
        self.validate(schedule)?;
        schedule.check_stage(target)?;
        let mut ranges = self.ranges.clone();
        for j in self.stage..target {
            let offsets = schedule.copy_offsets(j)?;
            let mut next = Vec::with_capacity(ranges.len() * offsets.len());
            for o in offsets {
                next.extend(ranges.iter().map(|(a, b)| (a + o, b + o)));
            }
            ranges = next;
        }
        Ok(LevelSet::from_ranges(target, ranges))
    }

    /// `#{x ∈ self : x + shift ∈ other}` for two sets at the same stage.
    pub fn shifted_overlap(&self, other: &LevelSet, shift: &Nat) -> Nat {
        let mut total = Nat::zero();
        let mut j = 0;
        for (a, b) in &self.ranges {
            let (sa, sb) = (a + shift, b + shift);
            while j < other.ranges.len() && other.ranges[j].1 <= sa {
                j += 1;
            }
            let mut k = j;
            while k < other.ranges.len() && other.ranges[k].0 < sb {
                let lo = if other.ranges[k].0 > sa { &other.ranges[k].0 } else { &sa };
                let hi = if other.ranges[k].1 < sb { &other.ranges[k].1 } else { &sb };
                total += hi - lo;
                k += 1;
            }
        }
        total
    }

    pub fn intersection_count(&self, other: &LevelSet) -> Nat {
        self.shifted_overlap(other, &Nat::zero())
    }

    pub fn iter_levels(&self) -> impl Iterator<Item = Nat> + '_ {
        self.ranges.iter().flat_map(|(a, b)| {
            let mut cur = a.clone();
            std::iter::from_fn(move || {
                if &cur < b {
                    let out = cur.clone();
                    cur += 1u32;
                    Some(out)
                } else {
                    None
                }
            })
        })
    }
}

/// `stage:spec` with comma-separated levels or inclusive ranges, e.g. `2:0-3,7`.
impl FromStr for LevelSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidLevelSet(format!("cannot parse `{s}`; expected `stage:lo-hi,level,...`"));
        let (stage, body) = s.split_once(':').ok_or_else(bad)?;
        let stage: usize = stage.trim().parse().map_err(|_| bad())?;
        if stage == 0 {
            return Err(bad());
        }
        let mut ranges = Vec::new();
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (lo, hi) = match part.split_once('-') {
                Some((lo, hi)) => (lo.trim(), hi.trim()),
                None => (part, part),
            };
            let lo: Nat = lo.parse().map_err(|_| bad())?;
            let hi: Nat = hi.parse().map_err(|_| bad())?;
            if hi < lo {
                return Err(bad());
            }
            ranges.push((lo, hi + 1u32));
        }
        Ok(LevelSet::from_ranges(stage, ranges))
    }
}

impl fmt::Display for LevelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.stage)?;
        for (i, (a, b)) in self.ranges.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            let last = b - 1u32;
            if &last == a {
                write!(f, "{a}")?;
            } else {
                write!(f, "{a}-{last}")?;
            }
        }
        Ok(())
    }
}
