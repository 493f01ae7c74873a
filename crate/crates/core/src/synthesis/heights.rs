use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::numeric::{Nat, Rat};
use crate::schedule::{ConstructionSchedule, MeasureMode, SpacerSchedule};

pub const DEFAULT_GROWTH: u64 = 8;

/// Infinite set of admissible heights, or a finite sorted prefix of one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HeightPool {
    Explicit(Vec<Nat>),
    Integers,
    Squares,
    Cubes,
}

impl HeightPool {
    /// Smallest element `>= x`, if the pool reaches that far.
    pub fn smallest_at_least(&self, x: &Nat) -> Option<Nat> {
        let x = if x.is_zero() { Nat::one() } else { x.clone() };
        match self {
            HeightPool::Explicit(v) => v.get(v.partition_point(|e| e < &x)).cloned(),
            HeightPool::Integers => Some(x),
            HeightPool::Squares => Some(ceil_root(&x, 2).pow(2)),
            HeightPool::Cubes => Some(ceil_root(&x, 3).pow(3)),
        }
    }

    pub fn contains(&self, x: &Nat) -> bool {
        !x.is_zero() && self.smallest_at_least(x).as_ref() == Some(x)
    }

    pub fn validate(&self) -> Result<()> {
        if let HeightPool::Explicit(v) = self {
            if v.first().is_some_and(Zero::is_zero) || v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter("height pool must be strictly increasing and positive".into()));
            }
        }
        Ok(())
    }
}

fn ceil_root(x: &Nat, k: u32) -> Nat {
    let r = x.nth_root(k);
    if &r.pow(k) == x {
        r
    } else {
        r + 1u32
    }
}

impl fmt::Display for HeightPool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeightPool::Explicit(_) => "explicit",
            HeightPool::Integers => "integers",
            HeightPool::Squares => "squares",
            HeightPool::Cubes => "cubes",
        })
    }
}

impl FromStr for HeightPool {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "integers" => Ok(HeightPool::Integers),
            "squares" => Ok(HeightPool::Squares),
            "cubes" => Ok(HeightPool::Cubes),
            _ => Err(Error::Config(format!("unknown height pool `{s}`"))),
        }
    }
}

/// Heights drawn from a pool: `h_1` is its least element and `h_{j+1}` the least
/// element `>= growth·h_j`; every cut is `r = 2` with spacers `(0, h_{j+1} - 2h_j)`.
pub fn theorem3_heights(pool: &HeightPool, growth: u64, stages: usize, w1: Rat) -> Result<ConstructionSchedule> {
    if growth < 3 {
        return Err(Error::InvalidParameter("growth factor must be at least 3".into()));
    }
    if stages == 0 {
        return Err(Error::InvalidParameter("at least 1 stage is needed".into()));
    }
    pool.validate()?;
    let h1 = pool.smallest_at_least(&Nat::one()).ok_or(Error::PoolExhausted { stage: 1, needed: Nat::one() })?;
    let mut schedule = ConstructionSchedule::new(h1, w1, MeasureMode::Infinite)?;
    for j in 1..stages {
        let h = schedule.height(j)?.clone();
        let needed = &h * growth;
        let next = pool
            .smallest_at_least(&needed)
            .ok_or_else(|| Error::PoolExhausted { stage: j + 1, needed: needed.clone() })?;
        schedule.advance_stage(2, SpacerSchedule::TwoColumn(next - &h * 2u32))?;
    }
    Ok(schedule)
}
