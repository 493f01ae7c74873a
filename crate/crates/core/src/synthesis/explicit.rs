use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Finite prefix of a set of positive integers, complete up to `horizon`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitSet {
    elements: Vec<u64>,
    horizon: u64,
    /// The caller vouches that the full set has zero density; nothing here can check it.
    attested: bool,
}

impl ExplicitSet {
    pub fn new(elements: Vec<u64>, horizon: u64, attested: bool) -> Result<Self> {
        let set = ExplicitSet { elements, horizon, attested };
        set.validate()?;
        Ok(set)
    }

    pub fn from_pattern(pattern: ExplicitPattern, horizon: u64, attested: bool) -> Result<Self> {
        Self::new(pattern.generate(horizon), horizon, attested)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        if self.elements.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("explicit set must be strictly increasing".into()));
        }
        match (self.elements.first(), self.elements.last()) {
            (Some(&0), _) => Err(Error::InvalidParameter("explicit set elements start at 1".into())),
            (_, Some(&last)) if last > self.horizon => {
                Err(Error::InvalidParameter(format!("element {last} lies beyond the horizon {}", self.horizon)))
            }
            _ => Ok(()),
        }
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn attested(&self) -> bool {
        self.attested
    }

    pub fn contains(&self, x: u64) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    /// Largest element in the closed window `[lo, hi]`.
    pub fn last_in(&self, lo: u128, hi: u128) -> Option<u64> {
        let idx = self.elements.partition_point(|&x| u128::from(x) <= hi);
        let x = *self.elements[..idx].last()?;
        (u128::from(x) >= lo).then_some(x)
    }

    /// Elements per unit length in the worst window of the given length inside the horizon.
    pub fn max_window_density(&self, window: u64) -> f64 {
        if window == 0 || self.elements.is_empty() {
            return 0.0;
        }
        let mut best = 0usize;
        let mut start = 0usize;
        for (end, &x) in self.elements.iter().enumerate() {
            while x - self.elements[start] >= window {
                start += 1;
            }
            best = best.max(end + 1 - start);
        }
        best as f64 / window as f64
    }
}

/// Generators for common sparse sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExplicitPattern {
    Squares,
    Cubes,
    /// `b^e` with `b >= 1`, `e >= 2`.
    PerfectPowers,
    PowersOfTwo,
    Factorials,
    /// Positive multiples of `k`.
    Multiples(u64),
}

impl ExplicitPattern {
    pub fn generate(self, horizon: u64) -> Vec<u64> {
        let mut out: Vec<u64> = match self {
            ExplicitPattern::Squares => powers_of_bases(2, horizon),
            ExplicitPattern::Cubes => powers_of_bases(3, horizon),
            ExplicitPattern::PerfectPowers => {
                let mut all = Vec::new();
                for e in 2..64 {
                    let v = powers_of_bases(e, horizon);
                    if v.len() <= 1 && e > 2 {
                        all.extend(v);
                        break;
                    }
                    all.extend(v);
                }
                all
            }
            ExplicitPattern::PowersOfTwo => {
                std::iter::successors(Some(1u64), |&x| x.checked_mul(2)).take_while(|&x| x <= horizon).collect()
            }
            ExplicitPattern::Factorials => {
                let mut v = Vec::new();
                let mut f = 1u64;
                for k in 1u64.. {
                    match f.checked_mul(k) {
                        Some(next) if next <= horizon => {
                            f = next;
                            v.push(f);
                        }
                        _ => break,
                    }
                }
                v
            }
            ExplicitPattern::Multiples(k) => (1..=horizon / k.max(1)).map(|i| i * k).collect(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn powers_of_bases(e: u32, horizon: u64) -> Vec<u64> {
    (1u64..).map_while(|b| b.checked_pow(e).filter(|&v| v <= horizon)).collect()
}

impl fmt::Display for ExplicitPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExplicitPattern::Squares => f.write_str("squares"),
            ExplicitPattern::Cubes => f.write_str("cubes"),
            ExplicitPattern::PerfectPowers => f.write_str("perfect-powers"),
            ExplicitPattern::PowersOfTwo => f.write_str("powers-of-two"),
            ExplicitPattern::Factorials => f.write_str("factorials"),
            ExplicitPattern::Multiples(k) => write!(f, "multiples:{k}"),
        }
    }
}

impl FromStr for ExplicitPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "squares" => ExplicitPattern::Squares,
            "cubes" => ExplicitPattern::Cubes,
            "perfect-powers" => ExplicitPattern::PerfectPowers,
            "powers-of-two" => ExplicitPattern::PowersOfTwo,
            "factorials" => ExplicitPattern::Factorials,
            other => match other.strip_prefix("multiples:").map(str::parse::<u64>) {
                Some(Ok(k)) if k > 0 => ExplicitPattern::Multiples(k),
                _ => return Err(Error::Config(format!("unknown pattern `{s}`"))),
            },
        })
    }
}
