//! Decomposition of lags as signed sums of tower heights plus a bounded residual:
//! `m = h_{j_1} ± h_{j_2} ± ... ± h_{j_p} + s` with `j_1 > j_2 > ... > j_p`.

use std::fmt;

use num_bigint::{BigInt, Sign};
use num_traits::{Signed, Zero};

use crate::numeric::{to_bigint, Nat};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpTerm {
    pub positive: bool,
    /// 1-based stage index of the height.
    pub stage: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpForm {
    pub terms: Vec<SpTerm>,
    pub residual: BigInt,
}

impl SpForm {
    pub fn p(&self) -> usize {
        self.terms.len()
    }

    pub fn reconstruct(&self, heights: &[Nat]) -> BigInt {
        self.terms.iter().fold(self.residual.clone(), |acc, t| {
            let h = to_bigint(&heights[t.stage - 1]);
            if t.positive {
                acc + h
            } else {
                acc - h
            }
        })
    }
}

impl fmt::Display for SpForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            match (i, t.positive) {
                (0, _) => write!(f, "h{}", t.stage)?,
                (_, true) => write!(f, " + h{}", t.stage)?,
                (_, false) => write!(f, " - h{}", t.stage)?,
            }
        }
        match self.residual.sign() {
            Sign::Minus => write!(f, " - {}", self.residual.abs()),
            _ => write!(f, " + {}", self.residual),
        }
    }
}

/// Greedy decomposition, with an exhaustive fallback over `p <= 3`.
///
/// Heights must be strictly increasing. The first term is always `+`. Returns
/// `None` when no form with `|s| <= s_max` and `1 <= p <= p_max` is found.
pub fn sp_decompose(lag: &Nat, heights: &[Nat], s_max: &Nat, p_max: usize) -> Option<SpForm> {
    if lag.is_zero() || heights.is_empty() || p_max == 0 {
        return None;
    }
    let hs: Vec<BigInt> = heights.iter().map(to_bigint).collect();
    let bound = to_bigint(s_max);
    greedy(&to_bigint(lag), &hs, &bound, p_max).or_else(|| exhaustive(&to_bigint(lag), &hs, &bound, p_max.min(3)))
}

fn greedy(m: &BigInt, hs: &[BigInt], bound: &BigInt, p_max: usize) -> Option<SpForm> {
    let mut rem = m.clone();
    let mut terms = Vec::new();
    let mut below = hs.len();
    loop {
        if !terms.is_empty() && rem.abs() <= *bound {
            return Some(SpForm { terms, residual: rem });
        }
        if terms.len() == p_max || below == 0 {
            return None;
        }
        let positive = terms.is_empty() || rem.is_positive();
        let target = if positive { rem.clone() } else { -rem.clone() };
        // nearest height below the last index used; ties go to the larger height
        let (idx, _) = hs[..below]
            .iter()
            .enumerate()
            .map(|(i, h)| (i, (&target - h).abs()))
            .min_by(|(i, x), (j, y)| x.cmp(y).then(j.cmp(i)))?;
        if positive {
            rem -= &hs[idx];
        } else {
            rem += &hs[idx];
        }
        terms.push(SpTerm { positive, stage: idx + 1 });
        below = idx;
    }
}

fn exhaustive(m: &BigInt, hs: &[BigInt], bound: &BigInt, p_max: usize) -> Option<SpForm> {
    let mut best: Option<SpForm> = None;
    let mut consider = |terms: Vec<SpTerm>, rem: BigInt| {
        if rem.abs() > *bound {
            return;
        }
        let better = match &best {
            None => true,
            Some(b) => (terms.len(), rem.abs()) < (b.terms.len(), b.residual.abs()),
        };
        if better {
            best = Some(SpForm { terms, residual: rem });
        }
    };
    let n = hs.len();
    for i in 0..n {
        let r1 = m - &hs[i];
        let t1 = SpTerm { positive: true, stage: i + 1 };
        consider(vec![t1], r1.clone());
        if p_max < 2 {
            continue;
        }
        for j in 0..i {
            for s2 in [true, false] {
                let r2 = if s2 { &r1 - &hs[j] } else { &r1 + &hs[j] };
                let t2 = SpTerm { positive: s2, stage: j + 1 };
                consider(vec![t1, t2], r2.clone());
                if p_max < 3 {
                    continue;
                }
                for (k, hk) in hs.iter().enumerate().take(j) {
                    for s3 in [true, false] {
                        let r3 = if s3 { &r2 - hk } else { &r2 + hk };
                        consider(vec![t1, t2, SpTerm { positive: s3, stage: k + 1 }], r3);
                    }
                }
            }
        }
    }
    best
}
