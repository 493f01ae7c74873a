//! Parameter synthesis: turn a description of the set of times along which the
//! construction must mix into concrete cut and spacer choices.
//!
//! Two families of constructions are covered:
//!
//! * rigid, infinite-measure constructions mixing along a prescribed set
//!   (`r_j = j` with last-column spacers, or `r_j = 2` with two-column spacers),
//!   plus the height-subsequence variant whose non-mixing times are signed sums of heights;
//! * finite-measure staircase constructions alternating mixing and rigid stages.
//!
//! Every choice is "smallest admissible", so synthesis is deterministic.
//! [`audit`] re-derives every safety window from the finished schedule
//! through a separate code path.

pub mod audit;
mod explicit;
mod heights;
mod rigid;
mod staircase;

pub use audit::{
    audit_theorem1, audit_theorem2, audit_theorem3, audited_cutoff, resolvable_limit, AuditCheck, AuditReport,
    AuditWindow,
};
pub use explicit::{ExplicitPattern, ExplicitSet};
pub use heights::{theorem3_heights, HeightPool, DEFAULT_GROWTH};
pub use rigid::{embed_zero_density, rigid_cut, synthesize_theorem1, synthesize_theorem2, SynthesisOptions};
pub use staircase::{
    kappa_lags, staircase_params, synthesize_staircase, StaircasePlan, StaircaseReport, StaircaseStage,
};

use num_traits::{ToPrimitive, Zero};

use crate::correlation::montecarlo::stream_rng;
use crate::error::{Error, Result};
use crate::numeric::{nat, uniform_below, Nat};
use rand::Rng;

/// One entry of an interval family: the non-mixing region contains
/// `[n·a, n·a + len]` for `n = 1..=multiplicity`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyInterval {
    pub a: Nat,
    pub len: Nat,
    pub multiplicity: usize,
}

impl FamilyInterval {
    pub fn new(a: Nat, len: Nat, multiplicity: usize) -> Self {
        FamilyInterval { a, len, multiplicity }
    }

    /// Closed interval `[n·a, n·a + len]`.
    pub fn copy(&self, n: usize) -> (Nat, Nat) {
        let lo = &self.a * n;
        let hi = &lo + &self.len;
        (lo, hi)
    }

    pub fn covers(&self, m: &Nat) -> bool {
        (1..=self.multiplicity).any(|n| {
            let (lo, hi) = self.copy(n);
            &lo <= m && m <= &hi
        })
    }
}

/// The set along which mixing is required, in one of two forms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MixingSetSpec {
    /// Mixing set = everything outside the listed intervals.
    IntervalFamily(Vec<FamilyInterval>),
    /// Mixing set = the listed elements, known up to a finite horizon.
    ExplicitSet(ExplicitSet),
}

impl MixingSetSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            MixingSetSpec::IntervalFamily(family) => {
                if family.is_empty() {
                    return Err(Error::InvalidParameter("interval family is empty".into()));
                }
                for (i, e) in family.iter().enumerate() {
                    if e.a.is_zero() || e.len.is_zero() || e.multiplicity == 0 {
                        return Err(Error::InvalidParameter(format!(
                            "interval {} needs a, len and multiplicity all positive",
                            i + 1
                        )));
                    }
                }
                for (i, w) in family.windows(2).enumerate() {
                    if w[1].a <= w[0].a || w[1].len <= w[0].len {
                        return Err(Error::InvalidParameter(format!(
                            "interval family must have strictly increasing a and len (entries {} and {})",
                            i + 1,
                            i + 2
                        )));
                    }
                }
                Ok(())
            }
            MixingSetSpec::ExplicitSet(set) => set.validate(),
        }
    }

    /// Whether `m` belongs to the mixing set, as far as the description determines it.
    pub fn is_mixing_lag(&self, m: &Nat) -> bool {
        match self {
            MixingSetSpec::IntervalFamily(family) => !family.iter().any(|e| e.covers(m)),
            MixingSetSpec::ExplicitSet(set) => m.to_u64().is_some_and(|v| set.contains(v)),
        }
    }

    /// Deterministic sample of up to `count` mixing lags in `[lo, hi]`, sorted.
    ///
    /// Interval families get lags just outside every listed interval copy in
    /// range plus log-uniform draws; explicit sets get evenly spaced elements.
    pub fn sample_mixing_lags(&self, lo: &Nat, hi: &Nat, count: usize, seed: u64) -> Vec<Nat> {
        let mut out: Vec<Nat> = Vec::new();
        if lo > hi || count == 0 {
            return out;
        }
        match self {
            MixingSetSpec::IntervalFamily(family) => {
                let mut edges = Vec::new();
                for e in family {
                    for n in 1..=e.multiplicity {
                        let (a, b) = e.copy(n);
                        if !a.is_zero() {
                            edges.push(a - 1u32);
                        }
                        edges.push(b + 1u32);
                    }
                }
                edges.retain(|m| m >= lo && m <= hi && self.is_mixing_lag(m));
                edges.sort();
                edges.dedup();
                let take = edges.len().min(count / 2);
                out.extend(spread(&edges, take));
                let mut rng = stream_rng(seed, 0);
                let (lo_bits, hi_bits) = (lo.bits().max(1), hi.bits());
                let mut attempts = 0;
                while out.len() < count && attempts < 100 * count {
                    attempts += 1;
                    let bits = rng.random_range(lo_bits..=hi_bits);
                    let top = Nat::from(1u32) << bits as usize;
                    let m = uniform_below(&mut rng, &top);
                    if &m >= lo && &m <= hi && self.is_mixing_lag(&m) && !out.contains(&m) {
                        out.push(m);
                    }
                }
            }
            MixingSetSpec::ExplicitSet(set) => {
                let (Some(lo), hi) = (lo.to_u64(), hi.to_u64().unwrap_or(u64::MAX)) else {
                    return out;
                };
                let inside: Vec<Nat> =
                    set.elements().iter().copied().filter(|&x| x >= lo && x <= hi).map(nat).collect();
                out.extend(spread(&inside, count));
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

/// `take` evenly spaced entries of `items`, first and last included.
fn spread(items: &[Nat], take: usize) -> Vec<Nat> {
    if take >= items.len() {
        return items.to_vec();
    }
    if take == 0 {
        return Vec::new();
    }
    if take == 1 {
        return vec![items[0].clone()];
    }
    (0..take).map(|i| items[i * (items.len() - 1) / (take - 1)].clone()).collect()
}
