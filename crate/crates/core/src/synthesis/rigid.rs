use num_traits::{One, ToPrimitive};

use super::{ExplicitSet, FamilyInterval, MixingSetSpec};
use crate::error::{Error, Result};
use crate::numeric::{nat, Nat, Rat};
use crate::schedule::{ConstructionSchedule, MeasureMode, SpacerSchedule};

#[derive(Clone, Debug)]
pub struct SynthesisOptions {
    pub h1: Nat,
    pub w1: Rat,
    /// Multiplier on the growth contract: `s_j >= growth·j·h_j` (last-column) or
    /// `s_j >= growth·h_j` (two-column).
    pub growth: Nat,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions { h1: Nat::one(), w1: Rat::one(), growth: Nat::one() }
    }
}

/// Cut count of the last-column construction at stage `j`: `max(j, 2)`.
pub fn rigid_cut(j: usize) -> usize {
    j.max(2)
}

/// Rigid infinite-measure construction mixing along `spec`.
///
/// Stage `j` cuts into `r_j = max(j, 2)` columns and puts `s_j` spacers on the
/// last one. Inside `W_{j+1}` every set of stage `<= j` sits in the first
/// `r_j h_j` positions, so lags in `[h_{j+1}, h_{j+2})` can only correlate inside
/// the windows `[t·h_{j+1} - r_j h_j, t·h_{j+1} + r_j h_j]`, `t = 1..r_{j+1}-1`.
/// `h_{j+1}` is the smallest choice that puts all of them outside the mixing set.
pub fn synthesize_theorem1(
    spec: &MixingSetSpec,
    stages: usize,
    options: &SynthesisOptions,
) -> Result<ConstructionSchedule> {
    if stages < 2 {
        return Err(Error::InvalidParameter("at least 2 stages are needed".into()));
    }
    spec.validate()?;
    let mut schedule = ConstructionSchedule::new(options.h1.clone(), options.w1.clone(), MeasureMode::Infinite)?;
    let mut next_entry = 0usize;
    for j in 1..stages {
        let h = schedule.height(j)?.clone();
        let r = rigid_cut(j);
        let n_max = rigid_cut(j + 1) - 1;
        let min_spacers = &options.growth * j * &h;
        let s = match spec {
            MixingSetSpec::IntervalFamily(family) => {
                let (idx, s) = family_choice(family, next_entry, j, &h, r, n_max, &min_spacers)?;
                next_entry = idx + 1;
                s
            }
            MixingSetSpec::ExplicitSet(set) => scan_choice(set, j, &h, r, n_max, &min_spacers)?,
        };
        schedule.advance_stage(r, SpacerSchedule::LastColumn(s))?;
    }
    Ok(schedule)
}

/// Smallest unused entry that can host every window; returns its index and `s_j = a_i`.
fn family_choice(
    family: &[FamilyInterval],
    from: usize,
    j: usize,
    h: &Nat,
    r: usize,
    n_max: usize,
    min_spacers: &Nat,
) -> Result<(usize, Nat)> {
    let reach = h * r;
    let required_len = &reach * (n_max + 1);
    for (idx, e) in family.iter().enumerate().skip(from) {
        if e.len < required_len || &e.a < min_spacers || e.multiplicity < n_max {
            continue;
        }
        let next_h = &e.a + &reach;
        // h_{j+1} = a + r h_j puts window t at [t a + (t-1) r h_j, t a + (t+1) r h_j]
        let fits = (1..=n_max).all(|t| {
            let centre = &next_h * t;
            let (lo, hi) = e.copy(t);
            centre >= &reach + &lo && &centre + &reach <= hi
        });
        if !fits {
            return Err(Error::InvalidParameter(format!("window inclusion failed for interval {}", idx + 1)));
        }
        return Ok((idx, e.a.clone()));
    }
    Err(Error::IntervalFamilyExhausted {
        stage: j,
        required_len,
        required_start: min_spacers.clone(),
        required_multiplicity: n_max,
    })
}

/// Upward scan for the smallest `h_{j+1}` whose windows miss the explicit set.
///
/// A window `t` that contains an element `x` stays blocked for every candidate up
/// to `(x + r h_j) / t`, so the scan jumps straight past it.
fn scan_choice(set: &ExplicitSet, j: usize, h: &Nat, r: usize, n_max: usize, min_spacers: &Nat) -> Result<Nat> {
    let horizon = u128::from(set.horizon());
    let too_far = |lo: &Nat, hi: &Nat| Error::HorizonExhausted {
        stage: j,
        horizon: nat(set.horizon()),
        window_lo: lo.clone(),
        window_hi: hi.clone(),
    };
    let reach_nat = h * r;
    let lower = &reach_nat + min_spacers;
    let (Some(reach), Some(mut cand)) = (reach_nat.to_u128(), lower.to_u128()) else {
        return Err(too_far(&lower, &(&lower + &reach_nat)));
    };
    let mut blocking: Option<(u128, u128)> = None;
    loop {
        if cand + reach > horizon {
            let (lo, hi) = blocking.unwrap_or((cand - reach, cand + reach));
            return Err(too_far(&Nat::from(lo), &Nat::from(hi)));
        }
        let hit = (1..=n_max as u128).find_map(|t| {
            let (lo, hi) = (t * cand - reach, t * cand + reach);
            set.last_in(lo, hi).map(|x| (t, lo, hi, u128::from(x)))
        });
        match hit {
            None => return Ok(Nat::from(cand - reach)),
            Some((t, lo, hi, x)) => {
                blocking = Some((lo, hi));
                cand = (cand + 1).max((x + reach) / t + 1);
            }
        }
    }
}

/// Two-column construction: `r_j = 2`, spacers `(0, s_j)`.
///
/// Sets of stage `<= j` occupy the first `2 h_j` positions of `W_{j+1}`, so the
/// only correlating lags in `[h_{j+1}, h_{j+2})` lie in
/// `[h_{j+1} - 2h_j, h_{j+1} + 2h_j]`. With `h_{j+1} = a_i + 2h_j` that window is
/// `[a_i, a_i + 4h_j]`, which needs `L_i >= 4h_j`.
pub fn synthesize_theorem2(
    intervals: &[FamilyInterval],
    stages: usize,
    options: &SynthesisOptions,
) -> Result<ConstructionSchedule> {
    if stages < 2 {
        return Err(Error::InvalidParameter("at least 2 stages are needed".into()));
    }
    MixingSetSpec::IntervalFamily(intervals.to_vec()).validate()?;
    let mut schedule = ConstructionSchedule::new(options.h1.clone(), options.w1.clone(), MeasureMode::Infinite)?;
    let mut next_entry = 0usize;
    for j in 1..stages {
        let h = schedule.height(j)?.clone();
        let reach = &h * 2u32;
        let required_len = &reach * 2u32;
        let min_spacers = &options.growth * &h;
        let Some((idx, e)) =
            intervals.iter().enumerate().skip(next_entry).find(|(_, e)| e.len >= required_len && e.a >= min_spacers)
        else {
            return Err(Error::IntervalFamilyExhausted {
                stage: j,
                required_len,
                required_start: min_spacers,
                required_multiplicity: 1,
            });
        };
        let next_h = &e.a + &reach;
        let (lo, hi) = (&next_h - &reach, &next_h + &reach);
        if lo < e.a || hi > &e.a + &e.len {
            return Err(Error::InvalidParameter(format!("window inclusion failed for interval {}", idx + 1)));
        }
        next_entry = idx + 1;
        schedule.advance_stage(2, SpacerSchedule::TwoColumn(e.a.clone()))?;
    }
    Ok(schedule)
}

/// Smallest `a > previous` with `[n·a, n·a + len]` free of the set for `n = 1..=count`
/// and `count·a + len` inside the horizon.
pub fn embed_zero_density(set: &ExplicitSet, count: usize, len: u64, previous: u64) -> Result<u64> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be positive".into()));
    }
    let horizon = u128::from(set.horizon());
    let (count, len) = (count as u128, u128::from(len));
    let mut a = u128::from(previous) + 1;
    let mut blocking = None;
    loop {
        if count * a + len > horizon {
            let (lo, hi) = blocking.unwrap_or((count * a, count * a + len));
            return Err(Error::HorizonExhausted {
                stage: count as usize,
                horizon: nat(set.horizon()),
                window_lo: Nat::from(lo),
                window_hi: Nat::from(hi),
            });
        }
        let hit = (1..=count).find_map(|n| set.last_in(n * a, n * a + len).map(|x| (n, u128::from(x))));
        match hit {
            None => return Ok(a as u64),
            Some((n, x)) => {
                blocking = Some((n * a, n * a + len));
                a = (a + 1).max(x / n + 1);
            }
        }
    }
}
