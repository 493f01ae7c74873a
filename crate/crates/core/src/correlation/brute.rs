use num_traits::ToPrimitive;

use super::{CorrelationResult, Method};
use crate::error::{Error, Result};
use crate::levelset::LevelSet;
use crate::numeric::{nat, Nat, Rat};
use crate::schedule::ConstructionSchedule;

/// Raw counts for one lag in a materialized word.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WindowCounts {
    /// `#{p : p + m < h_J, label(p) ∈ A, label(p + m) ∈ B}`
    pub pairs: u64,
    /// `#{p >= h_J - m : label(p) ∈ A}`
    pub top: u64,
}

/// Membership masks of the stage-`J` word, each set decoded against its own reference stage.
fn membership(schedule: &ConstructionSchedule, set: &LevelSet, stage: usize, guard: u64) -> Result<Vec<bool>> {
    set.validate(schedule)?;
    if set.stage() > stage {
        return Err(Error::StageOrder { reference: set.stage(), query: stage });
    }
    let word = schedule.materialize_word(stage, set.stage(), guard)?;
    Ok(word.into_iter().map(|l| l.is_some_and(|l| set.contains(&nat(l)))).collect())
}

/// Direct count over the materialized stage-`J` word.
pub fn correlation_bruteforce(
    schedule: &ConstructionSchedule,
    a: &LevelSet,
    b: &LevelSet,
    lag: &Nat,
    stage: usize,
    guard: u64,
) -> Result<CorrelationResult> {
    let in_a = membership(schedule, a, stage, guard)?;
    let in_b = membership(schedule, b, stage, guard)?;
    let h = in_a.len();
    let m = lag.to_usize().unwrap_or(usize::MAX);
    let (mut pairs, mut top) = (0u64, 0u64);
    for (p, _) in in_a.iter().enumerate().filter(|(_, &x)| x) {
        match p.checked_add(m) {
            Some(q) if q < h => pairs += u64::from(in_b[q]),
            _ => top += 1,
        }
    }
    let w = schedule.width(stage)?;
    let lo = Rat::from_integer(pairs.into()) * w;
    let hi = &lo + Rat::from_integer(top.into()) * w;
    Ok(CorrelationResult { lag: lag.clone(), lo, hi, stage, method: Method::BruteForce })
}

/// Counts for every lag `0 <= m < h_J` at once, from the lists of labelled positions.
pub fn bruteforce_sweep(
    schedule: &ConstructionSchedule,
    a: &LevelSet,
    b: &LevelSet,
    stage: usize,
    guard: u64,
) -> Result<Vec<WindowCounts>> {
    let in_a = membership(schedule, a, stage, guard)?;
    let in_b = membership(schedule, b, stage, guard)?;
    let h = in_a.len();
    let pa: Vec<usize> = (0..h).filter(|&p| in_a[p]).collect();
    let pb: Vec<usize> = (0..h).filter(|&p| in_b[p]).collect();
    let mut out = vec![WindowCounts::default(); h];
    // p counts toward the top term of every lag m >= h - p
    let mut top_starts = vec![0u64; h + 1];
    for &p in &pa {
        let start = pb.partition_point(|&q| q < p);
        for &q in &pb[start..] {
            out[q - p].pairs += 1;
        }
        top_starts[h - p] += 1;
    }
    let mut running = 0;
    for (counts, starts) in out.iter_mut().zip(&top_starts) {
        running += starts;
        counts.top = running;
    }
    Ok(out)
}
