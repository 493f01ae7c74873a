use std::thread;

use super::{CorrelationEngine, CorrelationResult, EngineOptions};
use crate::error::Result;
use crate::levelset::LevelSet;
use crate::numeric::Nat;
use crate::schedule::ConstructionSchedule;

/// [`CorrelationEngine::correlation_or_best`] over many lags on `workers` threads.
///
/// Lags are split into contiguous chunks, one engine per chunk, and results come
/// back in input order, so the output does not depend on `workers`.
pub fn correlation_sweep(
    schedule: &ConstructionSchedule,
    a: &LevelSet,
    b: &LevelSet,
    lags: &[Nat],
    options: &EngineOptions,
    workers: usize,
) -> Result<Vec<CorrelationResult>> {
    let workers = workers.clamp(1, lags.len().max(1));
    let chunk = lags.len().div_ceil(workers).max(1);
    let run = |part: &[Nat]| -> Result<Vec<CorrelationResult>> {
        let mut engine = CorrelationEngine::new(schedule, a, b, options.clone())?;
        part.iter().map(|m| engine.correlation_or_best(m)).collect()
    };
    if workers == 1 {
        return run(lags);
    }
    let parts: Vec<Result<Vec<CorrelationResult>>> = thread::scope(|scope| {
        let handles: Vec<_> = lags.chunks(chunk).map(|part| scope.spawn(move || run(part))).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(lags.len());
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// Worker count from `RANKONE_WORKERS`, else the available parallelism.
pub fn default_workers() -> usize {
    std::env::var("RANKONE_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
}
