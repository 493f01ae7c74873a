//! Acceptance suite. Prints one line per criterion and exits nonzero if any fails.

#![allow(clippy::result_large_err)]

use std::process::ExitCode;
use std::time::Instant;

use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use rankone_core::correlation::montecarlo::stream_rng;
use rankone_core::correlation::{bruteforce_sweep, correlation_sweep, sp_completeness, verify_mixing_along, Verdict};
use rankone_core::numeric::{nat, rat, rat_to_f64, Nat, Rat};
use rankone_core::output::{
    write_correlation_csv, write_density_csv, write_spectral_csv, write_suspension_csv, SuspensionRow,
};
use rankone_core::schedule::{MeasureMode, SpacerSchedule};
use rankone_core::spectral::{fejer_density, spectral_coefficients, toeplitz_min_eigenvalue};
use rankone_core::suspension::{
    joint_shifted_event_prob, poisson_pmf, sample_joint_counts, suspension_inheritance_report, InheritanceKind,
    SamplingMode,
};
use rankone_core::synthesis::{
    audited_cutoff, resolvable_limit, synthesize_theorem1, synthesize_theorem2, theorem3_heights, FamilyInterval,
    HeightPool, MixingSetSpec, SynthesisOptions, DEFAULT_GROWTH,
};
use rankone_core::{ConstructionSchedule, CorrelationEngine, EngineOptions, LevelSet, Result};

const SEED: u64 = 0x5eed_2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn thousand_family() -> MixingSetSpec {
    let entries = (1..=7u32)
        .map(|i| {
            let a = Nat::from(1000u32).pow(i);
            let len = &a / 2u32;
            FamilyInterval::new(a, len, i as usize)
        })
        .collect();
    MixingSetSpec::IntervalFamily(entries)
}

fn theorem1_schedule() -> Result<ConstructionSchedule> {
    synthesize_theorem1(&thousand_family(), 8, &SynthesisOptions::default())
}

fn stage2_set() -> LevelSet {
    "2:0,1,3".parse().expect("valid level set")
}

fn mixing_lags(schedule: &ConstructionSchedule, count: usize) -> Vec<Nat> {
    let lo = audited_cutoff(schedule, 2).expect("stage 3 exists");
    let hi = resolvable_limit(schedule).expect("at least two cuts");
    thousand_family().sample_mixing_lags(&lo, &hi, count, SEED)
}

fn random_schedule(rng: &mut impl Rng) -> Result<ConstructionSchedule> {
    let h1 = rng.random_range(1..=5u64);
    let w1 = rat(1, rng.random_range(1..=3));
    let mut s = ConstructionSchedule::new(nat(h1), w1, MeasureMode::Infinite)?;
    let limit = rng.random_range(2_000..=100_000u64);
    loop {
        let h = s.heights().last().expect("stage 1").to_u64().expect("small");
        let r = rng.random_range(2..=4usize);
        let spacers: Vec<Nat> =
            (0..r).map(|_| if rng.random_bool(0.3) { nat(0) } else { nat(rng.random_range(0..=h + 3)) }).collect();
        let next = r as u64 * h + spacers.iter().map(|x| x.to_u64().expect("small")).sum::<u64>();
        if next > limit {
            break;
        }
        s.advance_stage(r, SpacerSchedule::Explicit(spacers))?;
        if s.stages() >= 8 {
            break;
        }
    }
    if s.stages() == 1 {
        s.advance_stage(2, SpacerSchedule::Explicit(vec![nat(0), nat(1)]))?;
    }
    Ok(s)
}

fn random_set(rng: &mut impl Rng, schedule: &ConstructionSchedule) -> LevelSet {
    let stage = rng.random_range(1..=schedule.stages().min(3));
    let h = schedule.height(stage).expect("built").to_u64().expect("small");
    let count = rng.random_range(1..=h.min(6));
    LevelSet::from_levels(stage, (0..count).map(|_| nat(rng.random_range(0..h))))
}

/// Engine against the brute-force word count, every lag below `h_J`.
fn c1_oracle() -> Result<Outcome> {
    let mut rng = stream_rng(SEED, 1);
    let (mut schedules, mut lags_checked, mut worst) = (0usize, 0u64, None::<String>);
    for _ in 0..120 {
        let s = random_schedule(&mut rng)?;
        let j = s.stages();
        let a = random_set(&mut rng, &s);
        let b = random_set(&mut rng, &s);
        let sweep = bruteforce_sweep(&s, &a, &b, j, 200_000)?;
        let w = s.width(j)?.clone();
        let opts = EngineOptions { max_stage: Some(j), ..EngineOptions::default() };
        let mut engine = CorrelationEngine::new(&s, &a, &b, opts)?;
        for (m, counts) in sweep.iter().enumerate() {
            let lag = nat(m as u64);
            let lo = Rat::from_integer(counts.pairs.into()) * &w;
            let hi = &lo + Rat::from_integer(counts.top.into()) * &w;
            let at_j = engine.windowed(j, &lag)?;
            let best = engine.correlation_or_best(&lag)?;
            if at_j.lo != lo || at_j.hi != hi || best.lo < lo || best.hi > hi {
                worst.get_or_insert(format!(
                    "schedule {schedules} lag {m}: engine [{}, {}] brute [{lo}, {hi}]",
                    at_j.lo, at_j.hi
                ));
            }
            lags_checked += 1;
        }
        schedules += 1;
    }
    match worst {
        None => outcome(true, format!("{schedules} schedules, {lags_checked} lags, exact equality")),
        Some(w) => outcome(false, w),
    }
}

fn c2_rigidity(schedule: &ConstructionSchedule) -> Result<Outcome> {
    let a = stage2_set();
    let mu = a.measure(schedule)?;
    let mut engine = CorrelationEngine::new(schedule, &a, &a, EngineOptions::default())?;
    let mut values = Vec::new();
    for j in 3..=6usize {
        let c = engine.correlation(schedule.height(j)?)?;
        let expected = &mu * (Rat::one() - rat(1, j as i64));
        if c.lo != expected || c.hi != expected {
            return outcome(false, format!("j={j}: got [{}, {}], expected {expected}", c.lo, c.hi));
        }
        values.push(format!("j={j}: {}", c.lo));
    }
    outcome(true, format!("μ(A) = {mu}; {}", values.join(", ")))
}

fn c3_mixing(schedule: &ConstructionSchedule) -> Result<Outcome> {
    let a = stage2_set();
    let b: LevelSet = "2:2-4".parse().expect("valid");
    let lags = mixing_lags(schedule, 60);
    let cutoff = audited_cutoff(schedule, 2).expect("stage 3");
    let report =
        verify_mixing_along(schedule, &lags, &a, &b, &Rat::zero(), Some(cutoff.clone()), EngineOptions::default())?;
    let zeros = report.rows.iter().filter(|r| r.correlation.lo.is_zero() && r.correlation.hi.is_zero()).count();
    let judged = report.rows.iter().filter(|r| r.verdict.is_some()).count();
    outcome(
        report.verdict == Verdict::Pass && zeros == lags.len() && judged == lags.len() && lags.len() >= 50,
        format!(
            "{zeros}/{} sampled lags in [{cutoff}, {}] certified exactly 0",
            lags.len(),
            resolvable_limit(schedule).unwrap()
        ),
    )
}

fn c4_partial_rigidity() -> Result<Outcome> {
    let family: Vec<FamilyInterval> = (1..=6u32)
        .map(|i| {
            let a = Nat::from(100u32).pow(i);
            let len = &a / 2u32;
            FamilyInterval::new(a, len, 1)
        })
        .collect();
    let s = synthesize_theorem2(&family, 7, &SynthesisOptions::default())?;
    let a: LevelSet = "2:0-1".parse().expect("valid");
    let mu = a.measure(&s)?;
    let mut engine = CorrelationEngine::new(&s, &a, &a, EngineOptions::default())?;
    let mut ok = true;
    let mut values = Vec::new();
    for j in [5usize, 6] {
        let c = engine.correlation(s.height(j)?)?;
        let ratio = &c.lo / &mu;
        ok &= (rat_to_f64(&ratio) - 0.5).abs() <= 0.05;
        values.push(format!("j={j}: corr/μ(A) = {ratio}"));
    }
    outcome(ok, values.join(", "))
}

fn c5_sp() -> Result<Outcome> {
    let s = theorem3_heights(&HeightPool::Integers, DEFAULT_GROWTH, 7, Rat::one())?;
    let sweep_stage = 6;
    let a: LevelSet = "2:0-2,5".parse().expect("valid");
    let b: LevelSet = "2:1,4-7".parse().expect("valid");
    let s_max = s.height(2)? - 1u32;
    let report =
        sp_completeness(&s, &a, &b, sweep_stage, &s_max, sweep_stage, None, 1_000_000, EngineOptions::default())?;
    outcome(
        report.verdict == Verdict::Pass,
        format!(
            "h_J = {}, {} positive lags all decomposed, S_max = {s_max}, P_max = {sweep_stage}, observed max p = {}, max |s| = {}, cutoff {}",
            s.height(sweep_stage)?,
            report.positive.len(),
            report.max_p,
            report.max_residual,
            report.cutoff
        ),
    )
}

/// Small schedules for the suspension Monte Carlo matrix, each with sets and a resolvable lag.
fn suspension_configs() -> Result<Vec<(ConstructionSchedule, LevelSet, LevelSet, Nat)>> {
    let mut rng = stream_rng(SEED, 6);
    let mut out = Vec::new();
    while out.len() < 24 {
        let h1 = rng.random_range(2..=4u64);
        let mut s = ConstructionSchedule::new(nat(h1), rat(1, rng.random_range(2..=4)), MeasureMode::Infinite)?;
        for j in 1..4usize {
            let r = j.max(2);
            let h = s.heights().last().unwrap().to_u64().unwrap();
            s.advance_stage(r, SpacerSchedule::LastColumn(nat(rng.random_range(h..=3 * h))))?;
        }
        let a = LevelSet::from_levels(1, (0..rng.random_range(1..=h1)).map(|_| nat(rng.random_range(0..h1))));
        let b = LevelSet::from_levels(1, (0..rng.random_range(1..=h1)).map(|_| nat(rng.random_range(0..h1))));
        // Lags whose images stay inside the last tower, drawn from the bottom copy.
        let h2 = s.height(2)?.to_u64().unwrap();
        let lag = nat(rng.random_range(0..h2));
        let full = sample_joint_counts(&s, &a, &b, &lag, s.stages(), 1, 0, SamplingMode::Full).is_ok();
        if full {
            out.push((s, a, b, lag));
        }
    }
    Ok(out)
}

struct SuspensionArtifacts {
    csv: Vec<u8>,
    summary: String,
    pass: bool,
}

fn c6_suspension(schedule: &ConstructionSchedule) -> Result<SuspensionArtifacts> {
    let mut pass = true;
    let mut notes = Vec::new();

    // Factorization at lags with c = 0.
    let a = stage2_set();
    let b: LevelSet = "2:2-4".parse().expect("valid");
    let (ma, mb) = (a.measure(schedule)?, b.measure(schedule)?);
    let mut factorized = 0;
    for lag in mixing_lags(schedule, 8) {
        for (k, n) in [(0, 0), (1, 2), (3, 1)] {
            let j = joint_shifted_event_prob(schedule, &a, k, &b, n, &lag, EngineOptions::default())?;
            pass &= j.overlap.is_zero() && j.prob == poisson_pmf(&ma, k).mul(&poisson_pmf(&mb, n));
            factorized += 1;
        }
    }
    notes.push(format!("{factorized} exact factorizations at c = 0"));

    // Monte Carlo matrix with simultaneous 99% intervals.
    let configs = suspension_configs()?;
    let cells: Vec<(u32, u32)> = (0..3).flat_map(|k| (0..3).map(move |n| (k, n))).collect();
    let intervals = (configs.len() * cells.len()) as f64;
    let confidence = 1.0 - 0.01 / intervals;
    let mut rows = Vec::new();
    let mut misses = 0;
    for (i, (s, a, b, lag)) in configs.iter().enumerate() {
        let counts = sample_joint_counts(s, a, b, lag, s.stages(), 1_000_000, SEED + i as u64, SamplingMode::Full)?;
        for &(k, n) in &cells {
            let p = joint_shifted_event_prob(s, a, k, b, n, lag, EngineOptions::default())?.prob.to_f64();
            let ci = counts.interval(k, n, confidence);
            if p < ci.0 || p > ci.1 {
                misses += 1;
            }
            rows.push(SuspensionRow {
                lag: lag.clone(),
                k,
                n,
                analytic: p,
                mc_freq: Some(counts.freq(k, n)),
                ci: Some(ci),
            });
        }
    }
    pass &= misses == 0 && configs.len() >= 20;
    notes.push(format!(
        "{} configs x {} cells, 10^6 full-simulation samples each, {misses} outside simultaneous 99% intervals",
        configs.len(),
        cells.len()
    ));

    // Rigidity inheritance along h_j.
    let report = suspension_inheritance_report(schedule, &a, 1, &[3, 4, 5, 6], &a, 1, &[], EngineOptions::default())?;
    let mut worst = 0.0f64;
    for r in &report.rows {
        let InheritanceKind::Rigidity { j } = r.kind else { continue };
        let bound = rat_to_f64(&(&ma * rat(2, j as i64)));
        pass &= r.difference <= bound;
        worst = worst.max(r.difference / bound);
        rows.push(SuspensionRow {
            lag: r.joint.lag.clone(),
            k: 1,
            n: 1,
            analytic: r.joint.prob.to_f64(),
            mc_freq: None,
            ci: None,
        });
    }
    notes.push(format!("rigidity table j=3..6, max |P - μ*(C)| / (2μ(A)/j) = {worst:.4}"));

    let mut csv = Vec::new();
    write_suspension_csv(&mut csv, &rows)?;
    Ok(SuspensionArtifacts { csv, summary: notes.join("; "), pass })
}

struct SpectralArtifacts {
    coefficients: Vec<u8>,
    density: Vec<u8>,
    summary: String,
    pass: bool,
}

fn c7_spectral(schedule: &ConstructionSchedule) -> Result<SpectralArtifacts> {
    let a = stage2_set();
    let dense_n = 400u64;
    let mut lags: Vec<Nat> = (0..=dense_n).map(nat).collect();
    let heights: Vec<Nat> = (3..=6).map(|j| schedule.height(j).cloned()).collect::<Result<_>>()?;
    let mixing = mixing_lags(schedule, 50);
    lags.extend(heights.iter().cloned());
    lags.extend(mixing.iter().cloned());
    lags.sort();
    lags.dedup();
    let seq = spectral_coefficients(schedule, &a, &lags, EngineOptions::default())?;
    let mut pass = seq.get(0).is_some_and(|c| c.lo.is_one() && c.hi.is_one());
    for (j, h) in (3..=6).zip(&heights) {
        let c = seq.coefficients.iter().find(|c| &c.lag == h).expect("requested");
        pass &= c.is_exact() && c.lo == Rat::one() - rat(1, j);
    }
    let zeros = mixing.iter().filter(|m| seq.coefficients.iter().any(|c| &c.lag == *m && c.hi.is_zero())).count();
    pass &= zeros == mixing.len();

    let dense = seq.dense_prefix(dense_n as usize).expect("contiguous block");
    let density = fejer_density(&dense, 2048);
    pass &= density.is_nonnegative() && (density.integral - 1.0).abs() < 1e-9;

    // Fejér nonnegativity on further schedules.
    let mut rng = stream_rng(SEED, 7);
    let mut extra_ok = 0;
    for _ in 0..20 {
        let s = random_schedule(&mut rng)?;
        let set = random_set(&mut rng, &s);
        let n = s.height(s.stages())?.to_u64().unwrap().min(300);
        let small: Vec<Nat> = (0..=n).map(nat).collect();
        let sq = spectral_coefficients(&s, &set, &small, EngineOptions::default())?;
        let d = fejer_density(&sq.exact_prefix(), 1024);
        if d.is_nonnegative() {
            extra_ok += 1;
        }
    }
    pass &= extra_ok == 20;

    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let subset: Vec<u64> = {
            let mut v: Vec<u64> = (0..6).map(|_| rng.random_range(0..=dense_n)).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        worst = worst.min(toeplitz_min_eigenvalue(&seq, &subset)?);
    }
    pass &= worst >= -1e-9;

    let mut coefficients = Vec::new();
    write_spectral_csv(&mut coefficients, &seq)?;
    let mut dens = Vec::new();
    write_density_csv(&mut dens, &density)?;
    Ok(SpectralArtifacts {
        coefficients,
        density: dens,
        summary: format!(
            "σ̂(0) = 1, σ̂(h_j) = 1 - 1/j for j=3..6, {zeros}/{} mixing lags 0, Fejér min {:.3e} (bound {:.1e}), integral {:.12}, {extra_ok}/20 further schedules nonnegative, Toeplitz min eigenvalue {worst:.3e}",
            mixing.len(),
            density.min(),
            density.rounding_bound,
            density.integral
        ),
        pass,
    })
}

/// Every CSV the suite produces, in a fixed order.
fn artifacts(
    schedule: &ConstructionSchedule,
    workers: usize,
) -> Result<(Vec<Vec<u8>>, SuspensionArtifacts, SpectralArtifacts)> {
    let a = stage2_set();
    let b: LevelSet = "2:2-4".parse().expect("valid");
    let mut lags = mixing_lags(schedule, 60);
    lags.extend((3..=6).map(|j| schedule.height(j).cloned().unwrap()));
    lags.sort();
    let results = correlation_sweep(schedule, &a, &b, &lags, &EngineOptions::default(), workers)?;
    let mut corr = Vec::new();
    write_correlation_csv(&mut corr, &results)?;
    let suspension = c6_suspension(schedule)?;
    let spectral = c7_spectral(schedule)?;
    let files = vec![corr, suspension.csv.clone(), spectral.coefficients.clone(), spectral.density.clone()];
    Ok((files, suspension, spectral))
}

fn report(id: &str, name: &str, start: Instant, result: Result<Outcome>) -> bool {
    let secs = start.elapsed().as_secs_f64();
    match result {
        Ok(o) => {
            println!("{id} {name}: {} ({secs:.1}s) {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            o.pass
        }
        Err(e) => {
            println!("{id} {name}: FAIL ({secs:.1}s) error: {e}");
            false
        }
    }
}

fn main() -> ExitCode {
    let mut all = true;
    let t = Instant::now();
    all &= report("C1", "oracle equivalence", t, c1_oracle());

    let schedule = match theorem1_schedule() {
        Ok(s) => s,
        Err(e) => {
            println!("C2-C8: FAIL, rigid schedule synthesis failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    let t = Instant::now();
    all &= report("C2", "rigidity identity", t, c2_rigidity(&schedule));
    let t = Instant::now();
    all &= report("C3", "mixing along the mixing set", t, c3_mixing(&schedule));
    let t = Instant::now();
    all &= report("C4", "partial rigidity", t, c4_partial_rigidity());
    let t = Instant::now();
    all &= report("C5", "(sp) completeness", t, c5_sp());

    let t = Instant::now();
    let first = artifacts(&schedule, 1);
    let (c6, c7) = match &first {
        Ok((_, s, p)) => (outcome(s.pass, s.summary.clone()), outcome(p.pass, p.summary.clone())),
        Err(e) => (outcome(false, format!("error: {e}")), outcome(false, format!("error: {e}"))),
    };
    all &= report("C6", "Poisson suspension", t, c6);
    all &= report("C7", "spectral sequence", t, c7);

    let t = Instant::now();
    let c8 = (|| {
        let (one, _, _) = first?;
        let (two, _, _) = artifacts(&schedule, 4)?;
        let bytes: usize = one.iter().map(Vec::len).sum();
        outcome(
            one == two,
            format!("{} CSV files, {bytes} bytes, identical across two runs (1 and 4 workers)", one.len()),
        )
    })();
    all &= report("C8", "determinism", t, c8);

    if all {
        println!("acceptance: all criteria PASS");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: at least one criterion FAILED");
        ExitCode::FAILURE
    }
}
