#![allow(clippy::result_large_err)]

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use rankone_core::config::{load_schedule, load_spec, schedule_to_toml, synthesize, SpecBody, Theorem};
use rankone_core::correlation::montecarlo::stream_rng;
use rankone_core::correlation::{
    correlation_bruteforce, correlation_montecarlo, correlation_sweep, default_cutoff, default_workers,
    kappa_mixing_check, rigidity_defect, sp_completeness, verify_mixing_along, Verdict, CONFIDENCE_99,
};
use rankone_core::numeric::{fmt_f64, rat_to_f64, Nat, Rat};
use rankone_core::output::{
    write_correlation_csv, write_density_csv, write_spectral_csv, write_suspension_csv, write_table, SuspensionRow,
};
use rankone_core::schedule::DEFAULT_WORD_GUARD;
use rankone_core::spectral::{fejer_density, spectral_coefficients, toeplitz_min_eigenvalue};
use rankone_core::suspension::{
    joint_shifted_event_prob, sample_joint_counts, suspension_inheritance_report, InheritanceKind, SamplingMode,
    GAUSSIAN_NOTE,
};
use rankone_core::synthesis::{kappa_lags, resolvable_limit, MixingSetSpec};
use rankone_core::{ConstructionSchedule, EngineOptions, Error, LevelSet};

const EXIT_USAGE: u8 = 1;
const EXIT_STALL: u8 = 2;
const EXIT_FAIL: u8 = 3;
const DEFAULT_SEED: u64 = 20240229;

#[derive(Parser)]
#[command(name = "rankone", version, about = "Exact rank-one constructions: synthesis, correlations, verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Synthesize a schedule from a spec file and write it with its audit report.
    Synth(SynthArgs),
    /// Resolve a schedule file (running any generator) and print its canonical form.
    Build(BuildArgs),
    /// Correlation sweep over a lag list.
    Corr(CorrArgs),
    /// Run one verification report.
    Verify(VerifyArgs),
    /// Spectral coefficients and a Fejér density estimate.
    Spectral(SpectralArgs),
    /// Joint cylinder probabilities of the Poisson suspension at one lag.
    Poisson(PoissonArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    spec: PathBuf,
    /// 1, 2, 3 or staircase.
    #[arg(long)]
    theorem: String,
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    schedule: PathBuf,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct EngineArgs {
    /// Largest accepted certified width, as `p/q`.
    #[arg(long, default_value = "0")]
    tolerance: String,
    #[arg(long)]
    max_stage: Option<usize>,
    #[arg(long)]
    cache_cap: Option<usize>,
}

impl EngineArgs {
    fn options(&self) -> Result<EngineOptions> {
        let tolerance: Rat = parse_rat("tolerance", &self.tolerance)?;
        if tolerance < Rat::from_integer(0.into()) {
            bail!("tolerance must be nonnegative");
        }
        if self.max_stage == Some(0) || self.cache_cap == Some(0) {
            bail!("stage limits and cache caps must be positive");
        }
        Ok(EngineOptions { tolerance, max_stage: self.max_stage, cache_cap: self.cache_cap })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CorrMethod {
    Exact,
    Brute,
    Mc,
}

#[derive(Args)]
struct CorrArgs {
    #[arg(long)]
    schedule: PathBuf,
    /// Level set `stage:lo-hi,level,...`.
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    /// Lags as `lo-hi,m,...` (ranges inclusive).
    #[arg(long)]
    lags: String,
    #[arg(long, value_enum, default_value = "exact")]
    method: CorrMethod,
    #[command(flatten)]
    engine: EngineArgs,
    /// Stage for brute-force and Monte Carlo; defaults to the last built stage.
    #[arg(long)]
    stage: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_WORD_GUARD)]
    guard: u64,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportKind {
    Rigidity,
    Mixing,
    Kappa,
    Sp,
    Suspension,
    Spectral,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    schedule: PathBuf,
    #[arg(long, value_enum)]
    kind: ReportKind,
    #[arg(long)]
    a: String,
    /// Defaults to `a`.
    #[arg(long)]
    b: Option<String>,
    /// Explicit lags `lo-hi,m,...`; otherwise sampled from `--spec`.
    #[arg(long)]
    lags: Option<String>,
    /// Spec file whose mixing set supplies sampled lags.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    count: usize,
    /// Stages `j` whose heights are the rigidity times, as `lo-hi,j,...`.
    #[arg(long)]
    stages: Option<String>,
    /// Smallest judged lag; defaults to `h_{n+1}` for sets at stage `n`.
    #[arg(long)]
    cutoff: Option<String>,
    /// Finite-measure mixing band, as `p/q`.
    #[arg(long, default_value = "1/1000")]
    threshold: String,
    /// Rigid stage whose block multiples are the κ lags.
    #[arg(long)]
    rigid_stage: Option<usize>,
    #[arg(long, default_value = "1/100")]
    convergence_tolerance: String,
    /// Stage of the brute-force sweep for `sp`.
    #[arg(long)]
    sweep_stage: Option<usize>,
    #[arg(long)]
    s_max: Option<String>,
    #[arg(long)]
    p_max: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_WORD_GUARD)]
    guard: u64,
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Monte Carlo samples per suspension row; 0 disables sampling.
    #[arg(long, default_value_t = 0)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Largest lag of the contiguous spectral block.
    #[arg(long, default_value_t = 64)]
    max_lag: u64,
    #[arg(long, default_value_t = 512)]
    grid: usize,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SpectralArgs {
    #[arg(long)]
    schedule: PathBuf,
    #[arg(long)]
    a: String,
    #[arg(long, default_value_t = 64)]
    max_lag: u64,
    #[arg(long, default_value_t = 512)]
    grid: usize,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleMode {
    Pieces,
    Full,
}

#[derive(Args)]
struct PoissonArgs {
    #[arg(long)]
    schedule: PathBuf,
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    lag: String,
    /// Table covers counts `0..=k_max` in both regions.
    #[arg(long, default_value_t = 3)]
    k_max: u32,
    #[arg(long, default_value_t = 0)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value = "pieces")]
    mode: SampleMode,
    /// Stage used for sampling; defaults to the last built stage.
    #[arg(long)]
    stage: Option<usize>,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_rat(field: &str, s: &str) -> Result<Rat> {
    s.trim().parse().map_err(|_| anyhow::anyhow!("--{field}: `{s}` is not a rational `p/q`"))
}

fn parse_nat(field: &str, s: &str) -> Result<Nat> {
    s.trim().parse().map_err(|_| anyhow::anyhow!("--{field}: `{s}` is not a nonnegative integer"))
}

/// `lo-hi,m,...` with inclusive ranges, returned sorted without duplicates.
fn parse_lags(s: &str) -> Result<Vec<Nat>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi) = (parse_nat("lags", lo)?, parse_nat("lags", hi)?);
                if hi < lo {
                    bail!("--lags: empty range `{part}`");
                }
                let mut m = lo;
                while m <= hi {
                    out.push(m.clone());
                    m += 1u32;
                }
            }
            None => out.push(parse_nat("lags", part)?),
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn parse_stages(s: &str) -> Result<Vec<usize>> {
    let lags = parse_lags(s)?;
    lags.iter().map(|m| usize::try_from(m).context("stage index too large")).collect()
}

fn parse_set(schedule: &ConstructionSchedule, s: &str) -> Result<LevelSet> {
    let set: LevelSet = s.parse()?;
    set.validate(schedule)?;
    Ok(set)
}

fn write_output(
    path: Option<&Path>,
    f: impl FnOnce(&mut dyn std::io::Write) -> rankone_core::Result<()>,
) -> Result<()> {
    match path {
        Some(p) => {
            let mut file = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            f(&mut file)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn out_file(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.join(name))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Verdict::Fail) => ExitCode::from(EXIT_FAIL),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let stall = matches!(
                e.downcast_ref::<Error>(),
                Some(
                    Error::IntervalFamilyExhausted { .. }
                        | Error::HorizonExhausted { .. }
                        | Error::PoolExhausted { .. }
                        | Error::MeasureBudgetExceeded { .. }
                )
            );
            ExitCode::from(if stall { EXIT_STALL } else { EXIT_USAGE })
        }
    }
}

fn run(cli: Cli) -> Result<Verdict> {
    match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Build(args) => cmd_build(args),
        Command::Corr(args) => cmd_corr(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Spectral(args) => cmd_spectral(args),
        Command::Poisson(args) => cmd_poisson(args),
    }
}

fn cmd_synth(args: SynthArgs) -> Result<Verdict> {
    let theorem: Theorem = args.theorem.parse()?;
    let spec = load_spec(&args.spec).with_context(|| format!("reading {}", args.spec.display()))?;
    let out = synthesize(theorem, &spec, args.stages)?;
    let schedule_path = out_file(&args.out_dir, "schedule.toml")?;
    fs::write(&schedule_path, schedule_to_toml(&out.schedule))?;
    fs::write(out_file(&args.out_dir, "audit.txt")?, &out.report)?;
    print!("{}", out.report);
    println!("schedule written to {}", schedule_path.display());
    Ok(if out.passed { Verdict::Pass } else { Verdict::Fail })
}

fn cmd_build(args: BuildArgs) -> Result<Verdict> {
    let schedule = load_schedule(&args.schedule)?;
    let text = schedule_to_toml(&schedule);
    match args.out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(Verdict::Pass)
}

fn cmd_corr(args: CorrArgs) -> Result<Verdict> {
    let schedule = load_schedule(&args.schedule)?;
    let a = parse_set(&schedule, &args.a)?;
    let b = parse_set(&schedule, &args.b)?;
    let lags = parse_lags(&args.lags)?;
    let stage = args.stage.unwrap_or(schedule.stages());
    match args.method {
        CorrMethod::Exact => {
            let results = correlation_sweep(&schedule, &a, &b, &lags, &args.engine.options()?, default_workers())?;
            write_output(args.out.as_deref(), |w| write_correlation_csv(w, &results))?;
        }
        CorrMethod::Brute => {
            let results = lags
                .iter()
                .map(|m| correlation_bruteforce(&schedule, &a, &b, m, stage, args.guard))
                .collect::<rankone_core::Result<Vec<_>>>()?;
            write_output(args.out.as_deref(), |w| write_correlation_csv(w, &results))?;
        }
        CorrMethod::Mc => {
            let mut rows = Vec::with_capacity(lags.len());
            for (i, m) in lags.iter().enumerate() {
                let e = correlation_montecarlo(
                    &schedule,
                    &a,
                    &b,
                    m,
                    stage,
                    args.samples,
                    args.seed.wrapping_add(i as u64),
                )?;
                rows.push(vec![
                    m.to_string(),
                    fmt_f64(e.ci_lo),
                    fmt_f64(e.ci_hi),
                    "monte-carlo".into(),
                    stage.to_string(),
                ]);
            }
            write_output(args.out.as_deref(), |w| write_table(w, &["lag", "lo", "hi", "method", "stage_used"], &rows))?;
        }
    }
    Ok(Verdict::Pass)
}

fn summary(verdict: Verdict, pass: usize, fail: usize, inconclusive: usize) {
    println!("verdict: {verdict} (pass {pass}, fail {fail}, inconclusive {inconclusive})");
}

fn count(verdicts: &[Verdict]) -> (usize, usize, usize) {
    let c = |v| verdicts.iter().filter(|x| **x == v).count();
    (c(Verdict::Pass), c(Verdict::Fail), c(Verdict::Inconclusive))
}

/// Mixing lags for a report: explicit, or sampled from the spec between the cutoff and the resolvable limit.
fn report_lags(args: &VerifyArgs, schedule: &ConstructionSchedule, cutoff: &Nat) -> Result<Vec<Nat>> {
    if let Some(l) = &args.lags {
        return parse_lags(l);
    }
    let Some(path) = &args.spec else {
        bail!("give --lags or --spec");
    };
    let SpecBody::Mixing(spec) = load_spec(path)?.body else {
        bail!("{} does not describe a mixing set", path.display());
    };
    let top = schedule.heights().last().expect("at least one stage") - 1u32;
    let hi = resolvable_limit(schedule).unwrap_or(top);
    let lags = spec.sample_mixing_lags(cutoff, &hi, args.count, args.seed);
    if lags.is_empty() {
        bail!("no mixing lags between {cutoff} and {hi}");
    }
    if let MixingSetSpec::ExplicitSet(set) = &spec {
        if !set.attested() {
            println!("note: explicit mixing set is not attested beyond its horizon {}", set.horizon());
        }
    }
    Ok(lags)
}

fn cmd_verify(args: VerifyArgs) -> Result<Verdict> {
    let schedule = load_schedule(&args.schedule)?;
    let a = parse_set(&schedule, &args.a)?;
    let b = parse_set(&schedule, args.b.as_deref().unwrap_or(&args.a))?;
    let options = args.engine.options()?;
    let cutoff = args.cutoff.as_deref().map(|c| parse_nat("cutoff", c)).transpose()?;
    let base = a.stage().max(b.stage());
    let csv_path = out_file(&args.out_dir, &format!("verify-{}.csv", kind_name(args.kind)))?;
    let default_stages = || -> Vec<usize> { (base.max(2)..schedule.stages()).collect() };

    let verdict = match args.kind {
        ReportKind::Rigidity => {
            let stages = args.stages.as_deref().map(parse_stages).transpose()?.unwrap_or_else(default_stages);
            let measure = a.measure(&schedule)?;
            let mut rows = Vec::new();
            let mut verdicts = Vec::new();
            for j in stages {
                let bound = &measure * Rat::new(2.into(), (j as i64).into());
                let (defect, verdict) = match rigidity_defect(&schedule, &a, j, options.clone()) {
                    Ok(d) => {
                        let v = if d <= bound { Verdict::Pass } else { Verdict::Fail };
                        (d.to_string(), v)
                    }
                    Err(Error::ToleranceUnreachable { .. }) => (String::new(), Verdict::Inconclusive),
                    Err(e) => return Err(e.into()),
                };
                rows.push(vec![
                    j.to_string(),
                    schedule.height(j)?.to_string(),
                    defect,
                    bound.to_string(),
                    verdict.to_string(),
                ]);
                verdicts.push(verdict);
            }
            write_output(Some(&csv_path), |w| write_table(w, &["j", "lag", "defect", "bound", "verdict"], &rows))?;
            finish(&verdicts)
        }
        ReportKind::Mixing => {
            let cut = cutoff.clone().unwrap_or_else(|| default_cutoff(&schedule, base));
            let mut lags = report_lags(&args, &schedule, &cut)?;
            lags.retain(|m| *m != Nat::from(0u32));
            let threshold = parse_rat("threshold", &args.threshold)?;
            let report = verify_mixing_along(&schedule, &lags, &a, &b, &threshold, Some(cut), options)?;
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    let c = &r.correlation;
                    vec![
                        c.lag.to_string(),
                        c.lo.to_string(),
                        c.hi.to_string(),
                        c.method.to_string(),
                        c.stage.to_string(),
                        r.verdict.map(|v| v.to_string()).unwrap_or_else(|| "below-cutoff".into()),
                    ]
                })
                .collect();
            write_output(Some(&csv_path), |w| {
                write_table(w, &["lag", "lo", "hi", "method", "stage_used", "verdict"], &rows)
            })?;
            println!("cutoff: {}\ntarget: {}", report.cutoff, report.target);
            summary(
                report.verdict,
                report.count(Verdict::Pass),
                report.count(Verdict::Fail),
                report.count(Verdict::Inconclusive),
            );
            report.verdict
        }
        ReportKind::Kappa => {
            let lags = match (&args.lags, args.rigid_stage) {
                (Some(l), _) => parse_lags(l)?,
                (None, Some(j)) => kappa_lags(&schedule, j)?,
                (None, None) => bail!("give --lags or --rigid-stage"),
            };
            let tol = parse_rat("convergence-tolerance", &args.convergence_tolerance)?;
            let report = kappa_mixing_check(&schedule, &lags, &a, &b, &tol, options)?;
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.correlation.lag.to_string(),
                        r.correlation.lo.to_string(),
                        r.correlation.hi.to_string(),
                        r.kappa_lo.to_string(),
                        r.kappa_hi.to_string(),
                        fmt_f64(rat_to_f64(&r.midpoint())),
                    ]
                })
                .collect();
            write_output(Some(&csv_path), |w| {
                write_table(w, &["lag", "lo", "hi", "kappa_lo", "kappa_hi", "kappa_float"], &rows)
            })?;
            let verdict = if report.converged { Verdict::Pass } else { Verdict::Inconclusive };
            match &report.spread {
                Some(s) => println!("spread over last 3 lags: {} ({})", s, fmt_f64(rat_to_f64(s))),
                None => println!("fewer than 3 lags; convergence not judged"),
            }
            let (p, f, i) = count(&[verdict]);
            summary(verdict, p, f, i);
            verdict
        }
        ReportKind::Sp => {
            let stage = args.sweep_stage.unwrap_or(schedule.stages() - 1).max(1);
            let s_max = match &args.s_max {
                Some(s) => parse_nat("s-max", s)?,
                None => schedule.height(base)? - 1u32,
            };
            let p_max = args.p_max.unwrap_or(stage);
            let report = sp_completeness(&schedule, &a, &b, stage, &s_max, p_max, cutoff, args.guard, options)?;
            let rows: Vec<Vec<String>> = report
                .positive
                .iter()
                .map(|(lag, pairs, form)| {
                    vec![lag.to_string(), pairs.to_string(), form.as_ref().map(|f| f.to_string()).unwrap_or_default()]
                })
                .collect();
            write_output(Some(&csv_path), |w| write_table(w, &["lag", "pairs", "decomposition"], &rows))?;
            println!(
                "sweep stage {}, cutoff {}, S_max {}, P_max {}\npositive lags: {}\nobserved max p: {}, max |s|: {}",
                report.stage,
                report.cutoff,
                s_max,
                p_max,
                report.positive.len(),
                report.max_p,
                report.max_residual
            );
            for (what, list) in [
                ("undecomposed positive lags", &report.undecomposed),
                ("nonzero lags without decomposition", &report.nonzero_violations),
                ("uncertified lags without decomposition", &report.inconclusive),
            ] {
                if !list.is_empty() {
                    let shown: Vec<String> = list.iter().take(20).map(|m| m.to_string()).collect();
                    println!("{what}: {}", shown.join(", "));
                }
            }
            let fail = report.undecomposed.len() + report.nonzero_violations.len();
            summary(report.verdict, report.positive.len() - report.undecomposed.len(), fail, report.inconclusive.len());
            report.verdict
        }
        ReportKind::Suspension => {
            let stages = args.stages.as_deref().map(parse_stages).transpose()?.unwrap_or_else(default_stages);
            let cut = cutoff.clone().unwrap_or_else(|| default_cutoff(&schedule, base));
            let lags = if args.lags.is_some() || args.spec.is_some() {
                report_lags(&args, &schedule, &cut)?
            } else {
                Vec::new()
            };
            let report =
                suspension_inheritance_report(&schedule, &a, args.k, &stages, &b, args.n, &lags, options.clone())?;
            let mut rows = Vec::with_capacity(report.rows.len());
            let mut verdicts: Vec<Verdict> = report.rows.iter().map(|r| r.verdict).collect();
            let cells = report.rows.len().max(1) as f64;
            let confidence = 1.0 - (1.0 - CONFIDENCE_99) / cells;
            for (i, r) in report.rows.iter().enumerate() {
                let (k, n, right) = match r.kind {
                    InheritanceKind::Rigidity { .. } => (args.k, args.k, &a),
                    InheritanceKind::Mixing => (args.k, args.n, &b),
                };
                let analytic = r.joint.prob.to_f64();
                let (mc, ci) = if args.samples > 0 {
                    let counts = sample_joint_counts(
                        &schedule,
                        &a,
                        right,
                        &r.joint.lag,
                        schedule.stages(),
                        args.samples,
                        args.seed.wrapping_add(i as u64),
                        SamplingMode::Pieces,
                    )?;
                    let ci = counts.interval(k, n, confidence);
                    if analytic < ci.0 || analytic > ci.1 {
                        verdicts.push(Verdict::Fail);
                    }
                    (Some(counts.freq(k, n)), Some(ci))
                } else {
                    (None, None)
                };
                rows.push(SuspensionRow { lag: r.joint.lag.clone(), k, n, analytic, mc_freq: mc, ci });
            }
            write_output(Some(&csv_path), |w| write_suspension_csv(w, &rows))?;
            for r in &report.rows {
                match (r.kind, &r.bound) {
                    (InheritanceKind::Rigidity { j }, Some(bound)) => println!(
                        "rigidity j={j} lag={}: |P - P_alone| = {} <= 2(μ(A) - c) = {} -> {}",
                        r.joint.lag,
                        fmt_f64(r.difference),
                        fmt_f64(rat_to_f64(bound)),
                        r.verdict
                    ),
                    _ => println!(
                        "mixing lag={}: c = {}, |P - product| = {} -> {}",
                        r.joint.lag,
                        r.joint.overlap,
                        fmt_f64(r.difference),
                        r.verdict
                    ),
                }
            }
            println!("cylinder events only; general events of the configuration space follow by approximation");
            println!("note: {GAUSSIAN_NOTE}");
            finish(&verdicts)
        }
        ReportKind::Spectral => {
            let mut lags: Vec<Nat> = (0..=args.max_lag).map(Nat::from).collect();
            let stages = args.stages.as_deref().map(parse_stages).transpose()?.unwrap_or_else(default_stages);
            for &j in &stages {
                lags.push(schedule.height(j)?.clone());
            }
            lags.sort();
            lags.dedup();
            let seq = spectral_coefficients(&schedule, &a, &lags, options)?;
            write_output(Some(&csv_path), |w| write_spectral_csv(w, &seq))?;
            let mut verdicts = vec![Verdict::Pass];
            let dense = seq.dense_prefix(args.max_lag as usize).context("contiguous coefficients missing")?;
            // interval midpoints need not form a positive-definite sequence
            let certified = seq.exact_prefix().len() > args.max_lag as usize;
            let negative = if certified { Verdict::Fail } else { Verdict::Inconclusive };
            let density = fejer_density(&dense, args.grid);
            write_output(Some(&out_file(&args.out_dir, "verify-spectral-density.csv")?), |w| {
                write_density_csv(w, &density)
            })?;
            println!(
                "fejer: min {} (rounding bound {}), integral {}",
                fmt_f64(density.min()),
                fmt_f64(density.rounding_bound),
                fmt_f64(density.integral)
            );
            verdicts.push(if density.is_nonnegative() { Verdict::Pass } else { negative });
            let mut rng = stream_rng(args.seed, 7);
            let mut worst = f64::INFINITY;
            for _ in 0..32 {
                let subset = pick_subset(&mut rng, args.max_lag, 6);
                worst = worst.min(toeplitz_min_eigenvalue(&seq, &subset)?);
            }
            println!("toeplitz spot checks: smallest eigenvalue {}", fmt_f64(worst));
            verdicts.push(if worst >= -1e-9 { Verdict::Pass } else { negative });
            for &j in &stages {
                let h = schedule.height(j)?;
                if let Some(c) = seq.coefficients.iter().find(|c| &c.lag == h) {
                    println!("rigidity time h_{j} = {h}: coefficient {} ({})", c.midpoint(), fmt_f64(c.to_f64()));
                }
            }
            finish(&verdicts)
        }
    };
    println!("csv: {}", csv_path.display());
    Ok(verdict)
}

fn finish(verdicts: &[Verdict]) -> Verdict {
    let verdict = Verdict::combine(verdicts.iter().copied());
    let (p, f, i) = count(verdicts);
    summary(verdict, p, f, i);
    verdict
}

fn kind_name(kind: ReportKind) -> &'static str {
    match kind {
        ReportKind::Rigidity => "rigidity",
        ReportKind::Mixing => "mixing",
        ReportKind::Kappa => "kappa",
        ReportKind::Sp => "sp",
        ReportKind::Suspension => "suspension",
        ReportKind::Spectral => "spectral",
    }
}

/// Up to `d` distinct lags in `0..=max`, sorted.
fn pick_subset(rng: &mut impl Rng, max: u64, d: usize) -> Vec<u64> {
    let size = rng.random_range(1..=d);
    let mut v: Vec<u64> = (0..size).map(|_| rng.random_range(0..=max)).collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn cmd_spectral(args: SpectralArgs) -> Result<Verdict> {
    let schedule = load_schedule(&args.schedule)?;
    let a = parse_set(&schedule, &args.a)?;
    let lags: Vec<Nat> = (0..=args.max_lag).map(Nat::from).collect();
    let seq = spectral_coefficients(&schedule, &a, &lags, args.engine.options()?)?;
    let inexact = seq.coefficients.iter().filter(|c| !c.is_exact()).count();
    write_output(Some(&out_file(&args.out_dir, "spectral.csv")?), |w| write_spectral_csv(w, &seq))?;
    let dense = seq.dense_prefix(args.max_lag as usize).expect("all lags requested");
    let density = fejer_density(&dense, args.grid);
    write_output(Some(&out_file(&args.out_dir, "density.csv")?), |w| write_density_csv(w, &density))?;
    println!(
        "coefficients: {} ({} inexact, written as interval midpoints)\nfejer density (visual aid): min {}, integral {}",
        seq.coefficients.len(),
        inexact,
        fmt_f64(density.min()),
        fmt_f64(density.integral)
    );
    Ok(Verdict::Pass)
}

fn cmd_poisson(args: PoissonArgs) -> Result<Verdict> {
    let schedule = load_schedule(&args.schedule)?;
    let a = parse_set(&schedule, &args.a)?;
    let b = parse_set(&schedule, args.b.as_deref().unwrap_or(&args.a))?;
    let lag = parse_nat("lag", &args.lag)?;
    let options = args.engine.options()?;
    let stage = args.stage.unwrap_or(schedule.stages());
    let counts = if args.samples > 0 {
        let mode = match args.mode {
            SampleMode::Pieces => SamplingMode::Pieces,
            SampleMode::Full => SamplingMode::Full,
        };
        Some(sample_joint_counts(&schedule, &a, &b, &lag, stage, args.samples, args.seed, mode)?)
    } else {
        None
    };
    let cells = ((args.k_max + 1) * (args.k_max + 1)) as f64;
    let confidence = 1.0 - (1.0 - CONFIDENCE_99) / cells;
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    let mut overlap = None;
    for k in 0..=args.k_max {
        for n in 0..=args.k_max {
            let joint = joint_shifted_event_prob(&schedule, &a, k, &b, n, &lag, options.clone())?;
            let analytic = joint.prob.to_f64();
            overlap.get_or_insert(joint.overlap);
            let (mc, ci) = match &counts {
                Some(c) => {
                    let ci = c.interval(k, n, confidence);
                    verdicts.push(if ci.0 <= analytic && analytic <= ci.1 { Verdict::Pass } else { Verdict::Fail });
                    (Some(c.freq(k, n)), Some(ci))
                }
                None => (None, None),
            };
            rows.push(SuspensionRow { lag: lag.clone(), k, n, analytic, mc_freq: mc, ci });
        }
    }
    write_output(args.out.as_deref(), |w| write_suspension_csv(w, &rows))?;
    let overlap = overlap.expect("at least one cell");
    eprintln!("overlap c = {} ({})", overlap, fmt_f64(rat_to_f64(&overlap)));
    if counts.is_none() {
        return Ok(Verdict::Pass);
    }
    let verdict = Verdict::combine(verdicts.iter().copied());
    let (p, f, i) = count(&verdicts);
    eprintln!("verdict: {verdict} (pass {p}, fail {f}, inconclusive {i}; simultaneous 99% intervals)");
    Ok(verdict)
}
