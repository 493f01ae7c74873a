//! TOML schedule and spec files.
//!
//! Schedule files (`schema = "rankone-schedule/1"`) either list every cut or
//! carry a `[generator]` table pointing at a spec file. Spec files
//! (`schema = "rankone-mixing-set/1"`) describe what to synthesize. Big
//! integers are strings of decimal digits and rationals are `"p/q"` strings so
//! nothing passes through a float. Unknown keys are rejected.
//!
//! [`schedule_to_toml`] is a hand-written canonical serializer: parsing its
//! output and serializing again gives the same bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_traits::One;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::numeric::{Nat, Rat};
use crate::schedule::{ConstructionSchedule, MeasureMode, SpacerSchedule};
use crate::synthesis::{
    audit_theorem1, audit_theorem2, audit_theorem3, synthesize_staircase, synthesize_theorem1, synthesize_theorem2,
    theorem3_heights, ExplicitPattern, ExplicitSet, FamilyInterval, HeightPool, MixingSetSpec, StaircasePlan,
    StaircaseStage, SynthesisOptions, DEFAULT_GROWTH,
};

pub const SCHEDULE_SCHEMA: &str = "rankone-schedule/1";
pub const SPEC_SCHEMA: &str = "rankone-mixing-set/1";

fn parse_nat(field: &str, s: &str) -> Result<Nat> {
    s.trim().parse().map_err(|_| Error::Config(format!("`{field}`: `{s}` is not a nonnegative integer")))
}

fn parse_rat(field: &str, s: &str) -> Result<Rat> {
    s.trim().parse().map_err(|_| Error::Config(format!("`{field}`: `{s}` is not a rational `p/q`")))
}

fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn check_schema(found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::Config(format!("schema `{found}` is not supported; expected `{expected}`")));
    }
    Ok(())
}

fn missing(field: &str, context: &str) -> Error {
    Error::Config(format!("{context} needs `{field}`"))
}

fn forbid(present: bool, field: &str, context: &str) -> Result<()> {
    if present {
        return Err(Error::Config(format!("`{field}` is not allowed for {context}")));
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    schema: String,
    mode: Option<String>,
    bound: Option<String>,
    h1: Option<String>,
    w1: Option<String>,
    generator: Option<RawGenerator>,
    #[serde(default)]
    stage: Vec<RawStage>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    theorem: String,
    spec: String,
    stages: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStage {
    r: usize,
    kind: String,
    s: Option<String>,
    spacers: Option<Vec<String>>,
    q: Option<usize>,
    copies: Option<usize>,
}

/// Which synthesis route a generator or `synth` call uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Theorem {
    /// Last-column cuts `r_j = max(j, 2)`.
    LastColumn,
    /// Two-column cuts `r_j = 2` from an interval family.
    TwoColumn,
    /// Two-column cuts with heights from a pool.
    HeightPool,
    Staircase,
}

impl std::str::FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(Theorem::LastColumn),
            "2" => Ok(Theorem::TwoColumn),
            "3" => Ok(Theorem::HeightPool),
            "staircase" => Ok(Theorem::Staircase),
            _ => Err(Error::Config(format!("unknown theorem `{s}`; expected 1, 2, 3 or staircase"))),
        }
    }
}

impl std::fmt::Display for Theorem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Theorem::LastColumn => "1",
            Theorem::TwoColumn => "2",
            Theorem::HeightPool => "3",
            Theorem::Staircase => "staircase",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorDirective {
    pub theorem: Theorem,
    /// Relative paths are resolved against the schedule file's directory.
    pub spec: PathBuf,
    pub stages: Option<usize>,
}

#[derive(Clone, Debug)]
pub enum ScheduleFile {
    Explicit(ConstructionSchedule),
    Generated(GeneratorDirective),
}

pub fn parse_schedule_file(text: &str) -> Result<ScheduleFile> {
    let raw: RawSchedule = toml::from_str(text)?;
    check_schema(&raw.schema, SCHEDULE_SCHEMA)?;
    if let Some(g) = raw.generator {
        let context = "a generated schedule";
        forbid(raw.mode.is_some(), "mode", context)?;
        forbid(raw.bound.is_some(), "bound", context)?;
        forbid(raw.h1.is_some(), "h1", context)?;
        forbid(raw.w1.is_some(), "w1", context)?;
        forbid(!raw.stage.is_empty(), "stage", context)?;
        return Ok(ScheduleFile::Generated(GeneratorDirective {
            theorem: g.theorem.parse()?,
            spec: PathBuf::from(g.spec),
            stages: g.stages,
        }));
    }
    let mode = match raw.mode.as_deref() {
        Some("infinite") => {
            forbid(raw.bound.is_some(), "bound", "infinite mode")?;
            MeasureMode::Infinite
        }
        Some("finite") => {
            let bound = raw.bound.as_deref().ok_or_else(|| missing("bound", "finite mode"))?;
            MeasureMode::Finite { bound: parse_rat("bound", bound)? }
        }
        Some(other) => return Err(Error::Config(format!("unknown mode `{other}`"))),
        None => return Err(missing("mode", "a schedule")),
    };
    let h1 = parse_nat("h1", raw.h1.as_deref().ok_or_else(|| missing("h1", "a schedule"))?)?;
    let w1 = parse_rat("w1", raw.w1.as_deref().ok_or_else(|| missing("w1", "a schedule"))?)?;
    let mut schedule = ConstructionSchedule::new(h1, w1, mode)?;
    for (i, st) in raw.stage.into_iter().enumerate() {
        let context = format!("stage {} ({})", i + 1, st.kind);
        let spacers = match st.kind.as_str() {
            "explicit" => {
                forbid(st.s.is_some() || st.q.is_some() || st.copies.is_some(), "s/q/copies", &context)?;
                let list = st.spacers.ok_or_else(|| missing("spacers", &context))?;
                SpacerSchedule::Explicit(list.iter().map(|v| parse_nat("spacers", v)).collect::<Result<_>>()?)
            }
            "last-column" | "two-column" => {
                forbid(st.spacers.is_some() || st.q.is_some() || st.copies.is_some(), "spacers/q/copies", &context)?;
                let s = parse_nat("s", st.s.as_deref().ok_or_else(|| missing("s", &context))?)?;
                if st.kind == "last-column" {
                    SpacerSchedule::LastColumn(s)
                } else {
                    SpacerSchedule::TwoColumn(s)
                }
            }
            "staircase" => {
                forbid(st.spacers.is_some() || st.s.is_some() || st.copies.is_some(), "spacers/s/copies", &context)?;
                SpacerSchedule::Staircase(st.q.ok_or_else(|| missing("q", &context))?)
            }
            "repeated-staircase" => {
                forbid(st.spacers.is_some() || st.s.is_some(), "spacers/s", &context)?;
                SpacerSchedule::RepeatedStaircase {
                    copies: st.copies.ok_or_else(|| missing("copies", &context))?,
                    q: st.q.ok_or_else(|| missing("q", &context))?,
                }
            }
            other => return Err(Error::Config(format!("stage {}: unknown kind `{other}`", i + 1))),
        };
        schedule.advance_stage(st.r, spacers)?;
    }
    Ok(ScheduleFile::Explicit(schedule))
}

/// Canonical text of a schedule.
pub fn schedule_to_toml(schedule: &ConstructionSchedule) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "schema = \"{SCHEDULE_SCHEMA}\"");
    match schedule.mode() {
        MeasureMode::Infinite => out.push_str("mode = \"infinite\"\n"),
        MeasureMode::Finite { bound } => {
            let _ = writeln!(out, "mode = \"finite\"\nbound = \"{}\"", fmt_rat(bound));
        }
    }
    let _ = writeln!(out, "h1 = \"{}\"", schedule.heights()[0]);
    let _ = writeln!(out, "w1 = \"{}\"", fmt_rat(&schedule.width(1).expect("stage 1 exists").clone()));
    for rec in schedule.records() {
        let _ = write!(out, "\n[[stage]]\nr = {}\n", rec.r);
        match &rec.spacers {
            SpacerSchedule::Explicit(v) => {
                let list: Vec<String> = v.iter().map(|x| format!("\"{x}\"")).collect();
                let _ = writeln!(out, "kind = \"explicit\"\nspacers = [{}]", list.join(", "));
            }
            SpacerSchedule::LastColumn(s) => {
                let _ = writeln!(out, "kind = \"last-column\"\ns = \"{s}\"");
            }
            SpacerSchedule::TwoColumn(s) => {
                let _ = writeln!(out, "kind = \"two-column\"\ns = \"{s}\"");
            }
            SpacerSchedule::Staircase(q) => {
                let _ = writeln!(out, "kind = \"staircase\"\nq = {q}");
            }
            SpacerSchedule::RepeatedStaircase { copies, q } => {
                let _ = writeln!(out, "kind = \"repeated-staircase\"\ncopies = {copies}\nq = {q}");
            }
        }
    }
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    schema: String,
    kind: String,
    h1: Option<String>,
    w1: Option<String>,
    growth: Option<String>,
    #[serde(default)]
    interval: Vec<RawInterval>,
    pattern: Option<String>,
    elements: Option<Vec<u64>>,
    horizon: Option<u64>,
    attested: Option<bool>,
    pool: Option<String>,
    heights: Option<Vec<String>>,
    bound: Option<String>,
    budget_warning: Option<String>,
    #[serde(default)]
    plan: Vec<RawPlanStage>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInterval {
    a: String,
    len: String,
    multiplicity: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlanStage {
    kind: String,
    copies: Option<usize>,
    q: Option<usize>,
}

/// What a spec file describes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpecBody {
    Mixing(MixingSetSpec),
    HeightPool(HeightPool),
    Staircase(StaircasePlan),
}

#[derive(Clone, Debug)]
pub struct SpecFile {
    pub body: SpecBody,
    pub h1: Option<Nat>,
    pub w1: Option<Rat>,
    pub growth: Option<Nat>,
}

impl SpecFile {
    pub fn synthesis_options(&self) -> SynthesisOptions {
        let d = SynthesisOptions::default();
        SynthesisOptions {
            h1: self.h1.clone().unwrap_or(d.h1),
            w1: self.w1.clone().unwrap_or(d.w1),
            growth: self.growth.clone().unwrap_or(d.growth),
        }
    }
}

pub fn parse_spec_file(text: &str) -> Result<SpecFile> {
    let raw: RawSpec = toml::from_str(text)?;
    check_schema(&raw.schema, SPEC_SCHEMA)?;
    let h1 = raw.h1.as_deref().map(|v| parse_nat("h1", v)).transpose()?;
    let w1 = raw.w1.as_deref().map(|v| parse_rat("w1", v)).transpose()?;
    let growth = raw.growth.as_deref().map(|v| parse_nat("growth", v)).transpose()?;
    let kind = raw.kind.as_str();
    let context = format!("spec kind `{kind}`");
    let no_intervals = || forbid(!raw.interval.is_empty(), "interval", &context);
    let no_explicit = || {
        forbid(
            raw.pattern.is_some() || raw.elements.is_some() || raw.horizon.is_some() || raw.attested.is_some(),
            "pattern/elements/horizon/attested",
            &context,
        )
    };
    let no_pool = || forbid(raw.pool.is_some() || raw.heights.is_some(), "pool/heights", &context);
    let no_plan = || {
        forbid(
            !raw.plan.is_empty() || raw.bound.is_some() || raw.budget_warning.is_some(),
            "plan/bound/budget_warning",
            &context,
        )
    };
    let body = match kind {
        "interval-family" => {
            no_explicit()?;
            no_pool()?;
            no_plan()?;
            let family = raw
                .interval
                .iter()
                .map(|e| Ok(FamilyInterval::new(parse_nat("a", &e.a)?, parse_nat("len", &e.len)?, e.multiplicity)))
                .collect::<Result<Vec<_>>>()?;
            SpecBody::Mixing(MixingSetSpec::IntervalFamily(family))
        }
        "explicit-set" => {
            no_intervals()?;
            no_pool()?;
            no_plan()?;
            let horizon = raw.horizon.ok_or_else(|| missing("horizon", &context))?;
            let attested = raw.attested.unwrap_or(false);
            let set = match (raw.pattern.as_deref(), raw.elements) {
                (Some(p), None) => ExplicitSet::from_pattern(p.parse::<ExplicitPattern>()?, horizon, attested)?,
                (None, Some(v)) => ExplicitSet::new(v, horizon, attested)?,
                _ => return Err(Error::Config("explicit-set needs exactly one of `pattern` and `elements`".into())),
            };
            SpecBody::Mixing(MixingSetSpec::ExplicitSet(set))
        }
        "height-pool" => {
            no_intervals()?;
            no_explicit()?;
            no_plan()?;
            forbid(h1.is_some(), "h1", &context)?;
            let pool = match (raw.pool.as_deref(), raw.heights) {
                (Some(p), None) => p.parse::<HeightPool>()?,
                (None, Some(v)) => {
                    HeightPool::Explicit(v.iter().map(|x| parse_nat("heights", x)).collect::<Result<_>>()?)
                }
                _ => return Err(Error::Config("height-pool needs exactly one of `pool` and `heights`".into())),
            };
            pool.validate()?;
            SpecBody::HeightPool(pool)
        }
        "staircase-plan" => {
            no_intervals()?;
            no_explicit()?;
            no_pool()?;
            forbid(growth.is_some(), "growth", &context)?;
            let bound = parse_rat("bound", raw.bound.as_deref().ok_or_else(|| missing("bound", &context))?)?;
            let budget_warning = raw.budget_warning.as_deref().map(|v| parse_rat("budget_warning", v)).transpose()?;
            let stages = raw
                .plan
                .iter()
                .enumerate()
                .map(|(i, p)| match p.kind.as_str() {
                    "mixing" => {
                        forbid(p.copies.is_some() || p.q.is_some(), "copies/q", "a mixing stage")?;
                        Ok(StaircaseStage::Mixing)
                    }
                    "rigid" => Ok(StaircaseStage::Rigid {
                        copies: p.copies.ok_or_else(|| missing("copies", "a rigid stage"))?,
                        q: p.q.ok_or_else(|| missing("q", "a rigid stage"))?,
                    }),
                    other => Err(Error::Config(format!("plan stage {}: unknown kind `{other}`", i + 1))),
                })
                .collect::<Result<Vec<_>>>()?;
            if stages.is_empty() {
                return Err(missing("plan", &context));
            }
            SpecBody::Staircase(StaircasePlan {
                h1: h1.clone().unwrap_or_else(Nat::one),
                w1: w1.clone().unwrap_or_else(Rat::one),
                bound,
                stages,
                budget_warning: budget_warning.unwrap_or_else(Rat::one),
            })
        }
        other => return Err(Error::Config(format!("unknown spec kind `{other}`"))),
    };
    if let SpecBody::Mixing(m) = &body {
        m.validate()?;
    }
    Ok(SpecFile { body, h1, w1, growth })
}

/// A synthesized schedule together with its audit.
#[derive(Clone, Debug)]
pub struct Synthesized {
    pub schedule: ConstructionSchedule,
    pub report: String,
    pub passed: bool,
}

/// Run the synthesis route `theorem` on `spec`. Staircase plans fix their own stage count.
pub fn synthesize(theorem: Theorem, spec: &SpecFile, stages: Option<usize>) -> Result<Synthesized> {
    let need_stages = || stages.ok_or_else(|| Error::Config(format!("theorem {theorem} needs a stage count")));
    let wrong = |what: &str| Error::Config(format!("theorem {theorem} cannot use a {what} spec"));
    let options = spec.synthesis_options();
    match (theorem, &spec.body) {
        (Theorem::LastColumn, SpecBody::Mixing(m)) => {
            let schedule = synthesize_theorem1(m, need_stages()?, &options)?;
            let audit = audit_theorem1(&schedule, m, &options.growth);
            Ok(Synthesized { report: audit.render(&schedule), passed: audit.passed(), schedule })
        }
        (Theorem::TwoColumn, SpecBody::Mixing(MixingSetSpec::IntervalFamily(f))) => {
            let schedule = synthesize_theorem2(f, need_stages()?, &options)?;
            let audit = audit_theorem2(&schedule, f, &options.growth);
            Ok(Synthesized { report: audit.render(&schedule), passed: audit.passed(), schedule })
        }
        (Theorem::HeightPool, SpecBody::HeightPool(pool)) => {
            let growth = match &spec.growth {
                Some(g) => u64::try_from(g).map_err(|_| Error::Config("growth does not fit in 64 bits".into()))?,
                None => DEFAULT_GROWTH,
            };
            let schedule = theorem3_heights(pool, growth, need_stages()?, options.w1)?;
            let audit = audit_theorem3(&schedule, pool, growth);
            Ok(Synthesized { report: audit.render(&schedule), passed: audit.passed(), schedule })
        }
        (Theorem::Staircase, SpecBody::Staircase(plan)) => {
            if stages.is_some_and(|s| s != plan.stages.len() + 1) {
                return Err(Error::Config(format!(
                    "staircase plan has {} cuts, so it builds {} stages",
                    plan.stages.len(),
                    plan.stages.len() + 1
                )));
            }
            let (schedule, report) = synthesize_staircase(plan)?;
            let mut text = String::from("staircase construction\n\nj\tr_j\th_j\tsum r/h\tmeasure\n");
            for j in 1..=schedule.stages() {
                let r = schedule.cut(j).map(|r| r.to_string()).unwrap_or_else(|_| "-".into());
                let sum = report.budget_sums.get(j - 1).map(fmt_rat).unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    text,
                    "{j}\t{r}\t{}\t{sum}\t{}",
                    schedule.height(j)?,
                    fmt_rat(&report.stage_measures[j - 1])
                );
            }
            for w in &report.warnings {
                let _ = writeln!(text, "warning: {w}");
            }
            let _ = writeln!(text, "\nresult: PASS");
            Ok(Synthesized { schedule, report: text, passed: true })
        }
        (Theorem::TwoColumn, SpecBody::Mixing(_)) => Err(wrong("explicit-set")),
        (_, SpecBody::Mixing(_)) => Err(wrong("mixing-set")),
        (_, SpecBody::HeightPool(_)) => Err(wrong("height-pool")),
        (_, SpecBody::Staircase(_)) => Err(wrong("staircase-plan")),
    }
}

/// Read a schedule file, running its generator if it has one.
pub fn load_schedule(path: &Path) -> Result<ConstructionSchedule> {
    match parse_schedule_file(&std::fs::read_to_string(path)?)? {
        ScheduleFile::Explicit(s) => Ok(s),
        ScheduleFile::Generated(g) => {
            let spec_path = path.parent().unwrap_or(Path::new(".")).join(&g.spec);
            let spec = parse_spec_file(&std::fs::read_to_string(spec_path)?)?;
            Ok(synthesize(g.theorem, &spec, g.stages)?.schedule)
        }
    }
}

pub fn load_spec(path: &Path) -> Result<SpecFile> {
    parse_spec_file(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{nat, rat};

    const SCHEDULE: &str = r#"schema = "rankone-schedule/1"
mode = "finite"
bound = "40/3"
h1 = "4"
w1 = "1/2"

[[stage]]
r = 2
kind = "explicit"
spacers = ["0", "3"]

[[stage]]
r = 3
kind = "last-column"
s = "12"

[[stage]]
r = 2
kind = "two-column"
s = "5"

[[stage]]
r = 3
kind = "staircase"
q = 3

[[stage]]
r = 4
kind = "repeated-staircase"
copies = 2
q = 2
"#;

    #[test]
    fn schedule_round_trip_is_exact() {
        let ScheduleFile::Explicit(s) = parse_schedule_file(SCHEDULE).unwrap() else { panic!() };
        assert_eq!(s.stages(), 6);
        assert_eq!(s.heights()[1], nat(11));
        assert_eq!(schedule_to_toml(&s), SCHEDULE);
    }

    #[test]
    fn unknown_keys_and_schemas_are_rejected() {
        let extra = SCHEDULE.replace("h1 = \"4\"", "h1 = \"4\"\ncolour = \"red\"");
        assert!(parse_schedule_file(&extra).is_err());
        let old = SCHEDULE.replace("rankone-schedule/1", "rankone-schedule/0");
        assert!(parse_schedule_file(&old).is_err());
        let stray = SCHEDULE.replace("kind = \"staircase\"\nq = 3", "kind = \"staircase\"\nq = 3\ns = \"1\"");
        assert!(parse_schedule_file(&stray).is_err());
    }

    #[test]
    fn generator_directive() {
        let text = "schema = \"rankone-schedule/1\"\n\n[generator]\ntheorem = \"1\"\nspec = \"t1.toml\"\nstages = 5\n";
        let ScheduleFile::Generated(g) = parse_schedule_file(text).unwrap() else { panic!() };
        assert_eq!((g.theorem, g.stages), (Theorem::LastColumn, Some(5)));
        assert!(parse_schedule_file(&format!("{text}h1 = \"2\"\n")).is_err());
    }

    #[test]
    fn spec_kinds() {
        let family = r#"schema = "rankone-mixing-set/1"
kind = "interval-family"
h1 = "5"

[[interval]]
a = "30"
len = "20"
multiplicity = 1
"#;
        let spec = parse_spec_file(family).unwrap();
        let out = synthesize(Theorem::TwoColumn, &spec, Some(2)).unwrap();
        assert_eq!(out.schedule.heights(), &[nat(5), nat(40)]);
        assert!(out.passed);
        assert!(synthesize(Theorem::HeightPool, &spec, Some(2)).is_err());

        let explicit =
            "schema = \"rankone-mixing-set/1\"\nkind = \"explicit-set\"\npattern = \"squares\"\nhorizon = 100\n";
        let SpecBody::Mixing(MixingSetSpec::ExplicitSet(set)) = parse_spec_file(explicit).unwrap().body else {
            panic!()
        };
        assert_eq!(set.elements().len(), 10);

        let pool = "schema = \"rankone-mixing-set/1\"\nkind = \"height-pool\"\npool = \"squares\"\n";
        let spec = parse_spec_file(pool).unwrap();
        let out = synthesize(Theorem::HeightPool, &spec, Some(4)).unwrap();
        assert_eq!(out.schedule.heights(), &[1u64, 9, 81, 676].map(nat));

        let plan = r#"schema = "rankone-mixing-set/1"
kind = "staircase-plan"
h1 = "4"
bound = "20"

[[plan]]
kind = "mixing"

[[plan]]
kind = "rigid"
copies = 3
q = 2
"#;
        let spec = parse_spec_file(plan).unwrap();
        let out = synthesize(Theorem::Staircase, &spec, None).unwrap();
        assert_eq!(out.schedule.heights(), &[4u64, 11, 75].map(nat));
        assert_eq!(*out.schedule.mode(), MeasureMode::Finite { bound: rat(20, 1) });

        assert!(parse_spec_file(&plan.replace("kind = \"mixing\"", "kind = \"mixing\"\nq = 2")).is_err());
        assert!(parse_spec_file(&pool.replace("pool = \"squares\"", "pool = \"squares\"\nhorizon = 3")).is_err());
    }
}
