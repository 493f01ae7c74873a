//! Post-hoc audit of synthesized schedules.
//!
//! Everything here is recomputed from the finished schedule and the original
//! description; nothing is shared with the synthesis code paths.

use std::fmt::Write as _;

use num_traits::Zero;

use super::{FamilyInterval, HeightPool, MixingSetSpec};
use crate::numeric::Nat;
use crate::schedule::ConstructionSchedule;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditCheck {
    pub stage: usize,
    pub what: String,
    pub passed: bool,
}

/// A closed safety window and where it was found to lie.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditWindow {
    pub stage: usize,
    pub t: usize,
    pub lo: Nat,
    pub hi: Nat,
    pub placement: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct AuditReport {
    pub title: String,
    pub checks: Vec<AuditCheck>,
    pub windows: Vec<AuditWindow>,
}

impl AuditReport {
    fn check(&mut self, stage: usize, passed: bool, what: impl Into<String>) {
        self.checks.push(AuditCheck { stage, what: what.into(), passed });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Human-readable listing: stage table, every window, every check.
    pub fn render(&self, schedule: &ConstructionSchedule) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        let _ = writeln!(out, "stages: {}", schedule.stages());
        let _ = writeln!(out);
        let _ = writeln!(out, "j\tr_j\th_j\tspacers");
        for j in 1..=schedule.stages() {
            let h = schedule.height(j).expect("built stage");
            match schedule.spacers(j) {
                Ok(sp) => {
                    let sp: Vec<String> = sp.iter().map(ToString::to_string).collect();
                    let _ = writeln!(out, "{j}\t{}\t{h}\t({})", schedule.cut(j).expect("cut exists"), sp.join(","));
                }
                Err(_) => {
                    let _ = writeln!(out, "{j}\t-\t{h}\t-");
                }
            }
        }
        if !self.windows.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "safety windows:");
            for w in &self.windows {
                let place = w.placement.as_deref().unwrap_or("NOT PLACED");
                let _ = writeln!(out, "stage {} t={} [{}, {}] {}", w.stage, w.t, w.lo, w.hi, place);
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "checks:");
        for c in &self.checks {
            let _ = writeln!(out, "{} stage {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.stage, c.what);
        }
        let _ = writeln!(out);
        let failed = self.failures().count();
        let _ = writeln!(
            out,
            "result: {} ({} checks, {} failed)",
            if failed == 0 { "PASS" } else { "FAIL" },
            self.checks.len(),
            failed
        );
        out
    }
}

fn family_placement(family: &[FamilyInterval], lo: &Nat, hi: &Nat) -> Option<String> {
    for (i, e) in family.iter().enumerate() {
        for n in 1..=e.multiplicity {
            let start = &e.a * n;
            let end = &start + &e.len;
            if &start <= lo && hi <= &end {
                return Some(format!("inside [{start}, {end}] (interval {}, copy {n})", i + 1));
            }
        }
    }
    None
}

fn placement(spec: &MixingSetSpec, lo: &Nat, hi: &Nat) -> Option<String> {
    match spec {
        MixingSetSpec::IntervalFamily(family) => family_placement(family, lo, hi),
        MixingSetSpec::ExplicitSet(set) => {
            let horizon = Nat::from(set.horizon());
            let hits = set
                .elements()
                .iter()
                .filter(|&&x| {
                    let x = Nat::from(x);
                    lo <= &x && &x <= hi
                })
                .count();
            if hits > 0 {
                None
            } else if hi > &horizon {
                Some(format!("free of the set up to the horizon {horizon}"))
            } else {
                Some("free of the set".into())
            }
        }
    }
}

/// Audit a last-column schedule: cuts, spacer layout, growth and every safety window.
pub fn audit_theorem1(schedule: &ConstructionSchedule, spec: &MixingSetSpec, growth: &Nat) -> AuditReport {
    let mut report = AuditReport { title: "audit: rigid last-column construction".into(), ..AuditReport::default() };
    for j in 1..schedule.stages() {
        let rec = &schedule.records()[j - 1];
        let expected_r = if j < 2 { 2 } else { j };
        report.check(j, rec.r == expected_r, format!("r_{j} = {} (expected {expected_r})", rec.r));
        let spacers = schedule.spacers(j).expect("cut exists");
        let leading_zero = spacers[..spacers.len() - 1].iter().all(Zero::is_zero);
        report.check(j, leading_zero, "spacers only on the last column");
        let h = schedule.height(j).expect("built");
        let next = schedule.height(j + 1).expect("built");
        let s = &spacers[spacers.len() - 1];
        let needed = growth * j * h;
        report.check(j, s >= &needed, format!("s_{j} = {s} >= {needed}"));
        let reach = h * rec.r;
        // copies of W_{j+1} in W_{j+2} differ by t = 1..r_{j+1}-1 = j
        for t in 1..=j {
            let centre = next * t;
            let lo = &centre - &reach;
            let hi = &centre + &reach;
            let place = placement(spec, &lo, &hi);
            report.check(j, place.is_some(), format!("window t={t} [{lo}, {hi}] outside the mixing set"));
            report.windows.push(AuditWindow { stage: j, t, lo, hi, placement: place });
        }
    }
    report
}

/// Audit a two-column schedule built from an interval list.
pub fn audit_theorem2(schedule: &ConstructionSchedule, intervals: &[FamilyInterval], growth: &Nat) -> AuditReport {
    let mut report =
        AuditReport { title: "audit: partially rigid two-column construction".into(), ..AuditReport::default() };
    for j in 1..schedule.stages() {
        let rec = &schedule.records()[j - 1];
        report.check(j, rec.r == 2, format!("r_{j} = {} (expected 2)", rec.r));
        let spacers = schedule.spacers(j).expect("cut exists");
        report.check(j, spacers.len() == 2 && spacers[0].is_zero(), "spacers (0, s_j)");
        let h = schedule.height(j).expect("built");
        let s = &spacers[spacers.len() - 1];
        let needed = growth * h;
        report.check(j, s >= &needed, format!("s_{j} = {s} >= {needed}"));
        let next = schedule.height(j + 1).expect("built");
        let reach = h * 2u32;
        let lo = next - &reach;
        let hi = next + &reach;
        let place = family_placement(intervals, &lo, &hi);
        report.check(j, place.is_some(), format!("window [{lo}, {hi}] inside a listed interval"));
        report.windows.push(AuditWindow { stage: j, t: 1, lo, hi, placement: place });
    }
    report
}

fn pool_member(pool: &HeightPool, x: &Nat) -> bool {
    match pool {
        HeightPool::Explicit(v) => v.binary_search(x).is_ok(),
        HeightPool::Integers => !x.is_zero(),
        HeightPool::Squares => x.sqrt().pow(2) == *x && !x.is_zero(),
        HeightPool::Cubes => x.cbrt().pow(3) == *x && !x.is_zero(),
    }
}

/// Largest pool element strictly below `x`, by walking down from it (patterns) or scanning (lists).
fn pool_predecessor(pool: &HeightPool, x: &Nat) -> Option<Nat> {
    match pool {
        HeightPool::Explicit(v) => v.iter().rev().find(|e| *e < x).cloned(),
        HeightPool::Integers => (x > &Nat::from(1u32)).then(|| x - 1u32),
        HeightPool::Squares | HeightPool::Cubes => {
            let k = if matches!(pool, HeightPool::Squares) { 2 } else { 3 };
            let root = x.nth_root(k);
            let below = if &root.pow(k) == x { root - 1u32 } else { root };
            (!below.is_zero()).then(|| below.pow(k))
        }
    }
}

/// Audit a height-pool schedule: membership, growth, minimality and spacers.
pub fn audit_theorem3(schedule: &ConstructionSchedule, pool: &HeightPool, growth: u64) -> AuditReport {
    let mut report = AuditReport {
        title: format!("audit: height subsequence from the {pool} pool, growth {growth}"),
        ..AuditReport::default()
    };
    let h1 = schedule.height(1).expect("stage 1");
    report.check(1, pool_member(pool, h1), format!("h_1 = {h1} is in the pool"));
    report.check(1, pool_predecessor(pool, h1).is_none(), "h_1 is the least pool element");
    for j in 1..schedule.stages() {
        let h = schedule.height(j).expect("built");
        let next = schedule.height(j + 1).expect("built");
        let floor = h * growth;
        report.check(j + 1, pool_member(pool, next), format!("h_{} = {next} is in the pool", j + 1));
        report.check(j + 1, next >= &floor, format!("h_{} >= {floor}", j + 1));
        let minimal = pool_predecessor(pool, next).is_none_or(|p| p < floor);
        report.check(j + 1, minimal, format!("no pool element in [{floor}, h_{})", j + 1));
        let rec = &schedule.records()[j - 1];
        let spacers = schedule.spacers(j).expect("cut exists");
        let shape = rec.r == 2 && spacers[0].is_zero() && &spacers[1] + h * 2u32 == *next;
        report.check(j, shape, format!("cut {j} is r = 2 with spacers (0, h_{} - 2h_{j})", j + 1));
        report.check(j, &spacers[1] >= h, format!("s_{j} >= h_{j}"));
    }
    report
}

/// Cutoff beyond which mixing is claimed for sets of stage `n`: `h_{n+1}`.
pub fn audited_cutoff(schedule: &ConstructionSchedule, n: usize) -> Option<Nat> {
    schedule.height(n + 1).ok().cloned()
}

/// Largest lag the built stages certify: `s_{J-1}`, the spacer run on top of the last tower.
pub fn resolvable_limit(schedule: &ConstructionSchedule) -> Option<Nat> {
    let j = schedule.stages().checked_sub(1).filter(|&j| j >= 1)?;
    schedule.spacers(j).ok()?.last().cloned()
}

/// Number of windows that could not be placed, for quick summaries.
pub fn unplaced(report: &AuditReport) -> usize {
    report.windows.iter().filter(|w| w.placement.is_none()).count()
}
