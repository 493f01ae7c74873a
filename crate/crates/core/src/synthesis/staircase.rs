use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numeric::{rat_from_nat, Nat, Rat};
use crate::schedule::{ConstructionSchedule, MeasureMode, SpacerSchedule};

/// One stage of a finite-measure staircase plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StaircaseStage {
    /// `r_j = max(j, 2)` with spacers `(1, 2, ..., r_j)`.
    Mixing,
    /// `r_j = copies·q` with `copies` repetitions of `(1, ..., q)`.
    Rigid { copies: usize, q: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StaircasePlan {
    pub h1: Nat,
    pub w1: Rat,
    pub bound: Rat,
    pub stages: Vec<StaircaseStage>,
    /// Warn when the partial sums of `r_j / h_j` exceed this.
    pub budget_warning: Rat,
}

#[derive(Clone, Debug)]
pub struct StaircaseReport {
    /// Partial sums of `r_j / h_j`, one per cut.
    pub budget_sums: Vec<Rat>,
    pub stage_measures: Vec<Rat>,
    pub warnings: Vec<String>,
}

/// Cut count and spacer schedule of stage `j`.
pub fn staircase_params(stage: StaircaseStage, j: usize) -> Result<(usize, SpacerSchedule)> {
    match stage {
        StaircaseStage::Mixing => {
            let r = j.max(2);
            Ok((r, SpacerSchedule::Staircase(r)))
        }
        StaircaseStage::Rigid { copies, q } => {
            if copies == 0 || q == 0 || copies * q < 2 {
                return Err(Error::InvalidParameter(format!("rigid stage {j} needs copies, q >= 1 and copies·q >= 2")));
            }
            Ok((copies * q, SpacerSchedule::RepeatedStaircase { copies, q }))
        }
    }
}

pub fn synthesize_staircase(plan: &StaircasePlan) -> Result<(ConstructionSchedule, StaircaseReport)> {
    let mode = MeasureMode::Finite { bound: plan.bound.clone() };
    let mut schedule = ConstructionSchedule::new(plan.h1.clone(), plan.w1.clone(), mode)?;
    let mut sum = Rat::zero();
    let mut report = StaircaseReport {
        budget_sums: Vec::new(),
        stage_measures: vec![schedule.stage_measure(1)?],
        warnings: Vec::new(),
    };
    for (idx, &stage) in plan.stages.iter().enumerate() {
        let j = idx + 1;
        let (r, spacers) = staircase_params(stage, j)?;
        sum += Rat::from_integer(r.into()) / rat_from_nat(schedule.height(j)?);
        schedule.advance_stage(r, spacers)?;
        report.stage_measures.push(schedule.stage_measure(j + 1)?);
        if sum > plan.budget_warning {
            report.warnings.push(format!(
                "stage {j}: sum of r/h reached {sum}, above {}; the measure bound may not hold in the limit",
                plan.budget_warning
            ));
        }
        report.budget_sums.push(sum.clone());
    }
    Ok((schedule, report))
}

/// Lags `n·(q h_j + q(q+1)/2)`, `n = 1..copies-1`: whole multiples of one
/// staircase block of the rigid cut at stage `j`.
pub fn kappa_lags(schedule: &ConstructionSchedule, j: usize) -> Result<Vec<Nat>> {
    let spacers = schedule.spacers(j)?;
    let record = &schedule.records()[j - 1];
    let SpacerSchedule::RepeatedStaircase { copies, q } = record.spacers else {
        return Err(Error::InvalidParameter(format!("stage {j} is not a rigid staircase stage")));
    };
    let block: Nat = schedule.height(j)? * q + spacers[..q].iter().sum::<Nat>();
    Ok((1..copies).map(|n| &block * n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{nat, rat};

    #[test]
    fn params() {
        let (r, s) = staircase_params(StaircaseStage::Mixing, 4).unwrap();
        assert_eq!((r, s.expand(r).unwrap()), (4, [1u64, 2, 3, 4].map(nat).to_vec()));
        let (r, s) = staircase_params(StaircaseStage::Rigid { copies: 3, q: 2 }, 5).unwrap();
        assert_eq!((r, s.expand(r).unwrap()), (6, [1u64, 2, 1, 2, 1, 2].map(nat).to_vec()));
        assert!(staircase_params(StaircaseStage::Rigid { copies: 1, q: 1 }, 2).is_err());
    }

    #[test]
    fn plan_builds_and_reports() {
        let plan = StaircasePlan {
            h1: nat(4),
            w1: rat(1, 1),
            bound: rat(20, 1),
            stages: vec![StaircaseStage::Mixing, StaircaseStage::Rigid { copies: 3, q: 2 }, StaircaseStage::Mixing],
            budget_warning: rat(1, 1),
        };
        let (s, report) = synthesize_staircase(&plan).unwrap();
        assert_eq!(s.stages(), 4);
        // 4·2 + 3 = 11; 11·6 + 9 = 75; 75·3 + 6 = 231
        assert_eq!(s.heights(), &[4u64, 11, 75, 231].map(nat));
        assert_eq!(report.budget_sums[0], rat(1, 2));
        assert!(report.stage_measures.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(kappa_lags(&s, 2).unwrap(), vec![nat(25), nat(50)]);
        assert!(kappa_lags(&s, 1).is_err());

        let tight = StaircasePlan { bound: rat(5, 1), ..plan };
        assert!(matches!(synthesize_staircase(&tight), Err(Error::MeasureBudgetExceeded { .. })));
    }
}
