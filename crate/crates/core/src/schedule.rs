//! Symbolic cutting-and-stacking construction.
//!
//! Stage `j` is a tower of `h_j` levels of width `w_j`. Cutting it into `r_j`
//! columns, putting `s_j(i)` spacer levels on top of column `i` and stacking the
//! columns left to right gives the stage `j + 1` tower, so the level word obeys
//!
//! ```text
//! W_{j+1} = W_j s^{s_j(1)} W_j s^{s_j(2)} ... W_j s^{s_j(r_j)}
//! ```
//!
//! Stage indices are 1-based; positions and level indices are 0-based.

use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numeric::{rat_from_nat, Nat, Rat};

/// Words longer than this are never materialized unless the caller raises the guard.
pub const DEFAULT_WORD_GUARD: u64 = 1_000_000;

/// Spacer columns added at one cut.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpacerSchedule {
    /// One entry per column.
    Explicit(Vec<Nat>),
    /// `(0, ..., 0, s)`: all spacers on the last column, whatever `r` is.
    LastColumn(Nat),
    /// `(0, s)`.
    TwoColumn(Nat),
    /// `(1, 2, ..., q)`.
    Staircase(usize),
    /// `copies` concatenated copies of `(1, 2, ..., q)`.
    RepeatedStaircase { copies: usize, q: usize },
}

impl SpacerSchedule {
    /// Number of columns the schedule fixes, or `None` when it adapts to `r`.
    pub fn columns(&self) -> Option<usize> {
        match self {
            SpacerSchedule::Explicit(v) => Some(v.len()),
            SpacerSchedule::LastColumn(_) => None,
            SpacerSchedule::TwoColumn(_) => Some(2),
            SpacerSchedule::Staircase(q) => Some(*q),
            SpacerSchedule::RepeatedStaircase { copies, q } => Some(copies * q),
        }
    }

    /// Expand to exactly `r` spacer counts.
    pub fn expand(&self, r: usize) -> Result<Vec<Nat>> {
        if let Some(got) = self.columns() {
            if got != r {
                return Err(Error::SpacerLengthMismatch { expected: r, got });
            }
        }
        Ok(match self {
            SpacerSchedule::Explicit(v) => v.clone(),
            SpacerSchedule::LastColumn(s) => {
                let mut v = vec![Nat::zero(); r];
                if let Some(last) = v.last_mut() {
                    *last = s.clone();
                }
                v
            }
            SpacerSchedule::TwoColumn(s) => vec![Nat::zero(), s.clone()],
            SpacerSchedule::Staircase(q) => (1..=*q as u64).map(Nat::from).collect(),
            SpacerSchedule::RepeatedStaircase { copies, q } => {
                (0..*copies).flat_map(|_| (1..=*q as u64).map(Nat::from)).collect()
            }
        })
    }
}

/// Whether the total measure diverges or stays under a declared bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MeasureMode {
    Infinite,
    Finite { bound: Rat },
}

/// The cut applied to stage `j`, together with the height and width of stage `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageRecord {
    pub j: usize,
    pub r: usize,
    pub spacers: SpacerSchedule,
    pub height: Nat,
    pub width: Rat,
}

/// Derived per-cut data: expanded spacers and the start offset of every copy.
#[derive(Clone, Debug)]
pub(crate) struct CutLayout {
    pub spacers: Vec<Nat>,
    /// `offsets[k]` is where copy `k` of the previous word starts; strictly increasing.
    pub offsets: Vec<Nat>,
}

impl CutLayout {
    fn new(height: &Nat, spacers: Vec<Nat>) -> Self {
        let mut offsets = Vec::with_capacity(spacers.len());
        let mut at = Nat::zero();
        for s in &spacers {
            offsets.push(at.clone());
            at += height;
            at += s;
        }
        CutLayout { spacers, offsets }
    }

    /// Index of the copy block (copy plus its spacer run) containing `pos`.
    pub fn block_of(&self, pos: &Nat) -> usize {
        self.offsets.partition_point(|o| o <= pos) - 1
    }
}

/// Label of a stage-`J` position relative to a reference stage `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Label {
    Level(Nat),
    Spacer,
}

/// A finite prefix of a rank-one construction. Immutable except for appending stages.
#[derive(Clone, Debug)]
pub struct ConstructionSchedule {
    mode: MeasureMode,
    records: Vec<StageRecord>,
    layouts: Vec<CutLayout>,
    heights: Vec<Nat>,
    widths: Vec<Rat>,
}

impl ConstructionSchedule {
    pub fn new(h1: Nat, w1: Rat, mode: MeasureMode) -> Result<Self> {
        if h1.is_zero() {
            return Err(Error::InvalidParameter("h1 must be positive".into()));
        }
        if w1 <= Rat::zero() {
            return Err(Error::InvalidParameter("w1 must be positive".into()));
        }
        let schedule = ConstructionSchedule {
            mode,
            records: Vec::new(),
            layouts: Vec::new(),
            heights: vec![h1],
            widths: vec![w1],
        };
        schedule.check_budget(1)?;
        Ok(schedule)
    }

    /// Append one cut; the schedule then has one more stage.
    pub fn advance_stage(&mut self, r: usize, spacers: SpacerSchedule) -> Result<&StageRecord> {
        if r < 2 {
            return Err(Error::CutCountTooSmall(r));
        }
        let expanded = spacers.expand(r)?;
        let j = self.stages();
        let h = self.heights[j - 1].clone();
        let w = self.widths[j - 1].clone();
        let spacer_total: Nat = expanded.iter().sum();
        let next_h = &h * r + &spacer_total;
        let next_w = &w / Rat::from_integer(r.into());

        if let MeasureMode::Finite { bound } = &self.mode {
            let measure = rat_from_nat(&next_h) * &next_w;
            if &measure > bound {
                return Err(Error::MeasureBudgetExceeded { stage: j + 1, measure, bound: bound.clone() });
            }
        }

        self.layouts.push(CutLayout::new(&h, expanded));
        self.records.push(StageRecord { j, r, spacers, height: h, width: w });
        self.heights.push(next_h);
        self.widths.push(next_w);
        Ok(self.records.last().expect("just pushed"))
    }

    fn check_budget(&self, stage: usize) -> Result<()> {
        if let MeasureMode::Finite { bound } = &self.mode {
            let measure = self.stage_measure(stage)?;
            if &measure > bound {
                return Err(Error::MeasureBudgetExceeded { stage, measure, bound: bound.clone() });
            }
        }
        Ok(())
    }

    /// Number of built stages `J` (stage 1 always exists).
    pub fn stages(&self) -> usize {
        self.heights.len()
    }

    pub fn mode(&self) -> &MeasureMode {
        &self.mode
    }

    pub fn records(&self) -> &[StageRecord] {
        &self.records
    }

    pub fn heights(&self) -> &[Nat] {
        &self.heights
    }

    pub fn height(&self, j: usize) -> Result<&Nat> {
        self.check_stage(j)?;
        Ok(&self.heights[j - 1])
    }

    pub fn width(&self, j: usize) -> Result<&Rat> {
        self.check_stage(j)?;
        Ok(&self.widths[j - 1])
    }

    /// Cut count applied at stage `j` (`j < J`).
    pub fn cut(&self, j: usize) -> Result<usize> {
        self.check_stage(j + 1)?;
        Ok(self.records[j - 1].r)
    }

    /// Expanded spacer counts of the cut at stage `j`.
    pub fn spacers(&self, j: usize) -> Result<&[Nat]> {
        self.check_stage(j + 1)?;
        Ok(&self.layouts[j - 1].spacers)
    }

    /// Start offsets of the copies of `W_j` inside `W_{j+1}`.
    pub fn copy_offsets(&self, j: usize) -> Result<&[Nat]> {
        self.check_stage(j + 1)?;
        Ok(&self.layouts[j - 1].offsets)
    }

    pub(crate) fn layout(&self, j: usize) -> &CutLayout {
        &self.layouts[j - 1]
    }

    pub(crate) fn check_stage(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.stages() {
            return Err(Error::StageNotBuilt(j));
        }
        Ok(())
    }

    /// `μ(X_J) = h_J · w_J`.
    pub fn stage_measure(&self, j: usize) -> Result<Rat> {
        Ok(rat_from_nat(self.height(j)?) * self.width(j)?)
    }

    /// Measure of spacer levels added by the cut at stage `j`.
    pub fn spacer_mass(&self, j: usize) -> Result<Rat> {
        let total: Nat = self.spacers(j)?.iter().sum();
        Ok(rat_from_nat(&total) * self.width(j + 1)?)
    }

    /// `∏_{i=n}^{J-1} r_i`: how many times each stage-`n` level occurs in `W_J`.
    pub fn copies_between(&self, n: usize, j: usize) -> Result<Nat> {
        if n > j {
            return Err(Error::StageOrder { reference: n, query: j });
        }
        self.check_stage(j)?;
        Ok((n..j).fold(Nat::one(), |acc, i| acc * self.records[i - 1].r))
    }

    /// Decode stage-`query` position `p` into a stage-`reference` level, one stage at a time.
    pub fn level_label(&self, query: usize, position: &Nat, reference: usize) -> Result<Label> {
        if reference > query {
            return Err(Error::StageOrder { reference, query });
        }
        self.check_stage(query)?;
        self.check_stage(reference)?;
        let h = &self.heights[query - 1];
        if position >= h {
            return Err(Error::PositionOutOfRange { position: position.clone(), stage: query, height: h.clone() });
        }
        let mut pos = position.clone();
        for j in (reference..query).rev() {
            let layout = &self.layouts[j - 1];
            let k = layout.block_of(&pos);
            pos -= &layout.offsets[k];
            if pos >= self.heights[j - 1] {
                return Ok(Label::Spacer);
            }
        }
        Ok(Label::Level(pos))
    }

    /// Full label word of stage `query` relative to stage `reference`, by direct
    /// concatenation. `None` marks a spacer.
    pub fn materialize_word(&self, query: usize, reference: usize, max_len: u64) -> Result<Vec<Option<u64>>> {
        if reference > query {
            return Err(Error::StageOrder { reference, query });
        }
        self.check_stage(query)?;
        self.check_stage(reference)?;
        let h = &self.heights[query - 1];
        if h > &Nat::from(max_len) {
            return Err(Error::GuardExceeded { stage: query, height: h.clone(), guard: max_len });
        }
        let base = self.heights[reference - 1].to_u64().expect("bounded by guard");
        let mut word: Vec<Option<u64>> = (0..base).map(Some).collect();
        for j in reference..query {
            let layout = &self.layouts[j - 1];
            let mut next = Vec::with_capacity(self.heights[j].to_usize().expect("bounded by guard"));
            for s in &layout.spacers {
                next.extend_from_slice(&word);
                let run = s.to_usize().expect("bounded by guard");
                next.extend(std::iter::repeat_n(None, run));
            }
            word = next;
        }
        Ok(word)
    }

    /// Re-check every recursion from the raw parameters.
    pub fn validate(&self) -> Result<()> {
        for (idx, rec) in self.records.iter().enumerate() {
            let expanded = rec.spacers.expand(rec.r)?;
            let total: Nat = expanded.iter().sum();
            let h = &self.heights[idx];
            if &rec.height != h || self.heights[idx + 1] != h * rec.r + total {
                return Err(Error::Config(format!("height recursion broken at stage {}", idx + 1)));
            }
            if self.widths[idx + 1] != &self.widths[idx] / Rat::from_integer(rec.r.into()) {
                return Err(Error::Config(format!("width recursion broken at stage {}", idx + 1)));
            }
        }
        for j in 1..=self.stages() {
            self.check_budget(j)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{nat, rat};

    fn one_step() -> ConstructionSchedule {
        let mut s = ConstructionSchedule::new(nat(1), rat(1, 1), MeasureMode::Infinite).unwrap();
        s.advance_stage(2, SpacerSchedule::Explicit(vec![nat(0), nat(3)])).unwrap();
        s
    }

    #[test]
    fn advance_stage_recursions() {
        let mut s = one_step();
        assert_eq!(s.height(2).unwrap(), &nat(5));
        assert_eq!(s.width(2).unwrap(), &rat(1, 2));
        s.advance_stage(3, SpacerSchedule::LastColumn(nat(85))).unwrap();
        assert_eq!(s.height(3).unwrap(), &nat(100));
        assert_eq!(s.spacers(2).unwrap(), &[nat(0), nat(0), nat(85)]);

        let mut t = ConstructionSchedule::new(nat(10), rat(1, 1), MeasureMode::Infinite).unwrap();
        t.advance_stage(4, SpacerSchedule::Staircase(4)).unwrap();
        assert_eq!(t.height(2).unwrap(), &nat(50));
    }

    #[test]
    fn advance_stage_errors() {
        let mut s = one_step();
        assert!(matches!(s.advance_stage(1, SpacerSchedule::LastColumn(nat(1))), Err(Error::CutCountTooSmall(1))));
        assert!(matches!(
            s.advance_stage(3, SpacerSchedule::TwoColumn(nat(1))),
            Err(Error::SpacerLengthMismatch { expected: 3, got: 2 })
        ));
        assert_eq!(s.stages(), 2);
    }

    #[test]
    fn spacer_expansions() {
        assert_eq!(
            SpacerSchedule::RepeatedStaircase { copies: 3, q: 2 }.expand(6).unwrap(),
            [1u64, 2, 1, 2, 1, 2].map(nat).to_vec()
        );
        assert_eq!(SpacerSchedule::LastColumn(nat(7)).expand(3).unwrap(), [0u64, 0, 7].map(nat).to_vec());
        assert_eq!(SpacerSchedule::Staircase(3).expand(3).unwrap(), [1u64, 2, 3].map(nat).to_vec());
    }

    #[test]
    fn level_labels_one_step() {
        let s = one_step();
        let labels: Vec<Label> = (0..5u64).map(|p| s.level_label(2, &nat(p), 1).unwrap()).collect();
        assert_eq!(
            labels,
            vec![Label::Level(nat(0)), Label::Level(nat(0)), Label::Spacer, Label::Spacer, Label::Spacer]
        );
        assert_eq!(s.level_label(2, &nat(3), 2).unwrap(), Label::Level(nat(3)));
        assert!(matches!(s.level_label(2, &nat(5), 1), Err(Error::PositionOutOfRange { .. })));
        assert!(matches!(s.level_label(1, &nat(0), 2), Err(Error::StageOrder { .. })));
    }

    #[test]
    fn level_label_with_leading_spacer() {
        let mut s = ConstructionSchedule::new(nat(2), rat(1, 1), MeasureMode::Infinite).unwrap();
        s.advance_stage(2, SpacerSchedule::Explicit(vec![nat(1), nat(0)])).unwrap();
        // materialized independently: W_2 = (0, 1, s, 0, 1)
        let word = s.materialize_word(2, 1, 100).unwrap();
        assert_eq!(word, vec![Some(0), Some(1), None, Some(0), Some(1)]);
        assert_eq!(s.level_label(2, &nat(3), 1).unwrap(), Label::Level(nat(0)));
    }

    #[test]
    fn materialize_two_steps() {
        let mut s = one_step();
        s.advance_stage(2, SpacerSchedule::Explicit(vec![nat(1), nat(0)])).unwrap();
        assert_eq!(s.height(3).unwrap(), &nat(11));
        let word = s.materialize_word(3, 1, 100).unwrap();
        let expected = vec![Some(0), Some(0), None, None, None, None, Some(0), Some(0), None, None, None];
        assert_eq!(word, expected);
        let identity = s.materialize_word(2, 2, 100).unwrap();
        assert_eq!(identity, (0..5).map(Some).collect::<Vec<_>>());
        assert!(matches!(s.materialize_word(3, 1, 10), Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn stage_measures() {
        let s = one_step();
        assert_eq!(s.stage_measure(1).unwrap(), rat(1, 1));
        assert_eq!(s.stage_measure(2).unwrap(), rat(5, 2));
        assert_eq!(s.spacer_mass(1).unwrap(), rat(3, 2));
    }

    #[test]
    fn finite_budget_enforced() {
        let mode = MeasureMode::Finite { bound: rat(2, 1) };
        let mut s = ConstructionSchedule::new(nat(1), rat(1, 1), mode).unwrap();
        s.advance_stage(2, SpacerSchedule::TwoColumn(nat(1))).unwrap();
        assert_eq!(s.stage_measure(2).unwrap(), rat(3, 2));
        let err = s.advance_stage(2, SpacerSchedule::TwoColumn(nat(5))).unwrap_err();
        assert!(matches!(err, Error::MeasureBudgetExceeded { stage: 3, .. }));
        assert_eq!(s.stages(), 2);
    }
}
