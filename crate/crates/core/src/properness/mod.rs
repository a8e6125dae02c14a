//! Brute-force oracles for properness.
//!
//! Choice rules are checked by scanning a report grid for the maximizer of
//! the expected score under each believed probability. Interval rules are
//! checked by comparing the expected score of the honest equal-tail interval
//! with the best interval on an `(L, U)` grid; the difference is the
//! incentive gap, zero for proper rules.

mod belief;
pub mod checks;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scoring::rules::{BinaryRule, IntervalScoringRule};
use crate::scoring::{IntervalForecast, ScoreError};

pub use belief::{BeliefDistribution, QUADRATURE_POINTS};
pub use report::{render_gap_table, render_properness_table};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropernessError {
    #[error("invalid belief grid: {0}")]
    InvalidGrid(String),
    #[error("invalid belief: {0}")]
    InvalidBelief(String),
    #[error("quantile level {0} outside [0, 1]")]
    InvalidLevel(f64),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("empty search grid")]
    EmptyGrid,
    #[error(transparent)]
    Score(#[from] ScoreError),
}

/// Slack allowed on top of one report step when comparing grid points that
/// were produced by floating-point stepping.
const GRID_SLACK: f64 = 1e-9;

/// Believed probabilities to test and the (finer) report grid to scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefGrid {
    believed: Vec<f64>,
    reported: Vec<f64>,
}

fn max_step(points: &[f64]) -> f64 {
    points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

fn steps(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| if i == n { hi } else { lo + i as f64 * step }).collect()
}

impl BeliefGrid {
    pub fn new(believed: Vec<f64>, reported: Vec<f64>) -> Result<Self, PropernessError> {
        for (name, grid) in [("believed", &believed), ("reported", &reported)] {
            if grid.is_empty() {
                return Err(PropernessError::InvalidGrid(format!("{name} grid is empty")));
            }
            if grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(PropernessError::InvalidGrid(format!("{name} grid leaves [0, 1]")));
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(PropernessError::InvalidGrid(format!("{name} grid is not strictly ascending")));
            }
        }
        if believed.len() > 1 && max_step(&reported) > max_step(&believed) + GRID_SLACK {
            return Err(PropernessError::InvalidGrid("report grid is coarser than the belief grid".into()));
        }
        Ok(Self { believed, reported })
    }

    /// Evenly spaced grids covering `[lo, hi]`, both endpoints included.
    pub fn span(lo: f64, hi: f64, believed_step: f64, report_step: f64) -> Result<Self, PropernessError> {
        if !(lo < hi && believed_step > 0.0 && report_step > 0.0) {
            return Err(PropernessError::InvalidGrid(format!(
                "need lo < hi and positive steps, got [{lo}, {hi}] steps {believed_step}/{report_step}"
            )));
        }
        Self::new(steps(lo, hi, believed_step), steps(lo, hi, report_step))
    }

    /// Grids confined to `[lo, hi]`, as the Practical rules require.
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        let inside = |g: &[f64]| g.iter().all(|p| *p >= lo - GRID_SLACK && *p <= hi + GRID_SLACK);
        inside(&self.believed) && inside(&self.reported)
    }

    pub fn believed(&self) -> &[f64] {
        &self.believed
    }

    pub fn reported(&self) -> &[f64] {
        &self.reported
    }

    pub fn report_step(&self) -> f64 {
        max_step(&self.reported)
    }
}

/// `believed · S(reported, correct) + (1 − believed) · S(reported, incorrect)`.
pub fn expected_choice_score<R>(rule: &R, believed: f64, reported: f64) -> Result<f64, PropernessError>
where
    R: BinaryRule + ?Sized,
{
    for p in [believed, reported] {
        if !(0.0..=1.0).contains(&p) {
            return Err(PropernessError::InvalidProbability(p));
        }
    }
    Ok(expected_unchecked(rule, believed, reported))
}

fn expected_unchecked<R: BinaryRule + ?Sized>(rule: &R, believed: f64, reported: f64) -> f64 {
    // 0 · (−∞) would poison the sum at the edges of [0, 1].
    let term = |weight: f64, correct: bool| if weight == 0.0 { 0.0 } else { weight * rule.score(reported, correct) };
    term(believed, true) + term(1.0 - believed, false)
}

/// Index of the first maximum; NaN values never win.
fn first_argmax(values: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropernessRow {
    pub believed: f64,
    pub argmax: f64,
    pub deviation: f64,
    /// Expected score of the grid maximizer minus that of the honest report.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropernessReport {
    pub rule: String,
    pub report_step: f64,
    pub max_argmax_deviation: f64,
    pub worst_belief: f64,
    pub incentive_gap: f64,
    pub passed: bool,
    pub rows: Vec<PropernessRow>,
}

/// For each believed `p`, finds the report maximizing the expected score and
/// checks it lies within one report step of `p`.
pub fn verify_choice_properness<R>(name: &str, rule: &R, grid: &BeliefGrid) -> PropernessReport
where
    R: BinaryRule + ?Sized,
{
    let step = grid.report_step();
    let rows: Vec<PropernessRow> = grid
        .believed
        .iter()
        .map(|&p| {
            let best = first_argmax(grid.reported.iter().map(|&q| expected_unchecked(rule, p, q)));
            let honest = expected_unchecked(rule, p, p);
            match best {
                Some((i, value)) => PropernessRow {
                    believed: p,
                    argmax: grid.reported[i],
                    deviation: (grid.reported[i] - p).abs(),
                    gap: (value - honest).max(0.0),
                },
                None => PropernessRow { believed: p, argmax: f64::NAN, deviation: f64::INFINITY, gap: f64::NAN },
            }
        })
        .collect();
    let worst = rows
        .iter()
        .fold(None::<&PropernessRow>, |acc, r| match acc {
            Some(a) if a.deviation >= r.deviation => Some(a),
            _ => Some(r),
        })
        .expect("belief grid is never empty");
    let max_dev = worst.deviation;
    PropernessReport {
        rule: name.to_string(),
        report_step: step,
        max_argmax_deviation: max_dev,
        worst_belief: worst.believed,
        incentive_gap: rows.iter().map(|r| r.gap).fold(0.0, f64::max),
        passed: max_dev <= step + GRID_SLACK,
        rows,
    }
}

/// Expected score of `forecast` when the truth is drawn from `belief`.
pub fn expected_interval_score<R>(
    rule: &R,
    belief: &BeliefDistribution,
    forecast: &IntervalForecast,
) -> Result<f64, PropernessError>
where
    R: IntervalScoringRule + ?Sized,
{
    belief.validate()?;
    expectation(rule, &belief.nodes(), forecast)
}

fn expectation<R>(rule: &R, nodes: &[(f64, f64)], forecast: &IntervalForecast) -> Result<f64, PropernessError>
where
    R: IntervalScoringRule + ?Sized,
{
    let mut total = 0.0;
    for &(x, w) in nodes {
        total += w * rule.score(x, forecast)?;
    }
    Ok(total)
}

/// Equal-tail `β` interval `[F⁻¹((1−β)/2), F⁻¹(1 − (1−β)/2)]`.
pub fn honest_interval(belief: &BeliefDistribution, beta: f64) -> Result<IntervalForecast, PropernessError> {
    belief.validate()?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(ScoreError::InvalidInterval(format!("beta must be in (0, 1), got {beta}")).into());
    }
    let tail = (1.0 - beta) / 2.0;
    Ok(IntervalForecast::new(belief.quantile(tail)?, belief.quantile(1.0 - tail)?, beta)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// Candidate bounds for the interval search: `steps + 1` points from `lo` to
/// `hi`, shared by `L` and `U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub spacing: Spacing,
}

impl SearchGrid {
    pub fn linear(lo: f64, hi: f64, steps: usize) -> Self {
        Self { lo, hi, steps, spacing: Spacing::Linear }
    }

    pub fn log(lo: f64, hi: f64, steps: usize) -> Self {
        Self { lo, hi, steps, spacing: Spacing::Log }
    }

    pub fn points(&self) -> Result<Vec<f64>, PropernessError> {
        if self.steps == 0 || !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(PropernessError::EmptyGrid);
        }
        let n = self.steps as f64;
        Ok(match self.spacing {
            Spacing::Linear => (0..=self.steps).map(|i| self.lo + (self.hi - self.lo) * i as f64 / n).collect(),
            Spacing::Log => {
                if self.lo <= 0.0 {
                    return Err(PropernessError::InvalidGrid("log grid needs a positive lower end".into()));
                }
                let (a, b) = (self.lo.ln(), self.hi.ln());
                (0..=self.steps).map(|i| (a + (b - a) * i as f64 / n).exp()).collect()
            }
        })
    }
}

/// Exhaustive search over `L ≤ U` on the grid. Ties go to the smallest `L`,
/// then the smallest `U`. Pairs the rule cannot score as an interval (e.g.
/// zero width for the raw rules) are skipped.
pub fn best_interval<R>(
    rule: &R,
    belief: &BeliefDistribution,
    beta: f64,
    grid: &SearchGrid,
) -> Result<(IntervalForecast, f64), PropernessError>
where
    R: IntervalScoringRule + ?Sized,
{
    belief.validate()?;
    let points = grid.points()?;
    let nodes = belief.nodes();
    let mut best: Option<(IntervalForecast, f64)> = None;
    for (i, &lower) in points.iter().enumerate() {
        for &upper in &points[i..] {
            let forecast = IntervalForecast::new(lower, upper, beta)?;
            let value = match expectation(rule, &nodes, &forecast) {
                Ok(v) => v,
                Err(PropernessError::Score(ScoreError::InvalidInterval(_))) => continue,
                Err(e) => return Err(e),
            };
            if best.is_none_or(|(_, b)| value > b) {
                best = Some((forecast, value));
            }
        }
    }
    best.ok_or(PropernessError::EmptyGrid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub rule: String,
    pub belief: BeliefDistribution,
    pub honest: IntervalForecast,
    pub honest_value: f64,
    pub best: IntervalForecast,
    pub best_value: f64,
    /// `best_value − honest_value`; negative values are grid/quadrature noise.
    pub gap: f64,
    /// Estimated quadrature error of `honest_value`.
    pub quadrature_tolerance: f64,
}

impl GapReport {
    /// Gap within twice the quadrature tolerance.
    pub fn is_negligible(&self) -> bool {
        self.gap <= 2.0 * self.quadrature_tolerance
    }

    /// Gap above ten times the quadrature tolerance.
    pub fn is_significant(&self) -> bool {
        self.gap > 10.0 * self.quadrature_tolerance
    }
}

/// Estimated quadrature error of an expectation: the change when halving the
/// resolution, floored at `1e-12` relative so exact agreement still leaves a
/// usable tolerance. Discrete beliefs are summed exactly.
pub fn quadrature_tolerance<R>(
    rule: &R,
    belief: &BeliefDistribution,
    forecast: &IntervalForecast,
) -> Result<f64, PropernessError>
where
    R: IntervalScoringRule + ?Sized,
{
    let fine = expectation(rule, &belief.nodes(), forecast)?;
    let floor = 1e-12 * fine.abs().max(1.0);
    if belief.is_discrete() {
        return Ok(floor);
    }
    let coarse = expectation(rule, &belief.nodes_with(QUADRATURE_POINTS / 2), forecast)?;
    Ok((fine - coarse).abs().max(floor))
}

/// Best grid expectation minus the honest equal-tail interval's expectation.
pub fn incentive_gap<R>(
    name: &str,
    rule: &R,
    belief: &BeliefDistribution,
    beta: f64,
    grid: &SearchGrid,
) -> Result<GapReport, PropernessError>
where
    R: IntervalScoringRule + ?Sized,
{
    let honest = honest_interval(belief, beta)?;
    let honest_value = expected_interval_score(rule, belief, &honest)?;
    let tolerance = quadrature_tolerance(rule, belief, &honest)?;
    let (best, best_value) = best_interval(rule, belief, beta, grid)?;
    Ok(GapReport {
        rule: name.to_string(),
        belief: belief.clone(),
        honest,
        honest_value,
        best,
        best_value,
        gap: best_value - honest_value,
        quadrature_tolerance: tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::rules::{IntervalRule, LogRule, Practical, PracticalLog, QuadraticRule};
    use crate::scoring::{ChoiceParams, IntervalParams};

    fn practical_grid() -> BeliefGrid {
        BeliefGrid::span(0.5, 0.99, 0.01, 0.001).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(BeliefGrid::new(vec![0.5, 0.4], vec![0.4, 0.5]).is_err());
        assert!(BeliefGrid::new(vec![0.5, 0.6], vec![0.5, 0.7]).is_err());
        assert!(BeliefGrid::new(vec![0.5, 1.2], vec![0.5, 0.6]).is_err());
        let g = practical_grid();
        assert_eq!(g.believed().len(), 50);
        assert_eq!(g.reported().len(), 491);
        assert_eq!(*g.reported().last().unwrap(), 0.99);
        assert!(g.within(0.5, 0.99));
        assert!((g.report_step() - 0.001).abs() < 1e-9);
    }

    #[test]
    fn expected_choice_examples() {
        let rule = PracticalLog::new(ChoiceParams::binary()).unwrap();
        assert_eq!(expected_choice_score(&rule, 0.5, 0.5).unwrap(), 0.0);
        assert!((expected_choice_score(&rule, 1.0, 0.99).unwrap() - 10.0).abs() < 1e-12);
        assert!(expected_choice_score(&rule, 1.2, 0.5).is_err());
        let grid = BeliefGrid::span(0.5, 0.99, 0.01, 0.001).unwrap();
        let (i, _) =
            first_argmax(grid.reported().iter().map(|&q| expected_choice_score(&rule, 0.7, q).unwrap())).unwrap();
        assert!((grid.reported()[i] - 0.7).abs() < 1e-9);
    }

    #[test]
    fn practical_log_is_proper_on_its_range() {
        let rule = PracticalLog::new(ChoiceParams::binary()).unwrap();
        let report = verify_choice_properness("practical_log", &rule, &practical_grid());
        assert!(report.passed, "{report:?}");
        assert!(report.max_argmax_deviation <= 0.001 + 1e-9);
    }

    #[test]
    fn practical_transform_of_log_is_proper_for_four_options() {
        let params = ChoiceParams::with_p_rand(0.25).unwrap();
        let rule = Practical::new(LogRule, params).unwrap();
        let grid = BeliefGrid::span(0.25, 0.99, 0.01, 0.001).unwrap();
        assert!(verify_choice_properness("practical(log)", &rule, &grid).passed);
    }

    #[test]
    fn broken_rule_fails() {
        let params = ChoiceParams::binary();
        let rule = PracticalLog::new(params).unwrap();
        let broken = move |p: f64, correct: bool| {
            let s = rule.score(p, correct);
            if correct {
                s
            } else {
                2.0 * s
            }
        };
        let report = verify_choice_properness("broken", &broken, &practical_grid());
        assert!(!report.passed);
        assert!(report.max_argmax_deviation > 0.001);
        assert!(report.incentive_gap > 0.0);
    }

    #[test]
    fn quadratic_is_proper_unclamped() {
        let grid = BeliefGrid::span(0.01, 0.99, 0.01, 0.001).unwrap();
        assert!(verify_choice_properness("quadratic", &QuadraticRule, &grid).passed);
    }

    #[test]
    fn honest_interval_examples() {
        let u = BeliefDistribution::uniform(0.0, 100.0).unwrap();
        let h = honest_interval(&u, 0.9).unwrap();
        assert!((h.lower - 5.0).abs() < 1e-12 && (h.upper - 95.0).abs() < 1e-12);
        let point = BeliefDistribution::point_mass(7.0).unwrap();
        let h = honest_interval(&point, 0.9).unwrap();
        assert_eq!((h.lower, h.upper), (7.0, 7.0));
        let two = BeliefDistribution::discrete(vec![(0.0, 0.5), (10.0, 0.5)]).unwrap();
        let h = honest_interval(&two, 0.9).unwrap();
        assert_eq!((h.lower, h.upper), (0.0, 10.0));
        assert!(honest_interval(&u, 1.0).is_err());
    }

    #[test]
    fn expected_interval_examples() {
        let dist = IntervalRule::Distance(IntervalParams::distance());
        let f = IntervalForecast::new(40.0, 60.0, 0.9).unwrap();
        let point = BeliefDistribution::point_mass(50.0).unwrap();
        let direct = dist.score(50.0, &f).unwrap();
        assert_eq!(expected_interval_score(&dist, &point, &f).unwrap(), direct);

        let linear = IntervalRule::Linear(IntervalParams::distance());
        let inside = BeliefDistribution::uniform(40.0, 60.0).unwrap();
        let v = expected_interval_score(&linear, &inside, &f).unwrap();
        assert!((v + 0.05 * 20.0 / 100.0).abs() < 1e-12);

        // Regression fixture from an independent numpy midpoint-rule oracle.
        let u = BeliefDistribution::uniform(0.0, 100.0).unwrap();
        let honest = IntervalForecast::new(5.0, 95.0, 0.9).unwrap();
        let v = expected_interval_score(&dist, &u, &honest).unwrap();
        assert!((v - 3.1284222199657488).abs() < 1e-9, "{v}");
    }

    #[test]
    fn magnitude_rule_rejects_non_positive_support() {
        let mag = IntervalRule::Magnitude(IntervalParams::magnitude());
        let belief = BeliefDistribution::uniform(0.0, 10.0).unwrap();
        let belief_with_zero = BeliefDistribution::discrete(vec![(0.0, 0.5), (5.0, 0.5)]).unwrap();
        let f = IntervalForecast::new(1.0, 5.0, 0.9).unwrap();
        assert!(expected_interval_score(&mag, &belief, &f).is_ok());
        assert!(expected_interval_score(&mag, &belief_with_zero, &f).is_err());
    }

    #[test]
    fn best_interval_point_mass_collapses() {
        let dist = IntervalRule::Distance(IntervalParams::distance());
        let belief = BeliefDistribution::point_mass(50.0).unwrap();
        let (best, value) = best_interval(&dist, &belief, 0.9, &SearchGrid::linear(0.0, 100.0, 40)).unwrap();
        assert_eq!((best.lower, best.upper), (50.0, 50.0));
        assert_eq!(value, dist.score(50.0, &best).unwrap());
    }

    #[test]
    fn best_interval_for_proper_rule_is_honest() {
        let linear = IntervalRule::Linear(IntervalParams::distance());
        let belief = BeliefDistribution::uniform(0.0, 100.0).unwrap();
        let (best, _) = best_interval(&linear, &belief, 0.9, &SearchGrid::linear(0.0, 100.0, 40)).unwrap();
        assert!((best.lower - 5.0).abs() < 1e-9 && (best.upper - 95.0).abs() < 1e-9, "{best:?}");
    }

    #[test]
    fn best_interval_ties_prefer_smallest_bounds() {
        let flat = |_: f64, _: &IntervalForecast| Ok(1.0);
        let belief = BeliefDistribution::point_mass(3.0).unwrap();
        let (best, _) = best_interval(&flat, &belief, 0.9, &SearchGrid::linear(0.0, 10.0, 10)).unwrap();
        assert_eq!((best.lower, best.upper), (0.0, 0.0));
    }

    #[test]
    fn raw_rules_skip_zero_width_pairs() {
        let raw = IntervalRule::DistanceRaw(IntervalParams::distance());
        let belief = BeliefDistribution::point_mass(50.0).unwrap();
        let (best, _) = best_interval(&raw, &belief, 0.9, &SearchGrid::linear(0.0, 100.0, 20)).unwrap();
        assert!(best.upper > best.lower);
    }

    #[test]
    fn empty_grid_is_an_error() {
        let linear = IntervalRule::Linear(IntervalParams::distance());
        let belief = BeliefDistribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(
            best_interval(&linear, &belief, 0.9, &SearchGrid::linear(0.0, 1.0, 0)).unwrap_err(),
            PropernessError::EmptyGrid
        );
    }

    #[test]
    fn gap_separates_proper_from_distance_rule() {
        let belief = BeliefDistribution::uniform(0.0, 100.0).unwrap();
        let grid = SearchGrid::linear(-25.0, 125.0, 40);
        let linear = incentive_gap("linear", &IntervalRule::Linear(IntervalParams::distance()), &belief, 0.9, &grid)
            .unwrap();
        assert!(linear.is_negligible(), "{linear:?}");
        let dist = incentive_gap("distance", &IntervalRule::Distance(IntervalParams::distance()), &belief, 0.9, &grid)
            .unwrap();
        assert!(dist.is_significant(), "{dist:?}");
    }
}
