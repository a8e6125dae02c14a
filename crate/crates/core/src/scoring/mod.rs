//! Scoring formulas.
//!
//! Everything here is a pure function of its arguments. Choice rules live in
//! [`choice`], interval rules in [`interval`]; [`rules`] wraps them behind
//! small traits so the properness oracles can treat any rule as a handle.
//!
//! Orientation: the quadratic and Practical rules are higher-is-better, while
//! [`brier_score`] and [`log_score`] keep their textbook lower-is-better form.
//! The rule handles in [`rules`] flip the latter two so every handle is
//! higher-is-better.

mod choice;
mod interval;
mod params;
pub mod rules;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use choice::{
    brier_score, clamp_probability, log_score, practical_log_choice_score, practical_score,
    proper_from_convex, quadratic_score, OutcomeIndicator, ProbabilityVector,
};
pub use interval::{
    dist_score_final, dist_score_raw, generic_interval_score, interval_kernel,
    linear_interval_score, log_interval_score, mag_score_final, mag_score_raw, IntervalForecast,
};
pub use params::{ChoiceParams, IntervalParams, DEFAULT_BETA, DEFAULT_S_MIN};

/// Tolerance used when checking that probability vectors sum to one.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("dimension mismatch: {probabilities} probabilities vs {outcomes} outcomes")]
    DimensionMismatch { probabilities: usize, outcomes: usize },
    #[error("invalid probability vector: {0}")]
    InvalidProbabilityVector(String),
    #[error("invalid outcome indicator: {0}")]
    InvalidOutcome(String),
    #[error("probability {value} outside [{min}, {max}]")]
    ProbabilityOutOfRange { value: f64, min: f64, max: f64 },
    #[error("zero probability on the realized outcome gives an infinite score")]
    InfiniteScore,
    #[error("invalid scoring parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate normalizer: S(p_max, 1) - S(p_rand, 1) = {0} must be positive")]
    DegenerateNormalizer(f64),
    #[error("invalid interval: {0}")]
    InvalidInterval(String),
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("{what} must be finite, got {value}")]
    NonFinite { what: &'static str, value: f64 },
}

/// Identifies which formula produced a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleId {
    Quadratic,
    Brier,
    Log,
    PracticalLog,
    LinearInterval,
    LogInterval,
    DistanceRaw,
    Distance,
    MagnitudeRaw,
    Magnitude,
}

impl RuleId {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::Quadratic => "quadratic",
            RuleId::Brier => "brier",
            RuleId::Log => "log",
            RuleId::PracticalLog => "practical_log",
            RuleId::LinearInterval => "linear_interval",
            RuleId::LogInterval => "log_interval",
            RuleId::DistanceRaw => "distance_raw",
            RuleId::Distance => "distance",
            RuleId::MagnitudeRaw => "magnitude_raw",
            RuleId::Magnitude => "magnitude",
        }
    }
}

impl std::fmt::Display for RuleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where the points of an interval score came from, in points.
///
/// Outside the interval `distance_penalty` is the miss term and
/// `width_penalty` the width term, both subtracted. Inside, `distance_penalty`
/// is the loss from landing off-center and `width_penalty` the loss from the
/// interval's width, so `s_max - distance_penalty - width_penalty == points`
/// (before flooring).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreComponents {
    pub width_penalty: f64,
    pub distance_penalty: f64,
    /// True when the `s_min` floor replaced the raw value.
    pub floored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreResult {
    pub points: f64,
    pub rule_id: RuleId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<ScoreComponents>,
}

impl ScoreResult {
    pub fn new(points: f64, rule_id: RuleId) -> Self {
        Self { points, rule_id, components: None }
    }

    /// Nearest integer, halves rounded away from zero.
    pub fn display_points(&self) -> i64 {
        display_round(self.points)
    }
}

/// Rounds points for presentation: nearest integer, half away from zero.
pub fn display_round(points: f64) -> i64 {
    points.round() as i64
}

pub(crate) fn check_finite(what: &'static str, value: f64) -> Result<(), ScoreError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ScoreError::NonFinite { what, value })
    }
}
