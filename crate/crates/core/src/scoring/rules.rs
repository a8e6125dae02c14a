//! Rule handles: uniform, higher-is-better views of the scoring formulas so
//! they can be passed around as values (to the Practical transform, to the
//! properness oracles, to the CLI).

use serde::{Deserialize, Serialize};

use super::{
    clamp_probability, dist_score_final, dist_score_raw, linear_interval_score, log_interval_score,
    mag_score_final, mag_score_raw, practical_log_choice_score, practical_score, ChoiceParams, IntervalForecast,
    IntervalParams, RuleId, ScoreError,
};

/// A scoring rule for a binary "was my answer right" prediction, where `p` is
/// the probability put on the answer being correct. Higher is better.
pub trait BinaryRule {
    fn score(&self, p: f64, correct: bool) -> f64;
}

impl<F> BinaryRule for F
where
    F: Fn(f64, bool) -> f64,
{
    fn score(&self, p: f64, correct: bool) -> f64 {
        self(p, correct)
    }
}

/// Quadratic rule on the vector `(p, 1 − p)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuadraticRule;

impl BinaryRule for QuadraticRule {
    fn score(&self, p: f64, correct: bool) -> f64 {
        let q = 1.0 - p;
        if correct {
            p * (2.0 - p) - q * q
        } else {
            q * (2.0 - q) - p * p
        }
    }
}

/// Negated Brier score, so higher is better.
#[derive(Debug, Clone, Copy, Default)]
pub struct BrierRule;

impl BinaryRule for BrierRule {
    fn score(&self, p: f64, correct: bool) -> f64 {
        let miss = if correct { 1.0 - p } else { p };
        -2.0 * miss * miss
    }
}

/// Negated log score: `ln p` when correct, `ln(1 − p)` when not.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogRule;

impl BinaryRule for LogRule {
    fn score(&self, p: f64, correct: bool) -> f64 {
        if correct {
            p.ln()
        } else {
            (1.0 - p).ln()
        }
    }
}

/// Rule built from a convex `f` and its derivative (see
/// [`super::proper_from_convex`]).
#[derive(Clone, Copy)]
pub struct ConvexRule<F, G> {
    pub f: F,
    pub f_prime: G,
}

impl<F, G> ConvexRule<F, G> {
    pub fn new(f: F, f_prime: G) -> Self {
        Self { f, f_prime }
    }
}

impl<F, G> BinaryRule for ConvexRule<F, G>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    fn score(&self, p: f64, correct: bool) -> f64 {
        let slope = (self.f_prime)(p);
        if correct {
            (self.f)(p) + (1.0 - p) * slope
        } else {
            (self.f)(p) - p * slope
        }
    }
}

/// Practical transform of any base rule. Reports are clamped into
/// `[p_rand, p_max]` before scoring, matching the engine's clamping policy.
#[derive(Debug, Clone, Copy)]
pub struct Practical<R> {
    pub base: R,
    pub params: ChoiceParams,
}

impl<R: BinaryRule> Practical<R> {
    pub fn new(base: R, params: ChoiceParams) -> Result<Self, ScoreError> {
        params.validate()?;
        // Surface a degenerate normalizer now rather than as NaN scores later.
        practical_score(&base, &params, params.p_max, true)?;
        Ok(Self { base, params })
    }
}

impl<R: BinaryRule> BinaryRule for Practical<R> {
    fn score(&self, p: f64, correct: bool) -> f64 {
        clamp_probability(p, &self.params)
            .and_then(|p| practical_score(&self.base, &self.params, p, correct))
            .unwrap_or(f64::NAN)
    }
}

/// Closed-form Practical log rule.
#[derive(Debug, Clone, Copy)]
pub struct PracticalLog {
    pub params: ChoiceParams,
}

impl PracticalLog {
    pub fn new(params: ChoiceParams) -> Result<Self, ScoreError> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl BinaryRule for PracticalLog {
    fn score(&self, p: f64, correct: bool) -> f64 {
        practical_log_choice_score(p, correct, &self.params).map(|s| s.points).unwrap_or(f64::NAN)
    }
}

/// A scoring rule for interval forecasts. Higher is better.
pub trait IntervalScoringRule {
    fn score(&self, x: f64, forecast: &IntervalForecast) -> Result<f64, ScoreError>;
}

impl<F> IntervalScoringRule for F
where
    F: Fn(f64, &IntervalForecast) -> Result<f64, ScoreError>,
{
    fn score(&self, x: f64, forecast: &IntervalForecast) -> Result<f64, ScoreError> {
        self(x, forecast)
    }
}

/// The interval rules this crate implements, bundled with their parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "params", rename_all = "snake_case")]
pub enum IntervalRule {
    Linear(IntervalParams),
    Log(IntervalParams),
    DistanceRaw(IntervalParams),
    Distance(IntervalParams),
    MagnitudeRaw(IntervalParams),
    Magnitude(IntervalParams),
}

impl IntervalRule {
    pub fn params(&self) -> &IntervalParams {
        match self {
            IntervalRule::Linear(p)
            | IntervalRule::Log(p)
            | IntervalRule::DistanceRaw(p)
            | IntervalRule::Distance(p)
            | IntervalRule::MagnitudeRaw(p)
            | IntervalRule::Magnitude(p) => p,
        }
    }

    pub fn rule_id(&self) -> RuleId {
        match self {
            IntervalRule::Linear(_) => RuleId::LinearInterval,
            IntervalRule::Log(_) => RuleId::LogInterval,
            IntervalRule::DistanceRaw(_) => RuleId::DistanceRaw,
            IntervalRule::Distance(_) => RuleId::Distance,
            IntervalRule::MagnitudeRaw(_) => RuleId::MagnitudeRaw,
            IntervalRule::Magnitude(_) => RuleId::Magnitude,
        }
    }

    /// Whether the rule is a proper scoring rule for equal-tail intervals.
    pub fn is_proper(&self) -> bool {
        matches!(self, IntervalRule::Linear(_) | IntervalRule::Log(_))
    }

    /// Whether the rule is only defined for positive values.
    pub fn requires_positive(&self) -> bool {
        matches!(self, IntervalRule::Log(_) | IntervalRule::MagnitudeRaw(_) | IntervalRule::Magnitude(_))
    }
}

impl IntervalScoringRule for IntervalRule {
    fn score(&self, x: f64, f: &IntervalForecast) -> Result<f64, ScoreError> {
        match self {
            IntervalRule::Linear(p) => linear_interval_score(x, f, p),
            IntervalRule::Log(p) => log_interval_score(x, f, p),
            IntervalRule::DistanceRaw(p) => dist_score_raw(x, f, p),
            IntervalRule::Distance(p) => dist_score_final(x, f, p).map(|s| s.points),
            IntervalRule::MagnitudeRaw(p) => mag_score_raw(x, f, p),
            IntervalRule::Magnitude(p) => mag_score_final(x, f, p).map(|s| s.points),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{brier_score, log_score, quadratic_score, OutcomeIndicator, ProbabilityVector};

    #[test]
    fn binary_handles_match_vector_rules() {
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let v = ProbabilityVector::binary(p).unwrap();
            for (idx, correct) in [(0, true), (1, false)] {
                let e = OutcomeIndicator::from_index(2, idx).unwrap();
                assert!((QuadraticRule.score(p, correct) - quadratic_score(&v, &e).unwrap()).abs() < 1e-12);
                assert!((BrierRule.score(p, correct) + brier_score(&v, &e).unwrap()).abs() < 1e-12);
                assert!((LogRule.score(p, correct) + log_score(&v, &e).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn convex_square_is_affine_quadratic() {
        // f(x) = x² gives S(p,1) = 2p − p² and S(p,0) = −p²; the quadratic
        // rule is 2S − 1 when correct and 2S + 1 when not.
        let rule = ConvexRule::new(|x: f64| x * x, |x: f64| 2.0 * x);
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            assert!((2.0 * rule.score(p, true) - 1.0 - QuadraticRule.score(p, true)).abs() < 1e-12);
            assert!((2.0 * rule.score(p, false) + 1.0 - QuadraticRule.score(p, false)).abs() < 1e-12);
        }
    }

    #[test]
    fn practical_handle_clamps() {
        let rule = Practical::new(LogRule, ChoiceParams::binary()).unwrap();
        assert_eq!(rule.score(0.1, true), 0.0);
        assert!((rule.score(1.0, true) - 10.0).abs() < 1e-12);
        assert!(Practical::new(|_: f64, _: bool| 0.0, ChoiceParams::binary()).is_err());
    }

    #[test]
    fn interval_rule_dispatch() {
        let f = IntervalForecast::new(10.0, 1000.0, 0.9).unwrap();
        let mag = IntervalRule::MagnitudeRaw(IntervalParams::magnitude());
        assert!((mag.score(100.0, &f).unwrap() - 5.0).abs() < 1e-9);
        assert!(IntervalRule::Linear(IntervalParams::distance()).is_proper());
        assert!(!IntervalRule::Distance(IntervalParams::distance()).is_proper());
        assert!(IntervalRule::Magnitude(IntervalParams::magnitude()).requires_positive());
        let json = serde_json::to_string(&IntervalRule::Distance(IntervalParams::distance())).unwrap();
        assert!(json.contains("\"rule\":\"distance\""));
    }
}
