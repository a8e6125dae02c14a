use serde::{Deserialize, Serialize};

use super::ScoreError;

/// Point floor shared by every rule that needs one.
///
/// This is the Practical log rule's score for a wrong true/false answer at the
/// maximum confidence 0.99 with `s_max = 10`, i.e. `-10 ln(50) / ln(99/50)`.
pub const DEFAULT_S_MIN: f64 = -57.26893683880667;

/// Coverage level used for interval questions that don't set one.
pub const DEFAULT_BETA: f64 = 0.9;

/// Constants of the Practical choice rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChoiceParams {
    pub s_max: f64,
    pub p_max: f64,
    pub p_rand: f64,
}

impl ChoiceParams {
    pub const DEFAULT_S_MAX: f64 = 10.0;
    pub const DEFAULT_P_MAX: f64 = 0.99;

    pub fn new(s_max: f64, p_max: f64, p_rand: f64) -> Result<Self, ScoreError> {
        let params = Self { s_max, p_max, p_rand };
        params.validate()?;
        Ok(params)
    }

    /// Defaults for a question with the given uniform-guess probability.
    pub fn with_p_rand(p_rand: f64) -> Result<Self, ScoreError> {
        Self::new(Self::DEFAULT_S_MAX, Self::DEFAULT_P_MAX, p_rand)
    }

    /// True/false defaults: `s_max = 10`, `p_max = 0.99`, `p_rand = 1/2`.
    pub fn binary() -> Self {
        Self { s_max: Self::DEFAULT_S_MAX, p_max: Self::DEFAULT_P_MAX, p_rand: 0.5 }
    }

    /// Checks `s_max > 0` and `0 < p_rand < p_max < 1`.
    ///
    /// `p_max = 1` is rejected: the incorrect branch of the log-based rule
    /// diverges there.
    pub fn validate(&self) -> Result<(), ScoreError> {
        if !(self.s_max.is_finite() && self.s_max > 0.0) {
            return Err(ScoreError::InvalidParams(format!("s_max must be positive, got {}", self.s_max)));
        }
        if !(self.p_rand > 0.0 && self.p_rand < self.p_max) {
            return Err(ScoreError::InvalidParams(format!(
                "need 0 < p_rand < p_max, got p_rand={} p_max={}",
                self.p_rand, self.p_max
            )));
        }
        if !(self.p_max < 1.0) {
            return Err(ScoreError::InvalidParams(format!("p_max must be below 1, got {}", self.p_max)));
        }
        Ok(())
    }
}

impl Default for ChoiceParams {
    fn default() -> Self {
        Self::binary()
    }
}

/// Constants of the interval rules.
///
/// `c` is the distance unit for linear/Distance scoring and the log-base scale
/// (`ln(base)`) for log/Order-of-Magnitude scoring. `d` is only used by the
/// linear and log interval rules. `delta` is additive (question units) for the
/// Distance rule and multiplicative for the Order of Magnitude rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalParams {
    pub c: f64,
    pub d: f64,
    pub s_max: f64,
    pub s_min: f64,
    pub delta: f64,
}

impl IntervalParams {
    pub const DEFAULT_DISTANCE_C: f64 = 100.0;
    pub const DEFAULT_DELTA: f64 = 0.4;

    pub fn new(c: f64, d: f64, s_max: f64, s_min: f64, delta: f64) -> Result<Self, ScoreError> {
        let params = Self { c, d, s_max, s_min, delta };
        params.validate()?;
        Ok(params)
    }

    /// `c = 100`, `delta = 0.4`, `s_max = 10`, `s_min = DEFAULT_S_MIN`.
    pub fn distance() -> Self {
        Self {
            c: Self::DEFAULT_DISTANCE_C,
            d: 0.0,
            s_max: ChoiceParams::DEFAULT_S_MAX,
            s_min: DEFAULT_S_MIN,
            delta: Self::DEFAULT_DELTA,
        }
    }

    /// Same as [`IntervalParams::distance`] but with `c = ln(100)`, so one
    /// unit is two orders of magnitude.
    pub fn magnitude() -> Self {
        Self { c: 100f64.ln(), ..Self::distance() }
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        let bad = |msg: String| Err(ScoreError::InvalidParams(msg));
        if !(self.c.is_finite() && self.c > 0.0) {
            return bad(format!("c must be positive, got {}", self.c));
        }
        if !self.d.is_finite() {
            return bad(format!("d must be finite, got {}", self.d));
        }
        if !(self.s_max.is_finite() && self.s_max > 0.0) {
            return bad(format!("s_max must be positive, got {}", self.s_max));
        }
        if !(self.s_min.is_finite() && self.s_min < 0.0) {
            return bad(format!("s_min must be negative, got {}", self.s_min));
        }
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            return bad(format!("delta must be in [0, 1), got {}", self.delta));
        }
        Ok(())
    }
}
