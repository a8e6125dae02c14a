//! Scoring rules for predictions over mutually exclusive options.

use super::rules::BinaryRule;
use super::{check_finite, ChoiceParams, RuleId, ScoreError, ScoreResult, SUM_TOLERANCE};

/// Probabilities a forecaster assigns to mutually exclusive, exhaustive options.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(entries: Vec<f64>) -> Result<Self, ScoreError> {
        if entries.is_empty() {
            return Err(ScoreError::InvalidProbabilityVector("no entries".into()));
        }
        if let Some(bad) = entries.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(ScoreError::InvalidProbabilityVector(format!("entry {bad} outside [0, 1]")));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(ScoreError::InvalidProbabilityVector(format!("entries sum to {sum}, not 1")));
        }
        Ok(Self(entries))
    }

    /// `1/n` on every option.
    pub fn uniform(n: usize) -> Result<Self, ScoreError> {
        Self::new(vec![1.0 / n as f64; n])
    }

    /// Binary vector `(p, 1 - p)`.
    pub fn binary(p: f64) -> Result<Self, ScoreError> {
        Self::new(vec![p, 1.0 - p])
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One-hot indicator of the realized option.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutcomeIndicator {
    len: usize,
    correct: usize,
}

impl OutcomeIndicator {
    pub fn new(flags: &[u8]) -> Result<Self, ScoreError> {
        if let Some(bad) = flags.iter().find(|f| **f > 1) {
            return Err(ScoreError::InvalidOutcome(format!("flag {bad} is not 0 or 1")));
        }
        let ones: Vec<usize> = flags.iter().enumerate().filter(|(_, f)| **f == 1).map(|(i, _)| i).collect();
        match ones.as_slice() {
            [c] => Ok(Self { len: flags.len(), correct: *c }),
            _ => Err(ScoreError::InvalidOutcome(format!("expected exactly one 1, found {}", ones.len()))),
        }
    }

    pub fn from_index(len: usize, correct: usize) -> Result<Self, ScoreError> {
        if correct >= len {
            return Err(ScoreError::InvalidOutcome(format!("index {correct} out of {len} options")));
        }
        Ok(Self { len, correct })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn correct_index(&self) -> usize {
        self.correct
    }

    pub fn flag(&self, i: usize) -> f64 {
        if i == self.correct {
            1.0
        } else {
            0.0
        }
    }
}

fn check_dims(p: &ProbabilityVector, e: &OutcomeIndicator) -> Result<(), ScoreError> {
    if p.len() != e.len() {
        return Err(ScoreError::DimensionMismatch { probabilities: p.len(), outcomes: e.len() });
    }
    Ok(())
}

/// `Σ p_i (2 e_i − p_i)`, higher is better, in `[-1, 1]`.
pub fn quadratic_score(p: &ProbabilityVector, e: &OutcomeIndicator) -> Result<f64, ScoreError> {
    check_dims(p, e)?;
    Ok(p.entries().iter().enumerate().map(|(i, pi)| pi * (2.0 * e.flag(i) - pi)).sum())
}

/// `Σ (e_i − p_i)²`, lower is better, in `[0, 2]`.
pub fn brier_score(p: &ProbabilityVector, e: &OutcomeIndicator) -> Result<f64, ScoreError> {
    check_dims(p, e)?;
    Ok(p.entries().iter().enumerate().map(|(i, pi)| (e.flag(i) - pi).powi(2)).sum())
}

/// `−ln p_c` for the realized option `c`; lower is better, 0 is perfect.
pub fn log_score(p: &ProbabilityVector, e: &OutcomeIndicator) -> Result<f64, ScoreError> {
    check_dims(p, e)?;
    let pc = p.entries()[e.correct_index()];
    if pc <= 0.0 {
        return Err(ScoreError::InfiniteScore);
    }
    Ok(-pc.ln())
}

/// Binary proper rule built from a differentiable convex `f`:
/// `S(p, 1) = f(p) + (1 − p) f'(p)` and `S(p, 0) = f(p) − p f'(p)`.
///
/// Convexity is the caller's responsibility; it is not checked.
pub fn proper_from_convex<F, G>(f: F, f_prime: G, p0: f64, outcome: bool) -> Result<f64, ScoreError>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if !(0.0..=1.0).contains(&p0) {
        return Err(ScoreError::ProbabilityOutOfRange { value: p0, min: 0.0, max: 1.0 });
    }
    let slope = f_prime(p0);
    Ok(if outcome { f(p0) + (1.0 - p0) * slope } else { f(p0) - p0 * slope })
}

/// `min(max(p, p_rand), p_max)`.
pub fn clamp_probability(p: f64, params: &ChoiceParams) -> Result<f64, ScoreError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ScoreError::ProbabilityOutOfRange { value: p, min: 0.0, max: 1.0 });
    }
    Ok(p.max(params.p_rand).min(params.p_max))
}

/// Practical transform of a higher-is-better proper binary rule:
///
/// `s_max (S(p, c) − S(p_rand, c)) / (S(p_max, 1) − S(p_rand, 1))`.
///
/// `p` must already lie in `[p_rand, p_max]`; see [`clamp_probability`].
pub fn practical_score<R>(base: &R, params: &ChoiceParams, p: f64, correct: bool) -> Result<f64, ScoreError>
where
    R: BinaryRule + ?Sized,
{
    params.validate()?;
    if !(params.p_rand..=params.p_max).contains(&p) {
        return Err(ScoreError::ProbabilityOutOfRange { value: p, min: params.p_rand, max: params.p_max });
    }
    let normalizer = base.score(params.p_max, true) - base.score(params.p_rand, true);
    if !(normalizer > 0.0) || !normalizer.is_finite() {
        return Err(ScoreError::DegenerateNormalizer(normalizer));
    }
    let shifted = base.score(p, correct) - base.score(params.p_rand, correct);
    Ok(params.s_max * (shifted / normalizer))
}

/// The Practical transform of the log rule in closed form.
///
/// `p` is clamped into `[p_rand, p_max]` first, so any confidence in `[0, 1]`
/// is accepted. The logarithm base cancels; natural log is used.
pub fn practical_log_choice_score(p: f64, correct: bool, params: &ChoiceParams) -> Result<ScoreResult, ScoreError> {
    params.validate()?;
    check_finite("confidence", p)?;
    let p = clamp_probability(p, params)?;
    let normalizer = params.p_max.ln() - params.p_rand.ln();
    let shifted = if correct {
        p.ln() - params.p_rand.ln()
    } else {
        (1.0 - p).ln() - (1.0 - params.p_rand).ln()
    };
    Ok(ScoreResult::new(params.s_max * (shifted / normalizer), RuleId::PracticalLog))
}
