//! Scoring rules for prediction intervals `[L, U]` with coverage `β`.

use serde::{Deserialize, Serialize};

use super::{check_finite, IntervalParams, RuleId, ScoreComponents, ScoreError, ScoreResult};

/// A forecaster's claim that the true value lies in `[lower, upper]` with
/// probability `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalForecast {
    pub lower: f64,
    pub upper: f64,
    pub beta: f64,
}

impl IntervalForecast {
    pub fn new(lower: f64, upper: f64, beta: f64) -> Result<Self, ScoreError> {
        let f = Self { lower, upper, beta };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        check_finite("lower bound", self.lower)?;
        check_finite("upper bound", self.upper)?;
        if self.lower > self.upper {
            return Err(ScoreError::InvalidInterval(format!(
                "lower bound {} exceeds upper bound {}",
                self.lower, self.upper
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(ScoreError::InvalidInterval(format!("beta must be in (0, 1), got {}", self.beta)));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// Errors unless both bounds are strictly positive.
    pub fn require_positive(&self) -> Result<(), ScoreError> {
        positive("lower bound", self.lower)?;
        positive("upper bound", self.upper)
    }
}

fn positive(what: &'static str, value: f64) -> Result<(), ScoreError> {
    check_finite(what, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(ScoreError::NonPositive { what, value })
    }
}

fn strictly_wide(f: &IntervalForecast) -> Result<(), ScoreError> {
    if f.upper > f.lower {
        Ok(())
    } else {
        Err(ScoreError::InvalidInterval(format!(
            "zero-width interval [{}, {}] has no interior",
            f.lower, f.upper
        )))
    }
}

/// Proper interval score built from nondecreasing `s1`, `s2` and an arbitrary
/// outcome bonus `u`:
///
/// `u(x) − (1−β)/2 (s2(U) − s1(L)) − miss(x)`, where the miss term is
/// `s1(L) − s1(x)` below the interval, `s2(x) − s2(U)` above it and zero inside.
pub fn generic_interval_score<S1, S2, V>(x: f64, f: &IntervalForecast, s1: S1, s2: S2, u: V) -> f64
where
    S1: Fn(f64) -> f64,
    S2: Fn(f64) -> f64,
    V: Fn(f64) -> f64,
{
    let width = (1.0 - f.beta) / 2.0 * (s2(f.upper) - s1(f.lower));
    let miss = if x < f.lower {
        s1(f.lower) - s1(x)
    } else if x > f.upper {
        s2(x) - s2(f.upper)
    } else {
        0.0
    };
    u(x) - width - miss
}

/// `d − ((1−β)/2 (U−L)/c + miss/c)` with the miss measured in question units.
pub fn linear_interval_score(x: f64, f: &IntervalForecast, params: &IntervalParams) -> Result<f64, ScoreError> {
    f.validate()?;
    params.validate()?;
    check_finite("true value", x)?;
    let c = params.c;
    let miss = if x < f.lower {
        (f.lower - x) / c
    } else if x > f.upper {
        (x - f.upper) / c
    } else {
        0.0
    };
    Ok(params.d - ((1.0 - f.beta) / 2.0 * (f.upper - f.lower) / c + miss))
}

/// `d − ((1−β)/2 ln(U/L)/c + miss/c)` with the miss measured as a log ratio.
/// Requires `x`, `L` and `U` to be positive.
pub fn log_interval_score(x: f64, f: &IntervalForecast, params: &IntervalParams) -> Result<f64, ScoreError> {
    f.validate()?;
    params.validate()?;
    f.require_positive()?;
    positive("true value", x)?;
    let c = params.c;
    let miss = if x < f.lower {
        (f.lower / x).ln() / c
    } else if x > f.upper {
        (x / f.upper).ln() / c
    } else {
        0.0
    };
    Ok(params.d - ((1.0 - f.beta) / 2.0 * (f.upper / f.lower).ln() / c + miss))
}

/// Value of the shared Distance / Order of Magnitude piecewise formula.
///
/// `r` is the scaled miss below `L` (positive only when `x < L`), `t` the
/// scaled miss above `U` and `s` the scaled width. Below the interval:
/// `−2/(1−β) r − r/(1+r) s`; above: the same in `t`; inside:
/// `4 s_max (r t / s²) (1 − s/(1+s))`.
pub fn interval_kernel(r: f64, s: f64, t: f64, beta: f64, s_max: f64) -> f64 {
    kernel_parts(r, s, t, beta, s_max).points
}

struct KernelParts {
    points: f64,
    width_penalty: f64,
    distance_penalty: f64,
}

fn kernel_parts(r: f64, s: f64, t: f64, beta: f64, s_max: f64) -> KernelParts {
    let outside = |miss: f64| {
        let distance_penalty = 2.0 / (1.0 - beta) * miss;
        let width_penalty = miss / (1.0 + miss) * s;
        KernelParts { points: -distance_penalty - width_penalty, width_penalty, distance_penalty }
    };
    if r > 0.0 {
        outside(r)
    } else if t > 0.0 {
        outside(t)
    } else {
        let centered = 4.0 * s_max * (r * t / (s * s));
        let points = centered * (1.0 - s / (1.0 + s));
        KernelParts { points, width_penalty: centered - points, distance_penalty: s_max - centered }
    }
}

fn dist_parts(x: f64, lower: f64, upper: f64, beta: f64, params: &IntervalParams) -> KernelParts {
    let c = params.c;
    kernel_parts((lower - x) / c, (upper - lower) / c, (x - upper) / c, beta, params.s_max)
}

fn mag_parts(x: f64, lower: f64, upper: f64, beta: f64, params: &IntervalParams) -> KernelParts {
    let c = params.c;
    kernel_parts((lower / x).ln() / c, (upper / lower).ln() / c, (x / upper).ln() / c, beta, params.s_max)
}

/// Distance rule before boundary expansion and flooring.
///
/// Zero at both bounds, peak `s_max/(1+s)` at the midpoint. Requires `U > L`.
pub fn dist_score_raw(x: f64, f: &IntervalForecast, params: &IntervalParams) -> Result<f64, ScoreError> {
    f.validate()?;
    params.validate()?;
    check_finite("true value", x)?;
    strictly_wide(f)?;
    Ok(dist_parts(x, f.lower, f.upper, f.beta, params).points)
}

/// Order of Magnitude rule before boundary expansion and flooring.
///
/// Peak at the geometric mean `√(LU)`. Requires positive inputs and `U > L`.
pub fn mag_score_raw(x: f64, f: &IntervalForecast, params: &IntervalParams) -> Result<f64, ScoreError> {
    f.validate()?;
    params.validate()?;
    f.require_positive()?;
    positive("true value", x)?;
    strictly_wide(f)?;
    Ok(mag_parts(x, f.lower, f.upper, f.beta, params).points)
}

fn floored(parts: KernelParts, rule_id: RuleId, s_min: f64) -> ScoreResult {
    let floored = !(parts.points > s_min);
    ScoreResult {
        points: if floored { s_min } else { parts.points },
        rule_id,
        components: Some(ScoreComponents {
            width_penalty: parts.width_penalty,
            distance_penalty: parts.distance_penalty,
            floored,
        }),
    }
}

/// Distance rule on `[L − δ, U + δ]`, floored at `s_min`.
///
/// Zero-width submissions are accepted as long as `δ > 0`.
pub fn dist_score_final(x: f64, f: &IntervalForecast, params: &IntervalParams) -> Result<ScoreResult, ScoreError> {
    f.validate()?;
    params.validate()?;
    check_finite("true value", x)?;
    let expanded = IntervalForecast { lower: f.lower - params.delta, upper: f.upper + params.delta, beta: f.beta };
    strictly_wide(&expanded)?;
    let parts = dist_parts(x, expanded.lower, expanded.upper, f.beta, params);
    Ok(floored(parts, RuleId::Distance, params.s_min))
}

/// Order of Magnitude rule on `[L(1 − δ), U(1 + δ)]`, floored at `s_min`.
pub fn mag_score_final(x: f64, f: &IntervalForecast, params: &IntervalParams) -> Result<ScoreResult, ScoreError> {
    f.validate()?;
    params.validate()?;
    f.require_positive()?;
    positive("true value", x)?;
    let expanded = IntervalForecast {
        lower: f.lower * (1.0 - params.delta),
        upper: f.upper * (1.0 + params.delta),
        beta: f.beta,
    };
    strictly_wide(&expanded)?;
    let parts = mag_parts(x, expanded.lower, expanded.upper, f.beta, params);
    Ok(floored(parts, RuleId::Magnitude, params.s_min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::DEFAULT_S_MIN;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn unit_linear() -> IntervalParams {
        IntervalParams { c: 1.0, d: 0.0, ..IntervalParams::distance() }
    }

    fn fc(l: f64, u: f64) -> IntervalForecast {
        IntervalForecast::new(l, u, 0.9).unwrap()
    }

    #[test]
    fn forecast_invariants() {
        assert!(IntervalForecast::new(2.0, 1.0, 0.9).is_err());
        assert!(IntervalForecast::new(1.0, 2.0, 1.0).is_err());
        assert!(IntervalForecast::new(1.0, 2.0, 0.0).is_err());
        assert!(IntervalForecast::new(f64::NAN, 2.0, 0.5).is_err());
        assert!(IntervalForecast::new(3.0, 3.0, 0.5).is_ok());
    }

    #[test]
    fn generic_examples() {
        let f = fc(10.0, 20.0);
        let id = |a: f64| a;
        let inside = generic_interval_score(15.0, &f, id, id, |_| 0.0);
        close(inside, -0.05 * 10.0, 1e-12);
        close(generic_interval_score(25.0, &f, id, id, |_| 0.0), -5.5, 1e-12);
        let at = generic_interval_score(20.0, &f, id, id, |_| 0.0);
        let above = generic_interval_score(20.0 + 1e-9, &f, id, id, |_| 0.0);
        close(at, above, 1e-8);
    }

    #[test]
    fn linear_examples() {
        let p = unit_linear();
        close(linear_interval_score(15.0, &fc(10.0, 20.0), &p).unwrap(), -0.5, 1e-12);
        close(linear_interval_score(20.0, &fc(10.0, 20.0), &p).unwrap(), -0.5, 1e-12);
        close(linear_interval_score(25.0, &fc(10.0, 20.0), &p).unwrap(), -5.5, 1e-12);
        close(linear_interval_score(5.0, &fc(10.0, 20.0), &p).unwrap(), -5.5, 1e-12);
    }

    #[test]
    fn linear_matches_generic_reduction() {
        let p = IntervalParams { c: 7.0, d: 2.5, ..IntervalParams::distance() };
        let s = |a: f64| a / 7.0;
        for x in [-30.0, 0.0, 10.0, 13.0, 20.0, 45.0] {
            let f = IntervalForecast::new(10.0, 20.0, 0.8).unwrap();
            let a = linear_interval_score(x, &f, &p).unwrap();
            let b = generic_interval_score(x, &f, s, s, |_| 2.5);
            close(a, b, 1e-12);
        }
    }

    #[test]
    fn log_examples() {
        let p = unit_linear();
        close(log_interval_score(100.0, &fc(10.0, 1000.0), &p).unwrap(), -0.05 * 100f64.ln(), 1e-12);
        close(log_interval_score(100.0, &fc(10.0, 1000.0), &p).unwrap(), -0.230259, 1e-6);
        let inside = log_interval_score(500.0, &fc(10.0, 1000.0), &p).unwrap();
        close(log_interval_score(1000.0, &fc(10.0, 1000.0), &p).unwrap(), inside, 1e-12);
        let scaled = log_interval_score(1e5, &fc(1e4, 1e6), &p).unwrap();
        close(scaled, log_interval_score(100.0, &fc(10.0, 1000.0), &p).unwrap(), 1e-12);
        assert!(log_interval_score(0.0, &fc(10.0, 1000.0), &p).is_err());
        assert!(log_interval_score(5.0, &fc(-1.0, 1000.0), &p).is_err());
    }

    #[test]
    fn log_matches_generic_reduction() {
        let p = IntervalParams::magnitude();
        let s = |a: f64| a.ln() / p.c;
        for x in [0.5, 10.0, 300.0, 1000.0, 5e4] {
            let f = fc(10.0, 1000.0);
            close(log_interval_score(x, &f, &p).unwrap(), generic_interval_score(x, &f, s, s, |_| 0.0), 1e-12);
        }
    }

    #[test]
    fn dist_raw_examples() {
        let p = IntervalParams::distance();
        close(dist_score_raw(0.0, &fc(0.0, 20.0), &p).unwrap(), 0.0, 1e-12);
        close(dist_score_raw(20.0, &fc(0.0, 20.0), &p).unwrap(), 0.0, 1e-12);
        close(dist_score_raw(10.0, &fc(0.0, 20.0), &p).unwrap(), 8.333333333333333, 1e-9);
        close(dist_score_raw(30.0, &fc(50.0, 70.0), &p).unwrap(), -4.033333333333333, 1e-9);
        close(dist_score_raw(90.0, &fc(50.0, 70.0), &p).unwrap(), -4.033333333333333, 1e-9);
        assert!(dist_score_raw(5.0, &fc(5.0, 5.0), &p).is_err());
    }

    #[test]
    fn dist_raw_interior_vanishes_for_huge_intervals() {
        let p = IntervalParams::distance();
        let mut last = f64::INFINITY;
        for half in [1e2, 1e4, 1e6, 1e8] {
            let v = dist_score_raw(0.0, &fc(-half, half), &p).unwrap();
            assert!(v > 0.0 && v < last);
            last = v;
        }
        assert!(last < 1e-4);
    }

    #[test]
    fn mag_raw_examples() {
        let p = IntervalParams::magnitude();
        close(mag_score_raw(10.0, &fc(10.0, 1000.0), &p).unwrap(), 0.0, 1e-12);
        close(mag_score_raw(1000.0, &fc(10.0, 1000.0), &p).unwrap(), 0.0, 1e-12);
        close(mag_score_raw(100.0, &fc(10.0, 1000.0), &p).unwrap(), 5.0, 1e-9);
        let k = 37.5;
        close(
            mag_score_raw(100.0 * k, &fc(10.0 * k, 1000.0 * k), &p).unwrap(),
            mag_score_raw(100.0, &fc(10.0, 1000.0), &p).unwrap(),
            1e-9,
        );
        assert!(mag_score_raw(-1.0, &fc(10.0, 1000.0), &p).is_err());
        assert!(mag_score_raw(10.0, &fc(10.0, 10.0), &p).is_err());
    }

    #[test]
    fn dist_and_mag_share_the_kernel() {
        let dp = IntervalParams::distance();
        let mp = IntervalParams::magnitude();
        // Pick magnitude inputs whose log-ratios reproduce the distance r, s, t.
        for (x, l, u) in [(10.0, 0.0, 20.0), (30.0, 50.0, 70.0), (95.0, 50.0, 70.0), (55.0, 50.0, 70.0)] {
            let (r, s, t): (f64, f64, f64) = ((l - x) / dp.c, (u - l) / dp.c, (x - u) / dp.c);
            let ml = 1.0;
            let mu = (s * mp.c).exp();
            let mx = (-r * mp.c).exp();
            let a = dist_score_raw(x, &fc(l, u), &dp).unwrap();
            let b = mag_score_raw(mx, &fc(ml, mu), &mp).unwrap();
            close(a, b, 1e-9);
            close(a, interval_kernel(r, s, t, 0.9, 10.0), 1e-12);
        }
    }

    #[test]
    fn dist_final_examples() {
        let p = IntervalParams::distance();
        let edge = dist_score_final(10.0, &fc(10.0, 100.0), &p).unwrap();
        assert!(edge.points > 0.0);
        close(edge.points, 0.0919471655313022, 1e-12);
        let far = dist_score_final(1e10, &fc(0.0, 1.0), &p).unwrap();
        assert_eq!(far.points, DEFAULT_S_MIN);
        assert!(far.components.unwrap().floored);
        let point = dist_score_final(50.0, &fc(50.0, 50.0), &p).unwrap();
        assert!(point.points > 0.0 && point.points <= p.s_max);
        let no_delta = IntervalParams { delta: 0.0, ..p };
        assert!(dist_score_final(50.0, &fc(50.0, 50.0), &no_delta).is_err());
    }

    #[test]
    fn dist_final_allows_non_positive_values() {
        let p = IntervalParams::distance();
        let v = dist_score_final(-5.0, &fc(-10.0, 0.0), &p).unwrap();
        assert!(v.points > 0.0);
    }

    #[test]
    fn components_reassemble_points() {
        let p = IntervalParams::distance();
        let inside = dist_score_final(40.0, &fc(10.0, 100.0), &p).unwrap();
        let parts = inside.components.unwrap();
        close(p.s_max - parts.distance_penalty - parts.width_penalty, inside.points, 1e-12);
        let below = dist_score_final(-40.0, &fc(10.0, 100.0), &p).unwrap();
        let parts = below.components.unwrap();
        close(-parts.distance_penalty - parts.width_penalty, below.points, 1e-12);
    }

    #[test]
    fn mag_final_examples() {
        let p = IntervalParams::magnitude();
        let edge = mag_score_final(10.0, &fc(10.0, 100.0), &p).unwrap();
        assert!(edge.points > 0.0);
        close(edge.points, 3.227405718067353, 1e-9);
        let miss = mag_score_final(10.0, &fc(1e9, 1.000000001e9), &p).unwrap();
        assert_eq!(miss.points, DEFAULT_S_MIN);
        let base = mag_score_final(42.0, &fc(30.0, 60.0), &p).unwrap().points;
        let scaled = mag_score_final(42_000.0, &fc(30_000.0, 60_000.0), &p).unwrap().points;
        close(base, scaled, 1e-9 * base.abs());
        assert!(mag_score_final(3.0, &fc(-5.0, 10.0), &p).is_err());
        assert!(mag_score_final(0.0, &fc(5.0, 10.0), &p).is_err());
        assert!(mag_score_final(7.0, &fc(7.0, 7.0), &p).unwrap().points > 0.0);
    }
}
