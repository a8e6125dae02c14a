//! The property matrix behind `verify --suite invariants`.
//!
//! Each check sweeps a seeded random or dense grid and reports the worst
//! observed violation, so runs are reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scoring::{
    dist_score_final, dist_score_raw, interval_kernel, log_interval_score, log_score, mag_score_final, mag_score_raw,
    practical_log_choice_score, quadratic_score, ChoiceParams, IntervalForecast, IntervalParams, OutcomeIndicator,
    ProbabilityVector, DEFAULT_S_MIN,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }
}

fn practical(p: f64, correct: bool, params: &ChoiceParams) -> f64 {
    practical_log_choice_score(p, correct, params).expect("valid params").points
}

fn constants() -> CheckOutcome {
    let binary = ChoiceParams::binary();
    let top = practical(0.99, true, &binary);
    let bottom = practical(0.99, false, &binary);
    let ok = (top - 10.0).abs() <= 1e-12 && (bottom - DEFAULT_S_MIN).abs() <= 1e-9;
    CheckOutcome::new("constants", ok, format!("s_max={top} s_min={bottom}"))
}

fn zero_at_uncertainty() -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for p_rand in [0.5, 1.0 / 3.0, 0.25, 0.4] {
        let params = ChoiceParams::with_p_rand(p_rand).expect("p_rand below p_max");
        for correct in [true, false] {
            worst = worst.max(practical(p_rand, correct, &params).abs());
        }
    }
    CheckOutcome::new("zero_at_uncertainty", worst <= 1e-12, format!("max |score| = {worst:e}"))
}

fn sign_and_monotonicity() -> CheckOutcome {
    let mut failures = 0;
    for p_rand in [0.5, 1.0 / 3.0, 0.25, 0.4] {
        let params = ChoiceParams::with_p_rand(p_rand).expect("p_rand below p_max");
        let (mut last_c, mut last_i) = (0.0, 0.0);
        for i in 1..=500 {
            let p = p_rand + (params.p_max - p_rand) * i as f64 / 500.0;
            let (c, w) = (practical(p, true, &params), practical(p, false, &params));
            if !(c > 0.0 && w < 0.0 && c > last_c && w < last_i) {
                failures += 1;
            }
            (last_c, last_i) = (c, w);
        }
    }
    CheckOutcome::new("sign_monotonicity", failures == 0, format!("{failures} violations over 2000 points"))
}

fn quadratic_facts() -> CheckOutcome {
    let h = std::f64::consts::SQRT_2 / 2.0;
    let first = OutcomeIndicator::from_index(2, 0).expect("index in range");
    let crossing = quadratic_score(&ProbabilityVector::binary(1.0 - h).expect("valid"), &first).expect("dims");
    let mut uniform_ok = true;
    for n in 2..=10 {
        let p = ProbabilityVector::uniform(n).expect("valid");
        for c in 0..n {
            let e = OutcomeIndicator::from_index(n, c).expect("index in range");
            let v = quadratic_score(&p, &e).expect("dims");
            uniform_ok &= (v - 1.0 / n as f64).abs() <= 1e-12;
        }
    }
    CheckOutcome::new(
        "quadratic_facts",
        crossing.abs() <= 1e-12 && uniform_ok,
        format!("zero crossing residual {crossing:e}, uniform 1/n ok: {uniform_ok}"),
    )
}

fn log_additivity(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let first = OutcomeIndicator::from_index(2, 0).expect("index in range");
    let score = |p: f64| log_score(&ProbabilityVector::binary(p).expect("valid"), &first).expect("positive");
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (a, b) = (rng.gen_range(0.01..1.0), rng.gen_range(0.01..1.0));
        worst = worst.max((score(a) + score(b) - score(a * b)).abs());
    }
    CheckOutcome::new("log_additivity", worst <= 1e-12, format!("max residual {worst:e}"))
}

fn boundary_and_peak(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let (dp, mp) = (IntervalParams::distance(), IntervalParams::magnitude());
    let mut boundary: f64 = 0.0;
    let mut peak_err: f64 = 0.0;
    let mut argmax_off: usize = 0;
    for _ in 0..200 {
        let l = rng.gen_range(-500.0..500.0);
        let u = l + rng.gen_range(0.5..400.0);
        let f = IntervalForecast::new(l, u, 0.9).expect("ordered");
        for x in [l, u] {
            boundary = boundary.max(dist_score_raw(x, &f, &dp).expect("valid").abs());
        }
        let s = (u - l) / dp.c;
        let mid = dist_score_raw((l + u) / 2.0, &f, &dp).expect("valid");
        peak_err = peak_err.max((mid - dp.s_max / (1.0 + s)).abs());
        let steps = 2000;
        let (i, _) = (0..=steps)
            .map(|i| dist_score_raw(l + (u - l) * i as f64 / steps as f64, &f, &dp).expect("valid"))
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        argmax_off += usize::from(i.abs_diff(steps / 2) > 1);

        let ml = rng.gen_range(0.01..1000.0);
        let mu = ml * rng.gen_range(1.5..1e4);
        let f = IntervalForecast::new(ml, mu, 0.9).expect("ordered");
        for x in [ml, mu] {
            boundary = boundary.max(mag_score_raw(x, &f, &mp).expect("valid").abs());
        }
        let s = (mu / ml).ln() / mp.c;
        let mid = mag_score_raw((ml * mu).sqrt(), &f, &mp).expect("valid");
        peak_err = peak_err.max((mid - mp.s_max / (1.0 + s)).abs());
        let (a, b) = (ml.ln(), mu.ln());
        let (i, _) = (0..=steps)
            .map(|i| mag_score_raw((a + (b - a) * i as f64 / steps as f64).exp(), &f, &mp).expect("valid"))
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        argmax_off += usize::from(i.abs_diff(steps / 2) > 1);
    }
    CheckOutcome::new(
        "boundary_zero_and_peak",
        boundary <= 1e-12 && peak_err <= 1e-9 && argmax_off == 0,
        format!("boundary {boundary:e}, peak error {peak_err:e}, misplaced argmax {argmax_off}"),
    )
}

fn width_limits() -> CheckOutcome {
    let dp = IntervalParams::distance();
    let wide = dist_score_raw(0.0, &IntervalForecast::new(-1e9, 1e9, 0.9).expect("ordered"), &dp).expect("valid");
    let narrow =
        dist_score_raw(0.0, &IntervalForecast::new(-1e-9, 1e-9, 0.9).expect("ordered"), &dp).expect("valid");
    let ok = wide.abs() < 1e-6 && (narrow - dp.s_max).abs() < 1e-6;
    CheckOutcome::new("width_limits", ok, format!("very wide {wide:e}, very narrow {narrow}"))
}

fn continuity(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let (dp, mp) = (IntervalParams::distance(), IntervalParams::magnitude());
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let l = rng.gen_range(-1000.0..1000.0);
        let u = l + rng.gen_range(0.0..500.0);
        let dist = |x: f64, l: f64, u: f64| {
            dist_score_final(x, &IntervalForecast::new(l, u, 0.9).expect("ordered"), &dp).expect("valid").points
        };
        for seam in [l - dp.delta, u + dp.delta] {
            worst = worst.max((dist(seam + eps, l, u) - dist(seam - eps, l, u)).abs());
        }
        let x = l - dp.delta;
        worst = worst.max((dist(x, l + eps, u) - dist(x, l - eps, u)).abs());
        let x = u + dp.delta;
        worst = worst.max((dist(x, l, u + eps) - dist(x, l, u - eps)).abs());

        let ml = rng.gen_range(1.0..1e5);
        let mu = ml * rng.gen_range(1.0..100.0);
        let mag = |x: f64, l: f64, u: f64| {
            mag_score_final(x, &IntervalForecast::new(l, u, 0.9).expect("ordered"), &mp).expect("valid").points
        };
        for seam in [ml * (1.0 - mp.delta), mu * (1.0 + mp.delta)] {
            worst = worst.max((mag(seam + eps, ml, mu) - mag(seam - eps, ml, mu)).abs());
        }
        let x = ml * (1.0 - mp.delta);
        worst = worst.max((mag(x, ml + eps, mu) - mag(x, ml - eps, mu)).abs());
        let x = mu * (1.0 + mp.delta);
        worst = worst.max((mag(x, ml, mu + eps) - mag(x, ml, mu - eps)).abs());
    }
    CheckOutcome::new("continuity", worst < 1e-4, format!("max jump {worst:e}"))
}

fn bounds(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let (dp, mp) = (IntervalParams::distance(), IntervalParams::magnitude());
    let mut outside = 0;
    for _ in 0..50_000 {
        let l = rng.gen_range(-1e4..1e4);
        let f = IntervalForecast::new(l, l + rng.gen_range(0.0..1e4), rng.gen_range(0.5..0.99)).expect("ordered");
        let v = dist_score_final(rng.gen_range(-1e5..1e5), &f, &dp).expect("valid").points;
        outside += usize::from(!(dp.s_min..=dp.s_max).contains(&v));
        let ml = 10f64.powf(rng.gen_range(-6.0..9.0));
        let f = IntervalForecast::new(ml, ml * 10f64.powf(rng.gen_range(0.0..6.0)), 0.9).expect("ordered");
        let v = mag_score_final(10f64.powf(rng.gen_range(-9.0..12.0)), &f, &mp).expect("valid").points;
        outside += usize::from(!(mp.s_min..=mp.s_max).contains(&v));
    }
    let floor = mag_score_final(10.0, &IntervalForecast::new(1e9, 1.000000001e9, 0.9).expect("ordered"), &mp)
        .expect("valid")
        .points;
    CheckOutcome::new(
        "bounds_and_floor",
        outside == 0 && floor == mp.s_min,
        format!("{outside} of 100000 outside [s_min, s_max]; billion-range miss scores {floor}"),
    )
}

fn unit_invariance(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mp = IntervalParams::magnitude();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let l = 10f64.powf(rng.gen_range(-3.0..6.0));
        let u = l * 10f64.powf(rng.gen_range(0.0..4.0));
        let x = 10f64.powf(rng.gen_range(-4.0..11.0));
        let k = 10f64.powf(rng.gen_range(-6.0..6.0));
        let f = IntervalForecast::new(l, u, 0.9).expect("ordered");
        let g = IntervalForecast::new(k * l, k * u, 0.9).expect("ordered");
        let pairs = [
            (
                mag_score_final(x, &f, &mp).expect("valid").points,
                mag_score_final(k * x, &g, &mp).expect("valid").points,
            ),
            (log_interval_score(x, &f, &mp).expect("valid"), log_interval_score(k * x, &g, &mp).expect("valid")),
        ];
        for (a, b) in pairs {
            worst = worst.max((a - b).abs() / a.abs().max(1e-300));
        }
    }
    CheckOutcome::new("unit_invariance", worst <= 1e-9, format!("max relative change {worst:e}"))
}

fn kernel_agreement(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let (dp, mp) = (IntervalParams::distance(), IntervalParams::magnitude());
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let s: f64 = rng.gen_range(0.01..3.0);
        let r: f64 = rng.gen_range(-s - 2.0..2.0);
        let t = -r - s;
        let d = dist_score_raw(-r * dp.c, &IntervalForecast::new(0.0, s * dp.c, 0.9).expect("ordered"), &dp)
            .expect("valid");
        let m = mag_score_raw((-r * mp.c).exp(), &IntervalForecast::new(1.0, (s * mp.c).exp(), 0.9).expect("ordered"), &mp)
            .expect("valid");
        let k = interval_kernel(r, s, t, 0.9, 10.0);
        worst = worst.max((d - k).abs()).max((m - k).abs());
    }
    CheckOutcome::new("kernel_agreement", worst <= 1e-9, format!("max disagreement {worst:e}"))
}

/// Runs every check with the given seed.
pub fn invariant_matrix(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        constants(),
        zero_at_uncertainty(),
        sign_and_monotonicity(),
        quadratic_facts(),
        log_additivity(&mut rng),
        boundary_and_peak(&mut rng),
        width_limits(),
        continuity(&mut rng),
        bounds(&mut rng),
        unit_invariance(&mut rng),
        kernel_agreement(&mut rng),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_passes_and_is_deterministic() {
        let a = invariant_matrix(7);
        for c in &a {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
        assert_eq!(a, invariant_matrix(7));
    }
}
