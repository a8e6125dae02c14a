use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::json;

use calibrate_core::properness::checks::invariant_matrix;
use calibrate_core::properness::{
    incentive_gap, render_gap_table, render_properness_table, verify_choice_properness, BeliefDistribution,
    BeliefGrid, SearchGrid,
};
use calibrate_core::scoring::rules::{BinaryRule, BrierRule, ConvexRule, IntervalRule, LogRule, PracticalLog, QuadraticRule};
use calibrate_core::scoring::{ChoiceParams, IntervalParams};

use crate::{write_json, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Properness,
    IntervalGap,
    Invariants,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Also write the report as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Seed for the invariant sweeps.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Grid steps per bound for the interval gap search.
    #[arg(long, default_value_t = 200)]
    steps: usize,
    /// Report grid step for the choice properness scan.
    #[arg(long, default_value_t = 0.001)]
    report_step: f64,
}

pub fn run(args: &VerifyArgs) -> CliResult {
    match args.suite {
        Suite::Properness => properness(args),
        Suite::IntervalGap => interval_gap(args),
        Suite::Invariants => invariants(args),
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn properness(args: &VerifyArgs) -> CliResult {
    let step = args.report_step;
    let mut reports = Vec::new();
    for (label, p_rand) in [("1/2", 0.5), ("1/3", 1.0 / 3.0), ("1/4", 0.25), ("2/5", 0.4)] {
        let rule = PracticalLog::new(ChoiceParams::with_p_rand(p_rand).map_err(usage)?).map_err(usage)?;
        let grid = BeliefGrid::span(p_rand, ChoiceParams::DEFAULT_P_MAX, 0.01, step).map_err(usage)?;
        reports.push(verify_choice_properness(&format!("practical_log[p_rand={label}]"), &rule, &grid));
    }
    let grid = BeliefGrid::span(0.01, 0.99, 0.01, step).map_err(usage)?;
    let convex = ConvexRule::new(|x: f64| x * x, |x: f64| 2.0 * x);
    let classical: [(&str, &dyn BinaryRule); 4] =
        [("quadratic", &QuadraticRule), ("brier", &BrierRule), ("log", &LogRule), ("convex[f=x^2]", &convex)];
    for (name, rule) in classical {
        reports.push(verify_choice_properness(name, rule, &grid));
    }
    print!("{}", render_properness_table(&reports));
    let passed = reports.iter().all(|r| r.passed);
    if let Some(path) = &args.json {
        let summary: Vec<_> = reports
            .iter()
            .map(|r| {
                json!({
                    "rule": r.rule,
                    "report_step": r.report_step,
                    "max_argmax_deviation": r.max_argmax_deviation,
                    "worst_belief": r.worst_belief,
                    "incentive_gap": r.incentive_gap,
                    "passed": r.passed,
                })
            })
            .collect();
        write_json(path, &json!({"suite": "properness", "passed": passed, "rules": summary}))?;
    }
    verdict(passed, "some rule's expected-score maximizer strays from the believed probability")
}

fn interval_gap(args: &VerifyArgs) -> CliResult {
    let steps = args.steps;
    let uniform = BeliefDistribution::uniform(0.0, 100.0).map_err(usage)?;
    let log_uniform = BeliefDistribution::log_uniform(1.0, 1e4).map_err(usage)?;
    let lin_grid = SearchGrid::linear(-25.0, 125.0, steps);
    let log_grid = SearchGrid::log(10f64.powf(-0.4), 10f64.powf(4.4), steps);
    let cases = [
        ("linear", IntervalRule::Linear(IntervalParams::distance()), &uniform, &lin_grid),
        ("log", IntervalRule::Log(IntervalParams::magnitude()), &log_uniform, &log_grid),
        ("distance", IntervalRule::Distance(IntervalParams::distance()), &uniform, &lin_grid),
        ("magnitude", IntervalRule::Magnitude(IntervalParams::magnitude()), &log_uniform, &log_grid),
    ];
    let mut reports = Vec::new();
    let mut verdicts = Vec::new();
    for (name, rule, belief, grid) in cases {
        let report = incentive_gap(name, &rule, belief, 0.9, grid).map_err(|e| CliError::Data(e.to_string()))?;
        let ok = if rule.is_proper() { report.is_negligible() } else { report.is_significant() };
        verdicts.push((name, rule.is_proper(), ok));
        reports.push(report);
    }
    print!("{}", render_gap_table(&reports));
    for (name, proper, ok) in &verdicts {
        let expectation = if *proper { "gap ~ 0" } else { "gap > 0" };
        println!("{name}: expected {expectation}: {}", if *ok { "PASS" } else { "FAIL" });
    }
    let passed = verdicts.iter().all(|v| v.2);
    if let Some(path) = &args.json {
        write_json(path, &json!({"suite": "interval-gap", "steps": steps, "passed": passed, "reports": reports}))?;
    }
    verdict(passed, "interval gaps do not split proper from non-proper rules")
}

fn invariants(args: &VerifyArgs) -> CliResult {
    let checks = invariant_matrix(args.seed);
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &checks {
        println!("{}  {:<width$}  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let passed = checks.iter().all(|c| c.passed);
    if let Some(path) = &args.json {
        write_json(path, &json!({"suite": "invariants", "seed": args.seed, "passed": passed, "checks": checks}))?;
    }
    verdict(passed, "at least one invariant check failed")
}

fn verdict(passed: bool, failure: &str) -> CliResult {
    if passed {
        Ok(())
    } else {
        Err(CliError::Verification(failure.to_string()))
    }
}
