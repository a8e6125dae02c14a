use clap::{ArgGroup, Args, ValueEnum};

use calibrate_core::scoring::{
    clamp_probability, display_round, dist_score_final, dist_score_raw, linear_interval_score, log_interval_score,
    mag_score_final, mag_score_raw, practical_log_choice_score, ChoiceParams, IntervalForecast, IntervalParams,
    RuleId, ScoreResult, DEFAULT_BETA,
};

use crate::{CliError, CliResult};

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("outcome").required(true).args(["correct", "incorrect"])))]
pub struct ChoiceArgs {
    /// Stated confidence in [0, 1]; clamped to [p_rand, p_max] before scoring.
    #[arg(long)]
    p: f64,
    #[arg(long)]
    correct: bool,
    #[arg(long)]
    incorrect: bool,
    /// Number of options.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Options chosen (choose k of n).
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = ChoiceParams::DEFAULT_P_MAX)]
    p_max: f64,
    #[arg(long, default_value_t = ChoiceParams::DEFAULT_S_MAX)]
    s_max: f64,
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn print_result(result: &ScoreResult) {
    println!("rule: {}", result.rule_id);
    println!("points: {}", result.points);
    println!("display: {}", display_round(result.points));
}

pub fn choice(args: &ChoiceArgs) -> CliResult {
    if args.n < 2 {
        return Err(usage(format!("--n must be at least 2, got {}", args.n)));
    }
    if args.k == 0 || args.k >= args.n {
        return Err(usage(format!("--k must satisfy 1 <= k < n, got k={} n={}", args.k, args.n)));
    }
    if !(0.0..=1.0).contains(&args.p) {
        return Err(usage(format!("--p must lie in [0, 1], got {}", args.p)));
    }
    let p_rand = args.k as f64 / args.n as f64;
    let params = ChoiceParams::new(args.s_max, args.p_max, p_rand).map_err(usage)?;
    let clamped = clamp_probability(args.p, &params).map_err(usage)?;
    let result = practical_log_choice_score(args.p, args.correct, &params).map_err(usage)?;
    println!("p_rand: {p_rand}");
    println!("confidence: {} (scored as {clamped})", args.p);
    println!("outcome: {}", if args.correct { "correct" } else { "incorrect" });
    print_result(&result);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleName {
    Distance,
    Magnitude,
    Linear,
    Log,
}

impl RuleName {
    fn name(self) -> &'static str {
        match self {
            RuleName::Distance => "distance",
            RuleName::Magnitude => "magnitude",
            RuleName::Linear => "linear",
            RuleName::Log => "log",
        }
    }
}

#[derive(Debug, Args)]
pub struct IntervalArgs {
    #[arg(long, value_enum)]
    rule: RuleName,
    /// Lower bound.
    #[arg(long, allow_hyphen_values = true)]
    l: f64,
    /// Upper bound.
    #[arg(long, allow_hyphen_values = true)]
    u: f64,
    /// True value.
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    /// Scale constant; defaults to 100 for distance/linear, ln 100 for magnitude/log.
    #[arg(long)]
    c: Option<f64>,
    /// Bound expansion for the final distance/magnitude rules.
    #[arg(long)]
    delta: Option<f64>,
    /// Score without expansion or floor (distance and magnitude only).
    #[arg(long)]
    raw: bool,
}

pub fn interval(args: &IntervalArgs) -> CliResult {
    let defaults = match args.rule {
        RuleName::Distance | RuleName::Linear => IntervalParams::distance(),
        RuleName::Magnitude | RuleName::Log => IntervalParams::magnitude(),
    };
    if args.raw && matches!(args.rule, RuleName::Linear | RuleName::Log) {
        return Err(usage("--raw applies only to the distance and magnitude rules"));
    }
    let params = IntervalParams::new(
        args.c.unwrap_or(defaults.c),
        defaults.d,
        defaults.s_max,
        defaults.s_min,
        args.delta.unwrap_or(defaults.delta),
    )
    .map_err(usage)?;
    let forecast = IntervalForecast::new(args.l, args.u, args.beta).map_err(usage)?;
    let (x, f, p) = (args.x, &forecast, &params);
    let scored = match (args.rule, args.raw) {
        (RuleName::Distance, false) => dist_score_final(x, f, p),
        (RuleName::Magnitude, false) => mag_score_final(x, f, p),
        (RuleName::Distance, true) => dist_score_raw(x, f, p).map(|v| ScoreResult::new(v, RuleId::DistanceRaw)),
        (RuleName::Magnitude, true) => mag_score_raw(x, f, p).map(|v| ScoreResult::new(v, RuleId::MagnitudeRaw)),
        (RuleName::Linear, _) => linear_interval_score(x, f, p).map(|v| ScoreResult::new(v, RuleId::LinearInterval)),
        (RuleName::Log, _) => log_interval_score(x, f, p).map(|v| ScoreResult::new(v, RuleId::LogInterval)),
    };
    let result = scored.map_err(|e| usage(format!("{} rule: {e}", args.rule.name())))?;
    print_result(&result);
    if let Some(c) = &result.components {
        println!("width_penalty: {}", c.width_penalty);
        println!("distance_penalty: {}", c.distance_penalty);
        println!("floored: {}", c.floored);
    }
    Ok(())
}
