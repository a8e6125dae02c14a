use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use clap::Args;
use serde_json::json;

use calibrate_core::bank::load_deck_file;
use calibrate_core::scoring::display_round;
use calibrate_core::session::{default_edges, parse_edges, CalibrationBin, SessionStats};
use calibrate_core::sim::{simulate, write_log, AgentKind};

use crate::{write_json, CliError, CliResult};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Deck file to draw questions from.
    #[arg(long)]
    deck: PathBuf,
    /// calibrated, overconfident, underconfident or random.
    #[arg(long)]
    agent: AgentKind,
    /// Number of predictions.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the event log (JSON lines) here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stamp events with the Unix epoch so logs are byte-stable.
    #[arg(long)]
    no_timestamp: bool,
    /// Comma-separated calibration bin edges.
    #[arg(long)]
    edges: Option<String>,
    /// Also write the summary as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
}

pub fn run(args: &SimulateArgs) -> CliResult {
    let deck = load_deck_file(&args.deck).map_err(|e| CliError::Data(format!("{}: {e}", args.deck.display())))?;
    if args.n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    let edges = match &args.edges {
        Some(raw) => parse_edges(raw).map_err(|e| CliError::Usage(e.to_string()))?,
        None => default_edges(&deck),
    };
    let clock = |fixed: bool| move || if fixed { DateTime::<Utc>::UNIX_EPOCH } else { Utc::now() };
    let session = simulate(&deck, args.agent, args.n, args.seed, clock(args.no_timestamp))
        .map_err(|e| CliError::Data(e.to_string()))?;
    if let Some(path) = &args.out {
        let file = File::create(path).map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))?;
        write_log(session.events(), BufWriter::new(file))
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    }
    let stats = session.stats();
    let bins = session.calibration(&edges).map_err(|e| CliError::Usage(e.to_string()))?;
    print!("{}", render_summary(&deck.id, args, stats, &bins));
    if let Some(path) = &args.json {
        write_json(
            path,
            &json!({
                "deck": deck.id,
                "agent": args.agent,
                "n": args.n,
                "seed": args.seed,
                "stats": stats,
                "calibration": bins,
            }),
        )?;
    }
    Ok(())
}

fn render_summary(deck: &str, args: &SimulateArgs, stats: &SessionStats, bins: &[CalibrationBin]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "deck: {deck}  agent: {}  n: {}  seed: {}", args.agent, args.n, args.seed);
    let _ = writeln!(
        out,
        "total_points: {:.6} (display {})  mean_points: {:.6}",
        stats.total_points,
        display_round(stats.total_points),
        stats.mean_points
    );
    for (kind, k) in &stats.by_kind {
        let _ = writeln!(out, "  {kind:<18}  n={:<6}  total={:.6}  mean={:.6}", k.predictions, k.total_points, k.mean_points);
    }
    if let Some(cov) = &stats.interval_coverage {
        let freq = cov.frequency.map_or("-".to_string(), |f| format!("{f:.4}"));
        let _ = writeln!(out, "interval coverage: {}/{} = {freq}", cov.covered, cov.intervals);
    }
    if stats.by_kind.keys().any(|k| !k.is_interval()) {
        let _ = writeln!(out, "calibration:");
        let _ = writeln!(out, "  {:>13}  {:>6}  {:>10}  {:>10}  {:>8}", "bin", "count", "stated", "observed", "z");
        for b in bins {
            let range = format!("[{:.2}, {:.2}{}", b.lower, b.upper, if b.upper == 1.0 { "]" } else { ")" });
            match (b.mean_confidence, b.frequency_correct, b.standard_error()) {
                (Some(stated), Some(observed), Some(se)) => {
                    let z = if se > 0.0 { format!("{:+.2}", (observed - stated) / se) } else { "-".into() };
                    let _ = writeln!(out, "  {range:>13}  {:>6}  {stated:>10.4}  {observed:>10.4}  {z:>8}", b.count);
                }
                _ => {
                    let _ = writeln!(out, "  {range:>13}  {:>6}  {:>10}  {:>10}  {:>8}", 0, "-", "-", "-");
                }
            }
        }
    }
    out
}
