use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use calibrate_core::session::Clock;
use calibrate_server::{router, AppState};
use clap::Parser;

/// Serves decks and training sessions over HTTP.
#[derive(Debug, Parser)]
#[command(name = "calibrate-server", version)]
struct Args {
    /// Address to listen on.
    #[arg(long, env = "CALIBRATE_LISTEN", default_value = "127.0.0.1:8080")]
    listen: String,
    /// Directory of deck JSON files.
    #[arg(long, env = "CALIBRATE_DECKS", default_value = "decks")]
    decks: PathBuf,
    /// Directory holding session logs; created if missing.
    #[arg(long, env = "CALIBRATE_DATA", default_value = "data")]
    data: PathBuf,
    /// Stamp every event with the Unix epoch instead of the wall clock.
    #[arg(long)]
    fixed_clock: bool,
}

#[tokio::main]
async fn main() -> ExitCode {
    let args = Args::parse();
    let clock = if args.fixed_clock { Clock::epoch() } else { Clock::System };
    let state = match AppState::load(&args.decks, &args.data, clock) {
        Ok(state) => state,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    for w in state.warnings() {
        eprintln!("warning: {w}");
    }
    let listener = match tokio::net::TcpListener::bind(&args.listen).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot listen on {}: {e}", args.listen);
            return ExitCode::from(3);
        }
    };
    eprintln!("listening on http://{}", args.listen);
    let app = router(Arc::new(state));
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    match axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
