use std::fs;
use std::path::Path;

use calibrate_core::bank::{derive_p_rand, load_deck_file, load_deck_dir, Deck};

use crate::{CliError, CliResult};

fn load(path: &Path) -> Result<Deck, CliError> {
    load_deck_file(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn describe(deck: &Deck) {
    let width = deck.questions.iter().map(|q| q.id.len()).max().unwrap_or(0);
    println!("deck {} ({}), rule {}", deck.id, deck.title, deck.scoring_rule.as_str());
    for q in &deck.questions {
        let detail = if q.kind.is_interval() {
            let params = deck.interval_params(q).expect("validated deck");
            format!("true_value={} beta={} c={}", q.true_value().unwrap_or(f64::NAN), deck.beta(q), params.c)
        } else {
            format!("p_rand={}", derive_p_rand(q).expect("validated deck"))
        };
        println!("  {:<width$}  {:<18}  {detail}", q.id, q.kind.as_str());
    }
}

pub fn validate(path: &Path) -> CliResult {
    let deck = load(path)?;
    describe(&deck);
    println!("OK, {} questions", deck.questions.len());
    Ok(())
}

/// Copies a validated deck to `<decks>/<deck id>.json`.
pub fn import(path: &Path, decks: &Path, force: bool) -> CliResult {
    let deck = load(path)?;
    let io = |what: &str, p: &Path, e: std::io::Error| CliError::Data(format!("cannot {what} {}: {e}", p.display()));
    fs::create_dir_all(decks).map_err(|e| io("create", decks, e))?;
    let (existing, _) = load_deck_dir(decks).map_err(|e| io("read", decks, e))?;
    let target = decks.join(format!("{}.json", deck.id));
    let clash = existing.iter().any(|d| d.id == deck.id) || target.exists();
    if clash && !force {
        return Err(CliError::Data(format!(
            "a deck with id {} already exists in {}; pass --force to replace it",
            deck.id,
            decks.display()
        )));
    }
    let body = fs::read(path).map_err(|e| io("read", path, e))?;
    fs::write(&target, body).map_err(|e| io("write", &target, e))?;
    describe(&deck);
    println!("OK, {} questions", deck.questions.len());
    println!("imported to {}", target.display());
    Ok(())
}
