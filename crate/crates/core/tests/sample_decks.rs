use std::path::PathBuf;

use calibrate_core::bank::{load_deck_dir, QuestionKind};
use calibrate_core::sim::{simulate, AgentKind};
use chrono::{DateTime, Utc};

fn deck_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../decks")
}

#[test]
fn shipped_decks_load_cleanly() {
    let (decks, failures) = load_deck_dir(&deck_dir()).unwrap();
    assert!(failures.is_empty(), "{failures:?}");
    let ids: Vec<&str> = decks.iter().map(|d| d.id.as_str()).collect();
    assert_eq!(ids, ["distances", "general-knowledge", "magnitudes", "true-or-false"]);
    let mixed = &decks[1];
    assert_eq!(mixed.questions.len(), 7);
    for kind in [
        QuestionKind::TrueFalse,
        QuestionKind::Choose1OfN,
        QuestionKind::ChooseKOfN,
        QuestionKind::FreeText,
        QuestionKind::NumericExact,
    ] {
        assert!(mixed.questions.iter().any(|q| q.kind == kind), "{kind}");
    }
}

#[test]
fn shipped_decks_survive_simulation() {
    let (decks, _) = load_deck_dir(&deck_dir()).unwrap();
    for deck in &decks {
        for kind in AgentKind::ALL {
            let s = simulate(deck, kind, 100, 1, || DateTime::<Utc>::UNIX_EPOCH).unwrap();
            assert_eq!(s.stats().predictions, 100, "{} {kind}", deck.id);
        }
    }
}
