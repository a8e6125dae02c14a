use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{read_events, CalibrationBin, PredictionEvent, Session, SessionError, SessionStats};
use crate::bank::{Deck, Prediction};

/// Source of event timestamps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clock {
    System,
    /// Every event gets this instant; used for byte-stable fixtures.
    Fixed(DateTime<Utc>),
}

impl Clock {
    pub fn epoch() -> Self {
        Clock::Fixed(DateTime::<Utc>::UNIX_EPOCH)
    }

    pub fn now(&self) -> DateTime<Utc> {
        match self {
            Clock::System => Utc::now(),
            Clock::Fixed(t) => *t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionMeta {
    pub session_id: String,
    pub deck_id: String,
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Presentation order of question ids.
    pub question_order: Vec<String>,
}

/// A session that could not be restored on open.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoreWarning {
    pub path: PathBuf,
    pub reason: String,
}

/// Deck order, or a ChaCha8 shuffle of it when `seed` is given.
pub fn question_order(deck: &Deck, seed: Option<u64>) -> Vec<String> {
    let mut order: Vec<String> = deck.questions.iter().map(|q| q.id.clone()).collect();
    if let Some(seed) = seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    order
}

struct Entry {
    meta: SessionMeta,
    session: Session,
}

/// Sessions keyed by id, each backed by `<id>.meta.json` and `<id>.jsonl`.
///
/// Appends to one session are serialized by that session's lock; the log line
/// is written before memory is updated, so a failed write leaves no trace.
pub struct SessionStore {
    data_dir: Option<PathBuf>,
    clock: Clock,
    sessions: RwLock<HashMap<String, Arc<Mutex<Entry>>>>,
    next_id: AtomicU64,
}

impl SessionStore {
    /// A store that keeps nothing on disk.
    pub fn in_memory(clock: Clock) -> Self {
        SessionStore { data_dir: None, clock, sessions: RwLock::new(HashMap::new()), next_id: AtomicU64::new(1) }
    }

    /// Opens `dir`, creating it if needed, and replays every session found.
    pub fn open(dir: &Path, clock: Clock) -> Result<(Self, Vec<StoreWarning>), SessionError> {
        fs::create_dir_all(dir)?;
        let mut sessions = HashMap::new();
        let mut warnings = Vec::new();
        let mut max_seq = 0;
        let mut metas: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".meta.json"))
            .collect();
        metas.sort();
        for path in metas {
            match restore(dir, &path) {
                Ok(entry) => {
                    max_seq = max_seq.max(sequence_of(&entry.meta.session_id));
                    sessions.insert(entry.meta.session_id.clone(), Arc::new(Mutex::new(entry)));
                }
                Err(e) => warnings.push(StoreWarning { path, reason: e.to_string() }),
            }
        }
        let store = SessionStore {
            data_dir: Some(dir.to_path_buf()),
            clock,
            sessions: RwLock::new(sessions),
            next_id: AtomicU64::new(max_seq + 1),
        };
        Ok((store, warnings))
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    pub fn create(&self, deck: &Deck, seed: Option<u64>) -> Result<SessionMeta, SessionError> {
        let id = format!("s{:06}", self.next_id.fetch_add(1, Ordering::SeqCst));
        let meta = SessionMeta {
            session_id: id.clone(),
            deck_id: deck.id.clone(),
            created_at: self.clock.now(),
            seed,
            question_order: question_order(deck, seed),
        };
        if let Some(dir) = &self.data_dir {
            let body = serde_json::to_vec_pretty(&meta).expect("meta serializes");
            let tmp = dir.join(format!("{id}.meta.json.tmp"));
            fs::write(&tmp, body)?;
            fs::rename(&tmp, dir.join(format!("{id}.meta.json")))?;
            File::create(dir.join(format!("{id}.jsonl")))?;
        }
        let entry = Entry { meta: meta.clone(), session: Session::new(id.clone()) };
        self.sessions.write().expect("store lock").insert(id, Arc::new(Mutex::new(entry)));
        Ok(meta)
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Entry>>, SessionError> {
        self.sessions
            .read()
            .expect("store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::SessionNotFound(id.to_string()))
    }

    fn with<T>(&self, id: &str, f: impl FnOnce(&Entry) -> T) -> Result<T, SessionError> {
        let entry = self.entry(id)?;
        let guard = entry.lock().expect("session lock");
        Ok(f(&guard))
    }

    /// Grades, scores and durably appends one prediction.
    ///
    /// `deck` must be the deck the session was created with.
    pub fn record(
        &self,
        id: &str,
        deck: &Deck,
        question_id: &str,
        prediction: Prediction,
    ) -> Result<PredictionEvent, SessionError> {
        let entry = self.entry(id)?;
        let mut guard = entry.lock().expect("session lock");
        if guard.meta.deck_id != deck.id {
            return Err(SessionError::InvalidPrediction(format!(
                "session {id} plays deck {}, not {}",
                guard.meta.deck_id, deck.id
            )));
        }
        let q = deck.question(question_id).ok_or_else(|| SessionError::QuestionNotFound(question_id.to_string()))?;
        let event = guard.session.prepare(deck, q, prediction, self.clock.now())?;
        if let Some(dir) = &self.data_dir {
            let mut file = OpenOptions::new().append(true).create(true).open(dir.join(format!("{id}.jsonl")))?;
            file.write_all(event.to_json_line().as_bytes())?;
            file.flush()?;
        }
        guard.session.apply(event.clone());
        Ok(event)
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().expect("store lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    pub fn meta(&self, id: &str) -> Result<SessionMeta, SessionError> {
        self.with(id, |e| e.meta.clone())
    }

    pub fn stats(&self, id: &str) -> Result<SessionStats, SessionError> {
        self.with(id, |e| e.session.stats().clone())
    }

    pub fn events(&self, id: &str) -> Result<Vec<PredictionEvent>, SessionError> {
        self.with(id, |e| e.session.events().to_vec())
    }

    pub fn calibration(&self, id: &str, edges: &[f64]) -> Result<Vec<CalibrationBin>, SessionError> {
        self.with(id, |e| e.session.calibration(edges))?
    }

    /// First question in presentation order not yet answered.
    pub fn next_question(&self, id: &str) -> Result<Option<String>, SessionError> {
        self.with(id, |e| e.meta.question_order.iter().find(|q| !e.session.is_answered(q)).cloned())
    }

    /// Number answered and total in the session's deck.
    pub fn progress(&self, id: &str) -> Result<(usize, usize), SessionError> {
        self.with(id, |e| (e.session.events().len(), e.meta.question_order.len()))
    }
}

fn sequence_of(id: &str) -> u64 {
    id.strip_prefix('s').and_then(|n| n.parse().ok()).unwrap_or(0)
}

fn restore(dir: &Path, meta_path: &Path) -> Result<Entry, SessionError> {
    let meta: SessionMeta = serde_json::from_slice(&fs::read(meta_path)?)
        .map_err(|e| SessionError::CorruptLog { line: e.line(), reason: e.to_string() })?;
    let log = dir.join(format!("{}.jsonl", meta.session_id));
    let events = match File::open(&log) {
        Ok(file) => read_events(BufReader::new(file))?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    let session = Session::from_events(meta.session_id.clone(), events)?;
    Ok(Entry { meta, session })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bank::{load_deck_str, ChoicePrediction, Selection};

    const DECK: &str = r#"{
        "id": "tf", "title": "t", "scoring_rule": "practical_log",
        "questions": [
            {"id": "a", "kind": "true_false", "prompt": "A?", "answer": true},
            {"id": "b", "kind": "true_false", "prompt": "B?", "answer": false},
            {"id": "c", "kind": "true_false", "prompt": "C?", "answer": true},
            {"id": "d", "kind": "true_false", "prompt": "D?", "answer": true}
        ]
    }"#;

    fn yes(p: f64) -> Prediction {
        Prediction::Choice(ChoicePrediction { selection: Selection::Boolean(true), confidence: p })
    }

    #[test]
    fn sessions_are_independent() {
        let deck = load_deck_str(DECK).unwrap();
        let store = SessionStore::in_memory(Clock::epoch());
        let s1 = store.create(&deck, None).unwrap().session_id;
        let s2 = store.create(&deck, None).unwrap().session_id;
        assert_ne!(s1, s2);
        store.record(&s1, &deck, "a", yes(0.99)).unwrap();
        assert_eq!(store.stats(&s1).unwrap().total_points, 10.0);
        assert_eq!(store.stats(&s2).unwrap(), SessionStats::default());
        assert_eq!(store.next_question(&s1).unwrap().as_deref(), Some("b"));
        assert_eq!(store.next_question(&s2).unwrap().as_deref(), Some("a"));
    }

    #[test]
    fn errors() {
        let deck = load_deck_str(DECK).unwrap();
        let store = SessionStore::in_memory(Clock::epoch());
        assert!(matches!(store.stats("nope"), Err(SessionError::SessionNotFound(_))));
        let id = store.create(&deck, None).unwrap().session_id;
        assert!(matches!(store.record(&id, &deck, "zz", yes(0.7)), Err(SessionError::QuestionNotFound(_))));
        store.record(&id, &deck, "a", yes(0.7)).unwrap();
        assert!(matches!(store.record(&id, &deck, "a", yes(0.7)), Err(SessionError::DuplicateAnswer(_))));
    }

    #[test]
    fn seeded_order_is_reproducible() {
        let deck = load_deck_str(DECK).unwrap();
        assert_eq!(question_order(&deck, None), vec!["a", "b", "c", "d"]);
        let once = question_order(&deck, Some(7));
        assert_eq!(once, question_order(&deck, Some(7)));
        let mut sorted = once.clone();
        sorted.sort();
        assert_eq!(sorted, vec!["a", "b", "c", "d"]);
    }

    #[test]
    fn reopen_replays_logs() {
        let dir = tempfile::tempdir().unwrap();
        let deck = load_deck_str(DECK).unwrap();
        let (store, warnings) = SessionStore::open(dir.path(), Clock::System).unwrap();
        assert!(warnings.is_empty());
        let id = store.create(&deck, Some(3)).unwrap().session_id;
        let empty = store.create(&deck, None).unwrap().session_id;
        store.record(&id, &deck, "a", yes(0.8)).unwrap();
        store.record(&id, &deck, "b", yes(0.6)).unwrap();
        let stats = store.stats(&id).unwrap();
        let events = store.events(&id).unwrap();
        let meta = store.meta(&id).unwrap();
        drop(store);

        let (again, warnings) = SessionStore::open(dir.path(), Clock::System).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(again.stats(&id).unwrap(), stats);
        assert_eq!(again.events(&id).unwrap(), events);
        assert_eq!(again.meta(&id).unwrap(), meta);
        assert_eq!(again.stats(&empty).unwrap(), SessionStats::default());
        let fresh = again.create(&deck, None).unwrap().session_id;
        assert!(fresh != id && fresh != empty);
    }

    #[test]
    fn corrupt_log_is_skipped_with_warning() {
        let dir = tempfile::tempdir().unwrap();
        let deck = load_deck_str(DECK).unwrap();
        let (store, _) = SessionStore::open(dir.path(), Clock::System).unwrap();
        let bad = store.create(&deck, None).unwrap().session_id;
        let good = store.create(&deck, None).unwrap().session_id;
        drop(store);
        fs::write(dir.path().join(format!("{bad}.jsonl")), "{\"oops\":1}\n").unwrap();
        let (store, warnings) = SessionStore::open(dir.path(), Clock::System).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].reason.contains("line 1"), "{}", warnings[0].reason);
        assert!(store.stats(&bad).is_err());
        assert!(store.stats(&good).is_ok());
    }
}
