//! Event-sourced training sessions.
//!
//! A session is an append-only list of [`PredictionEvent`]s. Everything else
//! (totals, per-kind breakdown, calibration bins) is a fold over that list, so
//! replaying a log reproduces the in-memory state bit for bit.

mod store;

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bank::{
    grade_choice, AnswerSpec, ChoicePrediction, Deck, DeckError, DeckRule, GradeError, IntervalPrediction,
    Prediction, Question, QuestionKind,
};
use crate::scoring::{
    dist_score_final, mag_score_final, practical_log_choice_score, IntervalForecast, ScoreError,
};

pub use store::{Clock, SessionMeta, SessionStore, StoreWarning};

/// Bin edges for binary-style decks; matches a 50–99% confidence slider.
pub const DEFAULT_BIN_EDGES: [f64; 7] = [0.5, 0.55, 0.65, 0.75, 0.85, 0.95, 1.0];

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("session {0} not found")]
    SessionNotFound(String),
    #[error("question {0} not found in the session's deck")]
    QuestionNotFound(String),
    #[error("question {0} was already answered in this session")]
    DuplicateAnswer(String),
    #[error("invalid prediction: {0}")]
    InvalidPrediction(String),
    #[error(transparent)]
    Grade(#[from] GradeError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Deck(#[from] DeckError),
    #[error("invalid bin edges: {0}")]
    BadEdges(String),
    #[error("event log line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One scored prediction. Immutable once written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionEvent {
    #[serde(with = "rfc3339")]
    pub timestamp: DateTime<Utc>,
    pub session_id: String,
    pub question_id: String,
    pub question_kind: QuestionKind,
    pub prediction: Prediction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamped_confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_value: Option<f64>,
    pub points: f64,
}

impl PredictionEvent {
    pub fn to_json_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("event serializes");
        line.push('\n');
        line
    }

    /// Whether the submitted interval (before any expansion) holds the true value.
    pub fn covered(&self) -> Option<bool> {
        match (&self.prediction, self.true_value) {
            (Prediction::Interval(iv), Some(x)) => Some(iv.lower <= x && x <= iv.upper),
            _ => None,
        }
    }
}

mod rfc3339 {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_rfc3339_opts(SecondsFormat::AutoSi, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&raw)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

/// The graded, scored outcome of one prediction, before it becomes an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub clamped_confidence: Option<f64>,
    pub correct: Option<bool>,
    pub true_value: Option<f64>,
    pub points: f64,
}

/// Grades and scores `pred` against `q` under the deck's rule.
///
/// `q` need not be one of `deck.questions`; only the deck's rule and
/// parameters are used.
pub fn score_prediction(deck: &Deck, q: &Question, pred: &Prediction) -> Result<Scored, SessionError> {
    match (deck.scoring_rule, pred) {
        (DeckRule::PracticalLog, Prediction::Choice(choice)) => score_choice(deck, q, choice),
        (DeckRule::Distance | DeckRule::Magnitude, Prediction::Interval(iv)) => score_interval(deck, q, iv),
        (DeckRule::PracticalLog, Prediction::Interval(_)) => Err(SessionError::InvalidPrediction(format!(
            "{} question expects a selection and a confidence",
            q.kind
        ))),
        (_, Prediction::Choice(_)) => {
            Err(SessionError::InvalidPrediction(format!("{} question expects lower and upper bounds", q.kind)))
        }
    }
}

fn score_choice(deck: &Deck, q: &Question, choice: &ChoicePrediction) -> Result<Scored, SessionError> {
    let params = deck.choice_params(q)?;
    let p = choice.confidence;
    if !(0.0..=1.0).contains(&p) {
        return Err(ScoreError::ProbabilityOutOfRange { value: p, min: 0.0, max: 1.0 }.into());
    }
    let correct = grade_choice(q, choice)?;
    let clamped = p.max(params.p_rand).min(params.p_max);
    let points = practical_log_choice_score(clamped, correct, &params)?.points;
    Ok(Scored { clamped_confidence: Some(clamped), correct: Some(correct), true_value: None, points })
}

fn score_interval(deck: &Deck, q: &Question, iv: &IntervalPrediction) -> Result<Scored, SessionError> {
    let x = match q.answer {
        AnswerSpec::TrueValue(x) => x,
        _ => return Err(GradeError::ShapeMismatch { kind: q.kind, got: "interval" }.into()),
    };
    let params = deck.interval_params(q)?;
    let forecast = IntervalForecast::new(iv.lower, iv.upper, deck.beta(q))?;
    let result = match q.kind {
        QuestionKind::IntervalMagnitude => mag_score_final(x, &forecast, &params)?,
        _ => dist_score_final(x, &forecast, &params)?,
    };
    Ok(Scored { clamped_confidence: None, correct: None, true_value: Some(x), points: result.points })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KindStats {
    pub predictions: u64,
    pub total_points: f64,
    pub mean_points: f64,
}

impl KindStats {
    fn push(&mut self, points: f64) {
        self.predictions += 1;
        self.total_points += points;
        self.mean_points = self.total_points / self.predictions as f64;
    }
}

/// Fraction of submitted intervals that contain the true value.
///
/// Not a calibration curve: a coverage-style summary for interval questions,
/// to be read against the deck's `beta`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalCoverage {
    pub intervals: u64,
    pub covered: u64,
    pub frequency: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub total_points: f64,
    pub predictions: u64,
    pub mean_points: f64,
    pub by_kind: BTreeMap<QuestionKind, KindStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval_coverage: Option<IntervalCoverage>,
}

impl SessionStats {
    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a PredictionEvent>) -> Self {
        let mut stats = SessionStats::default();
        for e in events {
            stats.push(e);
        }
        stats
    }

    /// Folds one more event in. Summation order is event order.
    pub fn push(&mut self, e: &PredictionEvent) {
        self.predictions += 1;
        self.total_points += e.points;
        self.mean_points = self.total_points / self.predictions as f64;
        self.by_kind.entry(e.question_kind).or_default().push(e.points);
        if let Some(covered) = e.covered() {
            let cov = self.interval_coverage.get_or_insert_with(IntervalCoverage::default);
            cov.intervals += 1;
            cov.covered += u64::from(covered);
            cov.frequency = Some(cov.covered as f64 / cov.intervals as f64);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub count: u64,
    /// `None` when the bin is empty.
    pub frequency_correct: Option<f64>,
    /// `None` when the bin is empty.
    pub mean_confidence: Option<f64>,
}

impl CalibrationBin {
    /// `√(p(1 − p)/count)` at the bin's mean confidence.
    pub fn standard_error(&self) -> Option<f64> {
        let p = self.mean_confidence?;
        Some((p * (1.0 - p) / self.count as f64).sqrt())
    }
}

pub fn validate_edges(edges: &[f64]) -> Result<(), SessionError> {
    if edges.len() < 2 {
        return Err(SessionError::BadEdges("need at least two edges".into()));
    }
    if let Some(e) = edges.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(SessionError::BadEdges(format!("edge {e} outside [0, 1]")));
    }
    if let Some(w) = edges.windows(2).find(|w| !(w[0] < w[1])) {
        return Err(SessionError::BadEdges(format!("edges must increase strictly: {} then {}", w[0], w[1])));
    }
    Ok(())
}

/// Parses `"0.5,0.6,1"`.
pub fn parse_edges(raw: &str) -> Result<Vec<f64>, SessionError> {
    let edges = raw
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| SessionError::BadEdges(format!("not a number: {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    validate_edges(&edges)?;
    Ok(edges)
}

/// Default edges for a deck; `0` is prepended when some question allows
/// confidence below one half.
pub fn default_edges(deck: &Deck) -> Vec<f64> {
    let mut edges = DEFAULT_BIN_EDGES.to_vec();
    if deck.min_p_rand().is_some_and(|p| p < DEFAULT_BIN_EDGES[0]) {
        edges.insert(0, 0.0);
    }
    edges
}

/// Index of the bin holding `p`: `[e_i, e_{i+1})`, the last bin closed.
/// `None` outside `[e_0, e_m]`.
pub fn bin_index(edges: &[f64], p: f64) -> Option<usize> {
    let last = edges.len() - 1;
    if !(p >= edges[0] && p <= edges[last]) {
        return None;
    }
    Some(edges.partition_point(|e| *e <= p).saturating_sub(1).min(last - 1))
}

/// Buckets choice events by clamped confidence.
pub fn calibration_curve<'a>(
    events: impl IntoIterator<Item = &'a PredictionEvent>,
    edges: &[f64],
) -> Result<Vec<CalibrationBin>, SessionError> {
    validate_edges(edges)?;
    let mut counts = vec![(0u64, 0u64, 0.0f64); edges.len() - 1];
    for e in events {
        let (Some(p), Some(correct)) = (e.clamped_confidence, e.correct) else { continue };
        if let Some(i) = bin_index(edges, p) {
            counts[i].0 += 1;
            counts[i].1 += u64::from(correct);
            counts[i].2 += p;
        }
    }
    Ok(edges
        .windows(2)
        .zip(counts)
        .map(|(w, (count, hits, conf))| CalibrationBin {
            lower: w[0],
            upper: w[1],
            count,
            frequency_correct: (count > 0).then(|| hits as f64 / count as f64),
            mean_confidence: (count > 0).then(|| conf / count as f64),
        })
        .collect())
}

/// Parses a JSONL event log. Blank lines are skipped; the first bad line
/// halts with its 1-based number.
pub fn read_events<R: BufRead>(reader: R) -> Result<Vec<PredictionEvent>, SessionError> {
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| SessionError::CorruptLog { line: i + 1, reason: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line)
            .map_err(|e| SessionError::CorruptLog { line: i + 1, reason: e.to_string() })?;
        events.push(event);
    }
    Ok(events)
}

pub fn replay<R: BufRead>(reader: R) -> Result<SessionStats, SessionError> {
    Ok(SessionStats::from_events(&read_events(reader)?))
}

/// In-memory session state: the event list and its running fold.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub id: String,
    events: Vec<PredictionEvent>,
    answered: HashSet<String>,
    stats: SessionStats,
}

impl Session {
    pub fn new(id: impl Into<String>) -> Self {
        Session { id: id.into(), events: Vec::new(), answered: HashSet::new(), stats: SessionStats::default() }
    }

    /// Rebuilds a session from logged events, rejecting foreign or repeated ones.
    pub fn from_events(id: impl Into<String>, events: Vec<PredictionEvent>) -> Result<Self, SessionError> {
        let mut session = Session::new(id);
        for (i, e) in events.into_iter().enumerate() {
            if e.session_id != session.id {
                return Err(SessionError::CorruptLog {
                    line: i + 1,
                    reason: format!("event belongs to session {}", e.session_id),
                });
            }
            if session.answered.contains(&e.question_id) {
                return Err(SessionError::CorruptLog {
                    line: i + 1,
                    reason: format!("second answer to {}", e.question_id),
                });
            }
            session.apply(e);
        }
        Ok(session)
    }

    pub fn events(&self) -> &[PredictionEvent] {
        &self.events
    }

    pub fn stats(&self) -> &SessionStats {
        &self.stats
    }

    pub fn is_answered(&self, question_id: &str) -> bool {
        self.answered.contains(question_id)
    }

    pub fn calibration(&self, edges: &[f64]) -> Result<Vec<CalibrationBin>, SessionError> {
        calibration_curve(&self.events, edges)
    }

    /// Grades and scores without mutating the session.
    pub fn prepare(
        &self,
        deck: &Deck,
        q: &Question,
        prediction: Prediction,
        timestamp: DateTime<Utc>,
    ) -> Result<PredictionEvent, SessionError> {
        if self.answered.contains(&q.id) {
            return Err(SessionError::DuplicateAnswer(q.id.clone()));
        }
        let scored = score_prediction(deck, q, &prediction)?;
        Ok(PredictionEvent {
            timestamp,
            session_id: self.id.clone(),
            question_id: q.id.clone(),
            question_kind: q.kind,
            prediction,
            clamped_confidence: scored.clamped_confidence,
            correct: scored.correct,
            true_value: scored.true_value,
            points: scored.points,
        })
    }

    /// Appends an event produced by [`Session::prepare`].
    pub fn apply(&mut self, event: PredictionEvent) {
        self.answered.insert(event.question_id.clone());
        self.stats.push(&event);
        self.events.push(event);
    }

    /// `prepare` then `apply`, for sessions without a backing log.
    pub fn record(
        &mut self,
        deck: &Deck,
        q: &Question,
        prediction: Prediction,
        timestamp: DateTime<Utc>,
    ) -> Result<PredictionEvent, SessionError> {
        let event = self.prepare(deck, q, prediction, timestamp)?;
        self.apply(event.clone());
        Ok(event)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bank::{load_deck_str, Selection};
    use crate::scoring::DEFAULT_S_MIN;

    const BINARY: &str = r#"{
        "id": "tf", "title": "t", "scoring_rule": "practical_log",
        "questions": [
            {"id": "a", "kind": "true_false", "prompt": "A?", "answer": true},
            {"id": "b", "kind": "true_false", "prompt": "B?", "answer": false},
            {"id": "c", "kind": "choose_1_of_n", "prompt": "C?", "options": ["x", "y", "z", "w"], "answer": "y"}
        ]
    }"#;

    const DIST: &str = r#"{
        "id": "d", "title": "d", "scoring_rule": "distance",
        "questions": [{"id": "q", "kind": "interval_distance", "prompt": "Q?", "true_value": 10}]
    }"#;

    fn at() -> DateTime<Utc> {
        DateTime::parse_from_rfc3339("2026-01-02T03:04:05Z").unwrap().with_timezone(&Utc)
    }

    fn choice(option: usize, confidence: f64) -> Prediction {
        Prediction::Choice(ChoicePrediction { selection: Selection::Option(option), confidence })
    }

    fn answer(s: &mut Session, deck: &Deck, qid: &str, p: Prediction) -> Result<PredictionEvent, SessionError> {
        let q = deck.question(qid).unwrap().clone();
        s.record(deck, &q, p, at())
    }

    #[test]
    fn pinned_binary_points() {
        let deck = load_deck_str(BINARY).unwrap();
        let mut s = Session::new("s1");
        let hit = answer(&mut s, &deck, "a", choice(0, 0.99)).unwrap();
        assert_eq!(hit.points, 10.0);
        assert_eq!(hit.correct, Some(true));
        let miss = answer(&mut s, &deck, "b", choice(0, 0.99)).unwrap();
        assert!((miss.points - DEFAULT_S_MIN).abs() <= 1e-9);
        let s2 = &mut Session::new("s2");
        assert_eq!(answer(s2, &deck, "a", choice(1, 0.5)).unwrap().points, 0.0);
    }

    #[test]
    fn confidence_is_clamped_but_range_checked() {
        let deck = load_deck_str(BINARY).unwrap();
        let mut s = Session::new("s");
        let e = answer(&mut s, &deck, "a", choice(0, 1.0)).unwrap();
        assert_eq!(e.clamped_confidence, Some(0.99));
        let e = answer(&mut s, &deck, "c", choice(1, 0.1)).unwrap();
        assert_eq!(e.clamped_confidence, Some(0.25));
        assert_eq!(e.points, 0.0);
        assert!(matches!(
            answer(&mut s, &deck, "b", choice(0, 1.5)),
            Err(SessionError::Score(ScoreError::ProbabilityOutOfRange { .. }))
        ));
        assert!(answer(&mut s, &deck, "b", choice(0, f64::NAN)).is_err());
    }

    #[test]
    fn duplicates_and_shapes_are_rejected_without_side_effects() {
        let deck = load_deck_str(BINARY).unwrap();
        let mut s = Session::new("s");
        answer(&mut s, &deck, "a", choice(0, 0.7)).unwrap();
        let before = s.clone();
        assert!(matches!(answer(&mut s, &deck, "a", choice(0, 0.7)), Err(SessionError::DuplicateAnswer(_))));
        let iv = Prediction::Interval(IntervalPrediction { lower: 0.0, upper: 1.0 });
        assert!(matches!(answer(&mut s, &deck, "b", iv), Err(SessionError::InvalidPrediction(_))));
        assert!(matches!(answer(&mut s, &deck, "c", choice(7, 0.7)), Err(SessionError::Grade(_))));
        assert_eq!(s, before);
    }

    #[test]
    fn interval_event_near_peak() {
        let deck = load_deck_str(DIST).unwrap();
        let mut s = Session::new("s");
        let iv = Prediction::Interval(IntervalPrediction { lower: 9.9, upper: 10.1 });
        let e = answer(&mut s, &deck, "q", iv).unwrap();
        assert_eq!(e.true_value, Some(10.0));
        assert!(e.points > 9.9 && e.points < 10.0, "{}", e.points);
        let cov = s.stats().interval_coverage.clone().unwrap();
        assert_eq!((cov.intervals, cov.covered), (1, 1));
    }

    #[test]
    fn calibration_direct_count() {
        let deck = load_deck_str(BINARY).unwrap();
        let mut s = Session::new("s");
        answer(&mut s, &deck, "a", choice(0, 0.6)).unwrap();
        answer(&mut s, &deck, "b", choice(0, 0.6)).unwrap();
        let bins = s.calibration(&DEFAULT_BIN_EDGES).unwrap();
        let bin = bins.iter().find(|b| b.lower == 0.55).unwrap();
        assert_eq!(bin.count, 2);
        assert_eq!(bin.frequency_correct, Some(0.5));
        assert!((bin.mean_confidence.unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(bins.iter().map(|b| b.count).sum::<u64>(), 2);
    }

    #[test]
    fn empty_bins_have_no_frequency() {
        let bins = calibration_curve(&[], &DEFAULT_BIN_EDGES).unwrap();
        assert_eq!(bins.len(), 6);
        assert!(bins.iter().all(|b| b.count == 0 && b.frequency_correct.is_none()));
        let json = serde_json::to_value(&bins[0]).unwrap();
        assert!(json["frequency_correct"].is_null());
    }

    #[test]
    fn bin_edges_are_half_open_with_closed_top() {
        let edges = DEFAULT_BIN_EDGES;
        assert_eq!(bin_index(&edges, 0.5), Some(0));
        assert_eq!(bin_index(&edges, 0.55), Some(1));
        assert_eq!(bin_index(&edges, 0.9499), Some(4));
        assert_eq!(bin_index(&edges, 0.99), Some(5));
        assert_eq!(bin_index(&edges, 1.0), Some(5));
        assert_eq!(bin_index(&edges, 0.3), None);
        assert_eq!(bin_index(&[0.0, 1.0], 0.0), Some(0));
    }

    #[test]
    fn default_edges_extend_below_half() {
        let deck = load_deck_str(BINARY).unwrap();
        assert_eq!(default_edges(&deck)[0], 0.0);
        let tf = load_deck_str(
            r#"{"id":"x","title":"x","scoring_rule":"practical_log",
                "questions":[{"id":"a","kind":"true_false","prompt":"?","answer":true}]}"#,
        )
        .unwrap();
        assert_eq!(default_edges(&tf), DEFAULT_BIN_EDGES.to_vec());
    }

    #[test]
    fn bad_edges() {
        for edges in [vec![0.5], vec![0.5, 0.5], vec![0.6, 0.5], vec![-0.1, 0.5], vec![0.5, 1.1]] {
            assert!(matches!(validate_edges(&edges), Err(SessionError::BadEdges(_))), "{edges:?}");
        }
        assert_eq!(parse_edges(" 0.5, 0.75 ,1").unwrap(), vec![0.5, 0.75, 1.0]);
        assert!(parse_edges("0.5,x").is_err());
    }

    #[test]
    fn replay_matches_memory_bit_for_bit() {
        let deck = load_deck_str(BINARY).unwrap();
        let mut s = Session::new("s");
        let mut log = String::new();
        for (q, opt, p) in [("a", 0, 0.73), ("b", 1, 0.61), ("c", 3, 0.4)] {
            log.push_str(&answer(&mut s, &deck, q, choice(opt, p)).unwrap().to_json_line());
            let replayed = replay(log.as_bytes()).unwrap();
            assert_eq!(&replayed, s.stats());
        }
        let events = read_events(log.as_bytes()).unwrap();
        assert_eq!(events, s.events());
        let sum: f64 = events.iter().map(|e| e.points).sum();
        assert!((s.stats().total_points - sum).abs() <= 1e-9);
    }

    #[test]
    fn replay_reports_line_numbers() {
        assert_eq!(replay("".as_bytes()).unwrap(), SessionStats::default());
        let deck = load_deck_str(BINARY).unwrap();
        let mut s = Session::new("s");
        let line = answer(&mut s, &deck, "a", choice(0, 0.8)).unwrap().to_json_line();
        let log = format!("{line}\n{{not json\n{line}");
        match replay(log.as_bytes()) {
            Err(SessionError::CorruptLog { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn from_events_rejects_foreign_and_repeated() {
        let deck = load_deck_str(BINARY).unwrap();
        let mut s = Session::new("s");
        let e = answer(&mut s, &deck, "a", choice(0, 0.8)).unwrap();
        assert!(Session::from_events("other", vec![e.clone()]).is_err());
        assert!(Session::from_events("s", vec![e.clone(), e]).is_err());
    }

    #[test]
    fn event_wire_format() {
        let deck = load_deck_str(BINARY).unwrap();
        let mut s = Session::new("s");
        let e = answer(&mut s, &deck, "a", choice(0, 0.8)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&e.to_json_line()).unwrap();
        assert_eq!(v["timestamp"], "2026-01-02T03:04:05Z");
        assert_eq!(v["question_kind"], "true_false");
        assert_eq!(v["prediction"]["selection"]["option"], 0);
        assert!(v.get("true_value").is_none());
    }
}
