//! Decks of questions: the JSON format, validation, and answer grading.
//!
//! A deck binds one scoring rule. `practical_log` decks hold choice questions
//! (true/false, choose one or k of n, free text, exact number); `distance`
//! and `magnitude` decks hold the matching interval questions.

mod doc;
mod grade;

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scoring::{
    practical_log_choice_score, ChoiceParams, IntervalParams, ScoreError, DEFAULT_BETA, DEFAULT_S_MIN,
};

pub use doc::{DeckDoc, DeckParams, QuestionDoc};
pub use grade::{grade_choice, ChoicePrediction, GradeError, IntervalPrediction, Prediction, Selection};

/// Confidence floor used as `p_rand` for open-ended questions that don't set one.
pub const DEFAULT_OPEN_P_RAND: f64 = 0.01;

#[derive(Debug, Error)]
pub enum DeckError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("question {question}: {reason}")]
    Question { question: String, reason: String },
    #[error("deck {deck}: {reason}")]
    Deck { deck: String, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl DeckError {
    fn question(id: &str, reason: impl Into<String>) -> Self {
        DeckError::Question { question: id.to_string(), reason: reason.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    TrueFalse,
    #[serde(rename = "choose_1_of_n")]
    Choose1OfN,
    #[serde(rename = "choose_k_of_n")]
    ChooseKOfN,
    FreeText,
    NumericExact,
    IntervalDistance,
    IntervalMagnitude,
}

impl QuestionKind {
    pub const ALL: [QuestionKind; 7] = [
        QuestionKind::TrueFalse,
        QuestionKind::Choose1OfN,
        QuestionKind::ChooseKOfN,
        QuestionKind::FreeText,
        QuestionKind::NumericExact,
        QuestionKind::IntervalDistance,
        QuestionKind::IntervalMagnitude,
    ];

    pub fn is_interval(self) -> bool {
        matches!(self, QuestionKind::IntervalDistance | QuestionKind::IntervalMagnitude)
    }

    pub fn is_open_ended(self) -> bool {
        matches!(self, QuestionKind::FreeText | QuestionKind::NumericExact)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionKind::TrueFalse => "true_false",
            QuestionKind::Choose1OfN => "choose_1_of_n",
            QuestionKind::ChooseKOfN => "choose_k_of_n",
            QuestionKind::FreeText => "free_text",
            QuestionKind::NumericExact => "numeric_exact",
            QuestionKind::IntervalDistance => "interval_distance",
            QuestionKind::IntervalMagnitude => "interval_magnitude",
        }
    }
}

impl std::fmt::Display for QuestionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scoring rule a deck is bound to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeckRule {
    PracticalLog,
    Distance,
    Magnitude,
}

impl DeckRule {
    pub fn accepts(self, kind: QuestionKind) -> bool {
        match self {
            DeckRule::PracticalLog => !kind.is_interval(),
            DeckRule::Distance => kind == QuestionKind::IntervalDistance,
            DeckRule::Magnitude => kind == QuestionKind::IntervalMagnitude,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DeckRule::PracticalLog => "practical_log",
            DeckRule::Distance => "distance",
            DeckRule::Magnitude => "magnitude",
        }
    }
}

/// How a question's answer is checked.
#[derive(Debug, Clone, PartialEq)]
pub enum AnswerSpec {
    /// Index of the single correct option (true/false uses 0 = True, 1 = False).
    Option(usize),
    /// Acceptable free-text answers.
    Text(Vec<String>),
    /// The one correct number.
    Number(f64),
    /// True value of an interval question.
    TrueValue(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Question {
    pub id: String,
    pub prompt: String,
    pub kind: QuestionKind,
    pub options: Vec<String>,
    pub k: Option<usize>,
    pub answer: AnswerSpec,
    pub beta: Option<f64>,
    pub p_rand: Option<f64>,
    pub c: Option<f64>,
}

impl Question {
    pub fn option_count(&self) -> usize {
        self.options.len()
    }

    pub fn true_value(&self) -> Option<f64> {
        match self.answer {
            AnswerSpec::TrueValue(v) => Some(v),
            _ => None,
        }
    }
}

/// Probability of answering correctly by guessing uniformly at random.
///
/// `1/2` for true/false, `1/n` for choose one, `k/n` for choose k; open-ended
/// questions carry an explicit value. Interval questions have none.
pub fn derive_p_rand(q: &Question) -> Result<f64, DeckError> {
    let n = q.options.len() as f64;
    match q.kind {
        QuestionKind::TrueFalse => Ok(0.5),
        QuestionKind::Choose1OfN => Ok(1.0 / n),
        QuestionKind::ChooseKOfN => {
            let k = q.k.ok_or_else(|| DeckError::question(&q.id, "choose_k_of_n without k"))?;
            Ok(k as f64 / n)
        }
        QuestionKind::FreeText | QuestionKind::NumericExact => {
            q.p_rand.ok_or_else(|| DeckError::question(&q.id, "open-ended question needs an explicit p_rand"))
        }
        QuestionKind::IntervalDistance | QuestionKind::IntervalMagnitude => {
            Err(DeckError::question(&q.id, "interval questions have no p_rand"))
        }
    }
}

/// A validated, immutable deck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DeckDoc", into = "DeckDoc")]
pub struct Deck {
    pub id: String,
    pub title: String,
    pub scoring_rule: DeckRule,
    pub params: DeckParams,
    pub questions: Vec<Question>,
}

impl Deck {
    pub fn question(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.questions.iter().position(|q| q.id == id)
    }

    /// Practical rule parameters for a choice question.
    pub fn choice_params(&self, q: &Question) -> Result<ChoiceParams, DeckError> {
        let p_rand = derive_p_rand(q)?;
        ChoiceParams::new(
            self.params.s_max.unwrap_or(ChoiceParams::DEFAULT_S_MAX),
            self.params.p_max.unwrap_or(ChoiceParams::DEFAULT_P_MAX),
            p_rand,
        )
        .map_err(|e| DeckError::question(&q.id, e.to_string()))
    }

    /// Interval rule parameters, with the question's `c` taking precedence.
    pub fn interval_params(&self, q: &Question) -> Result<IntervalParams, DeckError> {
        let defaults = match q.kind {
            QuestionKind::IntervalMagnitude => IntervalParams::magnitude(),
            _ => IntervalParams::distance(),
        };
        IntervalParams::new(
            q.c.or(self.params.c).unwrap_or(defaults.c),
            self.params.d.unwrap_or(defaults.d),
            self.params.s_max.unwrap_or(defaults.s_max),
            self.params.s_min.unwrap_or(defaults.s_min),
            self.params.delta.unwrap_or(defaults.delta),
        )
        .map_err(|e| DeckError::question(&q.id, e.to_string()))
    }

    /// Coverage level: question, then deck, then 0.9.
    pub fn beta(&self, q: &Question) -> f64 {
        q.beta.or(self.params.beta).unwrap_or(DEFAULT_BETA)
    }

    pub fn s_min(&self) -> f64 {
        self.params.s_min.unwrap_or(DEFAULT_S_MIN)
    }

    pub fn s_max(&self) -> f64 {
        self.params.s_max.unwrap_or(ChoiceParams::DEFAULT_S_MAX)
    }

    /// Smallest `p_rand` over the deck's choice questions.
    pub fn min_p_rand(&self) -> Option<f64> {
        self.questions
            .iter()
            .filter(|q| !q.kind.is_interval())
            .filter_map(|q| derive_p_rand(q).ok())
            .reduce(f64::min)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("deck serializes")
    }

    fn validate(&self) -> Result<(), DeckError> {
        let deck_err = |reason: String| DeckError::Deck { deck: self.id.clone(), reason };
        if self.id.trim().is_empty() {
            return Err(deck_err("empty deck id".into()));
        }
        if self.questions.is_empty() {
            return Err(deck_err("deck has no questions".into()));
        }
        let mut seen = HashSet::new();
        for q in &self.questions {
            if !seen.insert(q.id.as_str()) {
                return Err(DeckError::question(&q.id, "duplicate question id"));
            }
            if !self.scoring_rule.accepts(q.kind) {
                return Err(DeckError::question(
                    &q.id,
                    format!("{} questions cannot be scored by a {} deck", q.kind, self.scoring_rule.as_str()),
                ));
            }
            if q.kind.is_interval() {
                self.interval_params(q)?;
                let beta = self.beta(q);
                if !(beta > 0.0 && beta < 1.0) {
                    return Err(DeckError::question(&q.id, format!("beta must be in (0, 1), got {beta}")));
                }
            } else {
                let params = self.choice_params(q)?;
                let worst = practical_log_choice_score(params.p_max, false, &params)
                    .map_err(|e: ScoreError| DeckError::question(&q.id, e.to_string()))?
                    .points;
                if worst < self.s_min() - 1e-9 {
                    return Err(DeckError::question(
                        &q.id,
                        format!("worst-case score {worst} falls below s_min {}", self.s_min()),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Reads and validates a deck from JSON.
pub fn load_deck<R: Read>(source: R) -> Result<Deck, DeckError> {
    let doc: DeckDoc = serde_json::from_reader(source).map_err(|e| DeckError::Schema(e.to_string()))?;
    Deck::try_from(doc)
}

pub fn load_deck_str(source: &str) -> Result<Deck, DeckError> {
    load_deck(source.as_bytes())
}

pub fn load_deck_file(path: &Path) -> Result<Deck, DeckError> {
    load_deck(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Decks that loaded, plus `(file name, error)` for those that did not.
pub type DeckScan = (Vec<Deck>, Vec<(String, DeckError)>);

/// Loads every `*.json` deck in a directory, sorted by file name. Decks that
/// fail to load are reported alongside instead of aborting the scan.
pub fn load_deck_dir(dir: &Path) -> Result<DeckScan, std::io::Error> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut decks = Vec::new();
    let mut failures = Vec::new();
    for path in paths {
        match load_deck_file(&path) {
            Ok(deck) => decks.push(deck),
            Err(e) => failures.push((path.display().to_string(), e)),
        }
    }
    Ok((decks, failures))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const MIXED: &str = r#"{
        "id": "mixed", "title": "Mixed bag", "scoring_rule": "practical_log",
        "questions": [
            {"id": "tf", "kind": "true_false", "prompt": "Water boils at 100 C at sea level.", "answer": true},
            {"id": "c1", "kind": "choose_1_of_n", "prompt": "Largest planet?",
             "options": ["Mars", "Jupiter", "Venus", "Mercury"], "answer": "Jupiter"},
            {"id": "ck", "kind": "choose_k_of_n", "prompt": "Truth rating?", "k": 2,
             "options": ["True", "Mostly True", "Half-True", "Mostly False", "False"], "answer": "Mostly True"},
            {"id": "ft", "kind": "free_text", "prompt": "Sport?", "acceptable": ["soccer", "football"]},
            {"id": "ne", "kind": "numeric_exact", "prompt": "Stars on the flag of New Zealand?", "answer": 4,
             "p_rand": 0.05}
        ]
    }"#;

    #[test]
    fn loads_mixed_deck_and_derives_p_rand() {
        let deck = load_deck_str(MIXED).unwrap();
        assert_eq!(deck.questions.len(), 5);
        let p = |id: &str| derive_p_rand(deck.question(id).unwrap()).unwrap();
        assert_eq!(p("tf"), 0.5);
        assert_eq!(p("c1"), 0.25);
        assert!((p("ck") - 0.4).abs() < 1e-15);
        assert_eq!(p("ft"), DEFAULT_OPEN_P_RAND);
        assert_eq!(p("ne"), 0.05);
        assert_eq!(deck.question("c1").unwrap().answer, AnswerSpec::Option(1));
        assert_eq!(deck.min_p_rand(), Some(0.01));
    }

    #[test]
    fn derive_p_rand_requires_explicit_value_for_open_kinds() {
        let deck = load_deck_str(MIXED).unwrap();
        let mut q = deck.question("ft").unwrap().clone();
        q.p_rand = None;
        assert!(derive_p_rand(&q).is_err());
    }

    #[test]
    fn round_trip_is_identity() {
        let deck = load_deck_str(MIXED).unwrap();
        let again = load_deck_str(&deck.to_json_pretty()).unwrap();
        assert_eq!(deck, again);
    }

    fn expect_question_error(json: &str, id: &str, needle: &str) {
        match load_deck_str(json) {
            Err(DeckError::Question { question, reason }) => {
                assert_eq!(question, id);
                assert!(reason.contains(needle), "{reason}");
            }
            other => panic!("expected question error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_ids() {
        let json = r#"{"id":"d","title":"t","scoring_rule":"practical_log","questions":[
            {"id":"a","kind":"true_false","prompt":"p","answer":true},
            {"id":"a","kind":"true_false","prompt":"q","answer":false}]}"#;
        expect_question_error(json, "a", "duplicate question id");
    }

    #[test]
    fn rejects_non_positive_magnitude_truth() {
        let json = r#"{"id":"d","title":"t","scoring_rule":"magnitude","questions":[
            {"id":"m","kind":"interval_magnitude","prompt":"p","true_value":0}]}"#;
        expect_question_error(json, "m", "positive");
    }

    #[test]
    fn rejects_incompatible_rule() {
        let json = r#"{"id":"d","title":"t","scoring_rule":"distance","questions":[
            {"id":"a","kind":"true_false","prompt":"p","answer":true}]}"#;
        expect_question_error(json, "a", "cannot be scored");
    }

    #[test]
    fn rejects_bad_choose_k() {
        let json = r#"{"id":"d","title":"t","scoring_rule":"practical_log","questions":[
            {"id":"k","kind":"choose_k_of_n","prompt":"p","k":3,"options":["a","b","c"],"answer":"a"}]}"#;
        expect_question_error(json, "k", "1 <= k < n");
    }

    #[test]
    fn rejects_ambiguous_answer() {
        let json = r#"{"id":"d","title":"t","scoring_rule":"practical_log","questions":[
            {"id":"c","kind":"choose_1_of_n","prompt":"p","options":["a","a","b"],"answer":"a"}]}"#;
        expect_question_error(json, "c", "duplicate option");
    }

    #[test]
    fn rejects_p_max_that_breaks_the_floor() {
        let json = r#"{"id":"d","title":"t","scoring_rule":"practical_log","params":{"p_max":0.999},"questions":[
            {"id":"a","kind":"true_false","prompt":"p","answer":true}]}"#;
        expect_question_error(json, "a", "below s_min");
    }

    #[test]
    fn schema_errors_name_the_field() {
        let json = r#"{"id":"d","title":"t","scoring_rule":"practical_log","questions":[{"id":"a","prompt":"p"}]}"#;
        match load_deck_str(json) {
            Err(DeckError::Schema(msg)) => assert!(msg.contains("kind"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let json = r#"{"id":"d","title":"t","scoring_rule":"bogus","questions":[]}"#;
        assert!(matches!(load_deck_str(json), Err(DeckError::Schema(_))));
    }

    #[test]
    fn interval_params_resolve_overrides() {
        let json = r#"{"id":"d","title":"t","scoring_rule":"distance","params":{"c":50,"beta":0.8},"questions":[
            {"id":"a","kind":"interval_distance","prompt":"p","true_value":1969},
            {"id":"b","kind":"interval_distance","prompt":"p","true_value":12,"c":2,"beta":0.5}]}"#;
        let deck = load_deck_str(json).unwrap();
        let (a, b) = (deck.question("a").unwrap(), deck.question("b").unwrap());
        assert_eq!(deck.interval_params(a).unwrap().c, 50.0);
        assert_eq!(deck.interval_params(b).unwrap().c, 2.0);
        assert_eq!(deck.beta(a), 0.8);
        assert_eq!(deck.beta(b), 0.5);
        assert_eq!(deck.interval_params(a).unwrap().delta, 0.4);
    }
}
