//! Seeded simulated forecasters.
//!
//! Each simulated prediction is a fresh instance of a deck question (id
//! `<question>@<round>`) with a latent probability `p` drawn uniformly from
//! `[p_rand, p_max]`. The answer is right with probability `p`; the agent
//! states `distortion(p)`. Interval questions use a uniform belief (in log
//! space for magnitude questions) that contains the true value uniformly, and
//! the agent reports that belief's central `beta` interval, rescaled by the
//! agent's width factor.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bank::{
    derive_p_rand, AnswerSpec, ChoicePrediction, Deck, IntervalPrediction, Prediction, Question, QuestionKind,
    Selection,
};
use crate::session::{PredictionEvent, Session, SessionError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Calibrated,
    Overconfident,
    Underconfident,
    Random,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] =
        [AgentKind::Calibrated, AgentKind::Overconfident, AgentKind::Underconfident, AgentKind::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Calibrated => "calibrated",
            AgentKind::Overconfident => "overconfident",
            AgentKind::Underconfident => "underconfident",
            AgentKind::Random => "random",
        }
    }

    /// Monotone map of `[0, 1]` onto itself fixing both ends.
    pub fn distortion(self, p: f64) -> f64 {
        match self {
            AgentKind::Overconfident => p.sqrt(),
            AgentKind::Underconfident => p * p,
            AgentKind::Calibrated | AgentKind::Random => p,
        }
    }

    /// Reported interval width relative to the honest one.
    pub fn width_factor(self) -> f64 {
        match self {
            AgentKind::Overconfident => 0.5,
            AgentKind::Underconfident => 2.0,
            AgentKind::Calibrated | AgentKind::Random => 1.0,
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown agent {s:?}; expected calibrated, overconfident, underconfident or random"))
    }
}

#[derive(Debug, Clone)]
pub struct SimAgent {
    pub kind: AgentKind,
    pub seed: u64,
    rng: ChaCha8Rng,
}

impl SimAgent {
    pub fn new(kind: AgentKind, seed: u64) -> Self {
        SimAgent { kind, seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// One prediction for `q`, whose answer spec is left untouched.
    pub fn predict(&mut self, deck: &Deck, q: &Question) -> Result<Prediction, SessionError> {
        if q.kind.is_interval() {
            return Ok(Prediction::Interval(self.interval(deck, q)));
        }
        let params = deck.choice_params(q)?;
        let p = self.rng.gen_range(params.p_rand..=params.p_max);
        let (correct, confidence) = match self.kind {
            AgentKind::Random => (self.rng.gen_bool(derive_p_rand(q)?), params.p_rand),
            kind => (self.rng.gen_bool(p), kind.distortion(p)),
        };
        let selection = self.selection(q, correct);
        Ok(Prediction::Choice(ChoicePrediction { selection, confidence }))
    }

    fn selection(&mut self, q: &Question, correct: bool) -> Selection {
        match &q.answer {
            AnswerSpec::Option(marked) => {
                let n = q.options.len();
                let wrong: Vec<usize> = (0..n).filter(|i| i != marked).collect();
                match q.kind {
                    QuestionKind::ChooseKOfN => {
                        let k = q.k.unwrap_or(1);
                        let mut chosen: Vec<usize> = if correct {
                            let mut rest: Vec<usize> =
                                sample(&mut self.rng, wrong.len(), k - 1).into_iter().map(|i| wrong[i]).collect();
                            rest.push(*marked);
                            rest
                        } else {
                            sample(&mut self.rng, wrong.len(), k).into_iter().map(|i| wrong[i]).collect()
                        };
                        chosen.sort_unstable();
                        Selection::Options(chosen)
                    }
                    _ if correct => Selection::Option(*marked),
                    _ => Selection::Option(wrong[self.rng.gen_range(0..wrong.len())]),
                }
            }
            AnswerSpec::Text(accepted) if correct => Selection::Text(accepted[0].clone()),
            AnswerSpec::Text(accepted) => {
                let mut guess = format!("not {}", accepted[0]);
                while accepted.iter().any(|a| a.trim().eq_ignore_ascii_case(guess.trim())) {
                    guess.push('!');
                }
                Selection::Text(guess)
            }
            AnswerSpec::Number(v) if correct => Selection::Number(*v),
            AnswerSpec::Number(v) => Selection::Number(v + 1.0),
            AnswerSpec::TrueValue(v) => Selection::Number(*v),
        }
    }

    fn interval(&mut self, deck: &Deck, q: &Question) -> IntervalPrediction {
        let x = q.true_value().unwrap_or(0.0);
        let beta = deck.beta(q);
        let u: f64 = self.rng.gen();
        let factor = self.kind.width_factor();
        let magnitude = q.kind == QuestionKind::IntervalMagnitude;
        // Belief is uniform over a window of width `w` holding x at relative
        // position u (log space for magnitude questions).
        let (at, w) = if magnitude { (x.ln(), 10f64.ln()) } else { (x, x.abs().max(1.0)) };
        let center = match self.kind {
            AgentKind::Random => at + w * self.rng.gen_range(-5.0..5.0),
            _ => at + w * (0.5 - u),
        };
        let half = 0.5 * beta * w * factor;
        let (lo, hi) = (center - half, center + half);
        if magnitude {
            IntervalPrediction { lower: lo.exp(), upper: hi.exp() }
        } else {
            IntervalPrediction { lower: lo, upper: hi }
        }
    }
}

/// Synthetic question instance for round `round`.
pub fn instance(q: &Question, round: usize) -> Question {
    Question { id: format!("{}@{round}", q.id), ..q.clone() }
}

/// `n` predictions cycling through the deck in order, recorded into one session.
pub fn simulate(
    deck: &Deck,
    kind: AgentKind,
    n: usize,
    seed: u64,
    timestamp: impl Fn() -> DateTime<Utc>,
) -> Result<Session, SessionError> {
    let mut agent = SimAgent::new(kind, seed);
    let mut session = Session::new(format!("sim-{kind}-{seed}"));
    let len = deck.questions.len();
    for i in 0..n {
        let q = instance(&deck.questions[i % len], i / len);
        let prediction = agent.predict(deck, &q)?;
        session.record(deck, &q, prediction, timestamp())?;
    }
    Ok(session)
}

/// Writes a session's events as JSON lines.
pub fn write_log<W: std::io::Write>(events: &[PredictionEvent], mut out: W) -> std::io::Result<()> {
    for e in events {
        out.write_all(e.to_json_line().as_bytes())?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bank::load_deck_str;
    use crate::session::DEFAULT_BIN_EDGES;

    const TF: &str = r#"{"id":"tf","title":"t","scoring_rule":"practical_log",
        "questions":[{"id":"a","kind":"true_false","prompt":"?","answer":true},
                     {"id":"b","kind":"true_false","prompt":"?","answer":false}]}"#;

    fn epoch() -> DateTime<Utc> {
        DateTime::<Utc>::UNIX_EPOCH
    }

    #[test]
    fn distortions_fix_endpoints_and_are_monotone() {
        for kind in AgentKind::ALL {
            assert_eq!(kind.distortion(0.0), 0.0);
            assert_eq!(kind.distortion(1.0), 1.0);
            let mut prev = 0.0;
            for i in 0..=100 {
                let d = kind.distortion(i as f64 / 100.0);
                assert!((0.0..=1.0).contains(&d) && d >= prev);
                prev = d;
            }
        }
        assert_eq!("overconfident".parse::<AgentKind>().unwrap(), AgentKind::Overconfident);
        assert!("smug".parse::<AgentKind>().is_err());
    }

    #[test]
    fn same_seed_same_session() {
        let deck = load_deck_str(TF).unwrap();
        let a = simulate(&deck, AgentKind::Calibrated, 200, 9, epoch).unwrap();
        let b = simulate(&deck, AgentKind::Calibrated, 200, 9, epoch).unwrap();
        assert_eq!(a, b);
        let c = simulate(&deck, AgentKind::Calibrated, 200, 10, epoch).unwrap();
        assert_ne!(a.events(), c.events());
    }

    #[test]
    fn random_agent_scores_zero() {
        let deck = load_deck_str(TF).unwrap();
        let s = simulate(&deck, AgentKind::Random, 500, 1, epoch).unwrap();
        assert!(s.stats().total_points.abs() < 1e-9);
    }

    #[test]
    fn overconfident_curve_sits_below_diagonal() {
        let deck = load_deck_str(TF).unwrap();
        let s = simulate(&deck, AgentKind::Overconfident, 4000, 2, epoch).unwrap();
        let bins = s.calibration(&DEFAULT_BIN_EDGES).unwrap();
        let (mut below, mut filled) = (0, 0);
        for b in bins.iter().filter(|b| b.count >= 50) {
            filled += 1;
            below += usize::from(b.frequency_correct.unwrap() < b.mean_confidence.unwrap());
        }
        assert!(filled >= 3 && below == filled, "{bins:?}");
    }

    #[test]
    fn calibrated_interval_coverage_tracks_beta() {
        let deck = load_deck_str(
            r#"{"id":"m","title":"m","scoring_rule":"magnitude",
                "questions":[{"id":"q","kind":"interval_magnitude","prompt":"?","true_value":250}]}"#,
        )
        .unwrap();
        let s = simulate(&deck, AgentKind::Calibrated, 2000, 4, epoch).unwrap();
        let freq = s.stats().interval_coverage.as_ref().unwrap().frequency.unwrap();
        assert!((freq - 0.9).abs() < 3.0 * (0.09f64 / 2000.0).sqrt(), "{freq}");
        let narrow = simulate(&deck, AgentKind::Overconfident, 2000, 4, epoch).unwrap();
        assert!(narrow.stats().interval_coverage.as_ref().unwrap().frequency.unwrap() < 0.6);
    }

    #[test]
    fn every_choice_kind_can_be_simulated() {
        let deck = load_deck_str(crate::bank::tests::MIXED).unwrap();
        for kind in AgentKind::ALL {
            let s = simulate(&deck, kind, 70, 5, epoch).unwrap();
            assert_eq!(s.stats().predictions, 70);
        }
    }
}
