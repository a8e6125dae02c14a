use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AnswerSpec, Question, QuestionKind};

/// What the forecaster picked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Selection {
    /// Option index (true/false: 0 = True, 1 = False).
    Option(usize),
    /// The `k` chosen option indices.
    Options(Vec<usize>),
    Text(String),
    Number(f64),
    /// True/false shorthand.
    Boolean(bool),
}

/// An answer plus the probability that it is correct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoicePrediction {
    pub selection: Selection,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalPrediction {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prediction {
    Choice(ChoicePrediction),
    Interval(IntervalPrediction),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GradeError {
    #[error("{kind} question cannot take a {got} selection")]
    ShapeMismatch { kind: QuestionKind, got: &'static str },
    #[error("option index {index} out of range for {count} options")]
    OptionOutOfRange { index: usize, count: usize },
    #[error("expected {expected} distinct options, got {got:?}")]
    WrongSelectionCount { expected: usize, got: Vec<usize> },
    #[error("interval questions are not graded as right or wrong")]
    NotAChoiceQuestion,
}

fn selection_name(s: &Selection) -> &'static str {
    match s {
        Selection::Option(_) => "option",
        Selection::Options(_) => "options",
        Selection::Text(_) => "text",
        Selection::Number(_) => "number",
        Selection::Boolean(_) => "boolean",
    }
}

fn normalize(text: &str) -> String {
    text.trim().to_lowercase()
}

/// Whether the selection is correct.
///
/// Free text matches case-insensitively after trimming; numbers must match
/// exactly; choose-k is correct when the marked option is among the chosen.
pub fn grade_choice(q: &Question, pred: &ChoicePrediction) -> Result<bool, GradeError> {
    let mismatch = || GradeError::ShapeMismatch { kind: q.kind, got: selection_name(&pred.selection) };
    let in_range = |i: usize| {
        if i < q.options.len() {
            Ok(i)
        } else {
            Err(GradeError::OptionOutOfRange { index: i, count: q.options.len() })
        }
    };
    match (&q.answer, q.kind, &pred.selection) {
        (AnswerSpec::Option(correct), QuestionKind::TrueFalse, Selection::Boolean(b)) => {
            Ok(*correct == usize::from(!*b))
        }
        (AnswerSpec::Option(correct), QuestionKind::TrueFalse | QuestionKind::Choose1OfN, Selection::Option(i)) => {
            Ok(in_range(*i)? == *correct)
        }
        (AnswerSpec::Option(correct), QuestionKind::ChooseKOfN, Selection::Options(chosen)) => {
            let k = q.k.unwrap_or(1);
            let mut distinct = chosen.clone();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() != k || chosen.len() != k {
                return Err(GradeError::WrongSelectionCount { expected: k, got: chosen.clone() });
            }
            for &i in &distinct {
                in_range(i)?;
            }
            Ok(distinct.contains(correct))
        }
        (AnswerSpec::Text(accepted), QuestionKind::FreeText, Selection::Text(answer)) => {
            let answer = normalize(answer);
            Ok(accepted.iter().any(|a| normalize(a) == answer))
        }
        (AnswerSpec::Number(v), QuestionKind::NumericExact, Selection::Number(x)) => Ok(x == v),
        (AnswerSpec::TrueValue(_), _, _) => Err(GradeError::NotAChoiceQuestion),
        _ => Err(mismatch()),
    }
}
