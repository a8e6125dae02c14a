//! Wire form of decks and the conversion to validated [`Deck`]s.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{AnswerSpec, Deck, DeckError, DeckRule, Question, QuestionKind, DEFAULT_OPEN_P_RAND};

const TRUE_FALSE_OPTIONS: [&str; 2] = ["True", "False"];

/// Deck-wide parameter overrides. Anything left out falls back to the rule's
/// defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeckParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// `p_rand` for open-ended questions that don't set their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_p_rand: Option<f64>,
    /// Confidence granularity offered by clients, in probability units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeckDoc {
    pub id: String,
    pub title: String,
    pub scoring_rule: DeckRule,
    #[serde(default)]
    pub params: DeckParams,
    pub questions: Vec<QuestionDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionDoc {
    pub id: String,
    pub kind: QuestionKind,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptable: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_rand: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

impl TryFrom<DeckDoc> for Deck {
    type Error = DeckError;

    fn try_from(doc: DeckDoc) -> Result<Self, Self::Error> {
        let open_p_rand = doc.params.open_p_rand.unwrap_or(DEFAULT_OPEN_P_RAND);
        let questions = doc
            .questions
            .into_iter()
            .map(|q| question_from_doc(q, open_p_rand))
            .collect::<Result<Vec<_>, _>>()?;
        let deck = Deck { id: doc.id, title: doc.title, scoring_rule: doc.scoring_rule, params: doc.params, questions };
        deck.validate()?;
        Ok(deck)
    }
}

impl From<Deck> for DeckDoc {
    fn from(deck: Deck) -> Self {
        DeckDoc {
            id: deck.id,
            title: deck.title,
            scoring_rule: deck.scoring_rule,
            params: deck.params,
            questions: deck.questions.into_iter().map(question_to_doc).collect(),
        }
    }
}

fn reject_field(id: &str, kind: QuestionKind, field: &str, present: bool) -> Result<(), DeckError> {
    if present {
        Err(DeckError::question(id, format!("field `{field}` does not apply to {kind} questions")))
    } else {
        Ok(())
    }
}

fn option_answer(id: &str, options: &[String], answer: Option<&Value>) -> Result<usize, DeckError> {
    match answer {
        Some(Value::String(text)) => {
            let hits: Vec<usize> = options.iter().enumerate().filter(|(_, o)| *o == text).map(|(i, _)| i).collect();
            match hits.as_slice() {
                [i] => Ok(*i),
                [] => Err(DeckError::question(id, format!("answer {text:?} is not one of the options"))),
                _ => Err(DeckError::question(id, format!("answer {text:?} matches several options"))),
            }
        }
        Some(Value::Number(n)) => match n.as_u64() {
            Some(i) if (i as usize) < options.len() => Ok(i as usize),
            _ => Err(DeckError::question(id, format!("answer index {n} out of range"))),
        },
        Some(other) => Err(DeckError::question(id, format!("answer must be an option text or index, got {other}"))),
        None => Err(DeckError::question(id, "missing `answer`")),
    }
}

fn checked_options(id: &str, options: Option<Vec<String>>, min: usize) -> Result<Vec<String>, DeckError> {
    let options = options.ok_or_else(|| DeckError::question(id, "missing `options`"))?;
    if options.len() < min {
        return Err(DeckError::question(id, format!("need at least {min} options, got {}", options.len())));
    }
    for (i, o) in options.iter().enumerate() {
        if o.trim().is_empty() {
            return Err(DeckError::question(id, format!("option {i} is blank")));
        }
        if options[..i].contains(o) {
            return Err(DeckError::question(id, format!("duplicate option {o:?}")));
        }
    }
    Ok(options)
}

fn question_from_doc(doc: QuestionDoc, open_p_rand: f64) -> Result<Question, DeckError> {
    let QuestionDoc { id, kind, prompt, options, k, answer, acceptable, true_value, beta, p_rand, c } = doc;
    if id.trim().is_empty() {
        return Err(DeckError::question(&id, "empty question id"));
    }
    if prompt.trim().is_empty() {
        return Err(DeckError::question(&id, "empty prompt"));
    }
    let interval = kind.is_interval();
    reject_field(&id, kind, "k", k.is_some() && kind != QuestionKind::ChooseKOfN)?;
    reject_field(&id, kind, "true_value", true_value.is_some() && !interval)?;
    reject_field(&id, kind, "beta", beta.is_some() && !interval)?;
    reject_field(&id, kind, "c", c.is_some() && !interval)?;
    reject_field(&id, kind, "p_rand", p_rand.is_some() && !kind.is_open_ended())?;
    reject_field(&id, kind, "acceptable", acceptable.is_some() && kind != QuestionKind::FreeText)?;
    reject_field(
        &id,
        kind,
        "options",
        options.is_some() && !matches!(kind, QuestionKind::TrueFalse | QuestionKind::Choose1OfN | QuestionKind::ChooseKOfN),
    )?;
    reject_field(&id, kind, "answer", answer.is_some() && interval)?;

    let (options, k, answer) = match kind {
        QuestionKind::TrueFalse => {
            let options = match options {
                None => TRUE_FALSE_OPTIONS.iter().map(|s| s.to_string()).collect(),
                Some(o) if o.len() == 2 => checked_options(&id, Some(o), 2)?,
                Some(o) => return Err(DeckError::question(&id, format!("true_false needs 2 options, got {}", o.len()))),
            };
            let index = match answer.as_ref() {
                Some(Value::Bool(b)) => usize::from(!*b),
                other => option_answer(&id, &options, other)?,
            };
            (options, None, AnswerSpec::Option(index))
        }
        QuestionKind::Choose1OfN => {
            let options = checked_options(&id, options, 2)?;
            let index = option_answer(&id, &options, answer.as_ref())?;
            (options, None, AnswerSpec::Option(index))
        }
        QuestionKind::ChooseKOfN => {
            let options = checked_options(&id, options, 2)?;
            let k = k.ok_or_else(|| DeckError::question(&id, "missing `k`"))?;
            if !(1 <= k && k < options.len()) {
                return Err(DeckError::question(&id, format!("need 1 <= k < n, got k={k} n={}", options.len())));
            }
            let index = option_answer(&id, &options, answer.as_ref())?;
            (options, Some(k), AnswerSpec::Option(index))
        }
        QuestionKind::FreeText => {
            let mut accepted = acceptable.unwrap_or_default();
            match answer {
                Some(Value::String(s)) => accepted.push(s),
                Some(other) => return Err(DeckError::question(&id, format!("free_text answer must be text, got {other}"))),
                None => {}
            }
            if accepted.is_empty() || accepted.iter().any(|a| a.trim().is_empty()) {
                return Err(DeckError::question(&id, "free_text needs non-blank `acceptable` answers"));
            }
            (Vec::new(), None, AnswerSpec::Text(accepted))
        }
        QuestionKind::NumericExact => match answer.as_ref().and_then(Value::as_f64) {
            Some(v) if v.is_finite() => (Vec::new(), None, AnswerSpec::Number(v)),
            _ => return Err(DeckError::question(&id, "numeric_exact needs a numeric `answer`")),
        },
        QuestionKind::IntervalDistance | QuestionKind::IntervalMagnitude => {
            let v = true_value.ok_or_else(|| DeckError::question(&id, "missing `true_value`"))?;
            if !v.is_finite() {
                return Err(DeckError::question(&id, "true_value must be finite"));
            }
            if kind == QuestionKind::IntervalMagnitude && v <= 0.0 {
                return Err(DeckError::question(&id, format!("magnitude true_value must be positive, got {v}")));
            }
            (Vec::new(), None, AnswerSpec::TrueValue(v))
        }
    };
    let p_rand = if kind.is_open_ended() { Some(p_rand.unwrap_or(open_p_rand)) } else { None };
    Ok(Question { id, prompt, kind, options, k, answer, beta, p_rand, c })
}

fn question_to_doc(q: Question) -> QuestionDoc {
    let mut doc = QuestionDoc {
        id: q.id,
        kind: q.kind,
        prompt: q.prompt,
        options: None,
        k: q.k,
        answer: None,
        acceptable: None,
        true_value: None,
        beta: q.beta,
        p_rand: q.p_rand,
        c: q.c,
    };
    match q.answer {
        AnswerSpec::Option(i) if q.kind == QuestionKind::TrueFalse => {
            if q.options != TRUE_FALSE_OPTIONS {
                doc.options = Some(q.options);
            }
            doc.answer = Some(Value::Bool(i == 0));
        }
        AnswerSpec::Option(i) => {
            doc.answer = Some(Value::String(q.options[i].clone()));
            doc.options = Some(q.options);
        }
        AnswerSpec::Text(accepted) => doc.acceptable = Some(accepted),
        AnswerSpec::Number(v) => doc.answer = serde_json::Number::from_f64(v).map(Value::Number),
        AnswerSpec::TrueValue(v) => doc.true_value = Some(v),
    }
    doc
}
