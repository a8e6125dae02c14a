//! Scoring and training engine for probabilistic forecasts.
//!
//! The crate is split along the lines of the training pipeline:
//!
//! - [`scoring`]: pure scoring formulas for choice predictions (quadratic, Brier,
//!   log, the Practical transform) and prediction intervals (linear, log,
//!   Distance, Order of Magnitude).
//! - [`properness`]: brute-force expected-score oracles that check which rules
//!   reward honest reporting and measure the incentive gap of those that don't.
//! - [`bank`]: deck ingestion, validation and answer grading.
//! - [`session`]: append-only event logs, running totals and calibration curves.
//! - [`sim`]: seeded simulated forecasters used to exercise sessions end to end.

// `!(a < b)` is the NaN-rejecting form of `a >= b` throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bank;
pub mod properness;
pub mod scoring;
pub mod session;
pub mod sim;

pub use bank::{Deck, Question, QuestionKind};
pub use scoring::{ChoiceParams, IntervalForecast, IntervalParams, ScoreError, ScoreResult};
