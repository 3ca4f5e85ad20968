//! Linear-softmax policy over trajectory-building actions.
//!
//! A rollout alternates `SELECT_CELL` and `EMIT_OP` tokens to build steps and
//! ends with one of three `EMIT_ANSWER` tokens (running value, last read
//! value, or the table's most frequent value) or with `STOP`. Every token is
//! drawn from `softmax(theta . phi(state, a))` over the legal actions.

mod cues;
mod rollout;
mod snapshot;
mod state;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table_env::{CellRef, MAX_COLS, MAX_ROWS};
use crate::vcot::OpToken;

pub use cues::{parse_question, QuestionCues, QuestionKind};
pub use rollout::{sample_trajectory, Rollout, TokenContext, TokenRecord};
pub use snapshot::{FeatureSpec, PolicySnapshot, FEATURE_SPEC_VERSION};
pub use state::{action_logprobs, logprob_grad, RolloutState, FEATURE_DIM, FEATURE_NAMES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerSource {
    Running,
    LastRead,
    Mode,
}

impl AnswerSource {
    pub const ALL: [AnswerSource; 3] = [AnswerSource::Running, AnswerSource::LastRead, AnswerSource::Mode];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    SelectCell(CellRef),
    EmitOp(OpToken),
    EmitAnswer(AnswerSource),
    Stop,
}

const CELL_IDS: u32 = (MAX_ROWS * MAX_COLS) as u32;
const OP_BASE: u32 = CELL_IDS;
const ANSWER_BASE: u32 = OP_BASE + OpToken::ALL.len() as u32;
const STOP_ID: u32 = ANSWER_BASE + AnswerSource::ALL.len() as u32;
/// Size of the action vocabulary.
pub const VOCAB_SIZE: u32 = STOP_ID + 1;

impl Action {
    /// Stable vocabulary index.
    pub fn id(self) -> u32 {
        match self {
            Action::SelectCell(c) => (c.row * MAX_COLS + c.col) as u32,
            Action::EmitOp(op) => OP_BASE + OpToken::ALL.iter().position(|&o| o == op).expect("known op") as u32,
            Action::EmitAnswer(s) => {
                ANSWER_BASE + AnswerSource::ALL.iter().position(|&x| x == s).expect("known source") as u32
            }
            Action::Stop => STOP_ID,
        }
    }

    pub fn from_id(id: u32) -> Option<Action> {
        match id {
            _ if id < CELL_IDS => Some(Action::SelectCell(CellRef::new(
                id as usize / MAX_COLS,
                id as usize % MAX_COLS,
            ))),
            _ if id < ANSWER_BASE => Some(Action::EmitOp(OpToken::ALL[(id - OP_BASE) as usize])),
            _ if id < STOP_ID => Some(Action::EmitAnswer(AnswerSource::ALL[(id - ANSWER_BASE) as usize])),
            STOP_ID => Some(Action::Stop),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    /// Token budget per rollout.
    pub max_tokens: usize,
    /// Standard deviation of the seeded Gaussian initialization; 0 gives the
    /// uniform policy.
    pub init_sigma: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            max_tokens: 12,
            init_sigma: 0.0,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_tokens < 2 {
            return Err(Error::Config(format!(
                "max_tokens must be at least 2, got {}",
                self.max_tokens
            )));
        }
        if !(self.init_sigma.is_finite() && self.init_sigma >= 0.0) {
            return Err(Error::Config(format!(
                "init_sigma must be non-negative, got {}",
                self.init_sigma
            )));
        }
        Ok(())
    }
}

/// Row-major `n x dim` feature matrix, one row per legal action.
pub fn logits(theta: &[f64], features: &[f64]) -> Vec<f64> {
    features
        .chunks_exact(theta.len())
        .map(|row| row.iter().zip(theta).map(|(f, t)| f * t).sum())
        .collect()
}

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

/// `phi(chosen) - sum_a pi(a) phi(a)`: gradient of `log pi(chosen)` in theta.
pub fn score_function(theta: &[f64], features: &[f64], chosen: usize) -> Vec<f64> {
    let d = theta.len();
    let lp = log_softmax(&logits(theta, features));
    let mut g = features[chosen * d..(chosen + 1) * d].to_vec();
    for (row, l) in features.chunks_exact(d).zip(&lp) {
        let p = l.exp();
        for (gi, f) in g.iter_mut().zip(row) {
            *gi -= p * f;
        }
    }
    g
}
