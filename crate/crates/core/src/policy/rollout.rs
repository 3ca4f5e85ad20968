use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::snapshot::PolicySnapshot;
use super::state::{RolloutState, FEATURE_DIM};
use super::{log_softmax, logits, Action};
use crate::error::Result;
use crate::seed;
use crate::table_env::{Query, Table};
use crate::vcot::Trajectory;

/// One sampled decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub action_id: u32,
    pub old_logprob: f64,
}

/// What is needed to re-evaluate a token's probability under new parameters:
/// the feature rows of all legal actions and the chosen row.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenContext {
    pub features: Vec<f64>,
    pub chosen: usize,
}

impl TokenContext {
    pub fn n_actions(&self) -> usize {
        self.features.len() / FEATURE_DIM
    }
}

/// A sampled trajectory with its per-token records.
#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    pub trajectory: Trajectory,
    pub tokens: Vec<TokenRecord>,
    pub contexts: Vec<TokenContext>,
}

impl Rollout {
    /// `|y|`, the number of sampled tokens.
    pub fn token_len(&self) -> usize {
        self.tokens.len()
    }
}

/// Inverse-CDF draw from log-probabilities.
pub(crate) fn draw(logprobs: &[f64], rng: &mut seed::Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, l) in logprobs.iter().enumerate() {
        acc += l.exp();
        if u < acc {
            return i;
        }
    }
    logprobs.len() - 1
}

/// Sample one trajectory. Only the question text and the table are visible
/// to the policy. Deterministic in `seed`.
pub fn sample_trajectory(
    table: &Table,
    query: &Query,
    snapshot: &PolicySnapshot,
    seed: u64,
    max_tokens: usize,
) -> Result<Rollout> {
    let mut rng = seed::rng(seed);
    let mut state = RolloutState::new(table, &query.question, max_tokens);
    let mut tokens = Vec::new();
    let mut contexts = Vec::new();
    while !state.is_done() {
        let actions = state.legal_actions();
        if actions.is_empty() {
            break;
        }
        let features = state.feature_matrix(&actions);
        let lp = log_softmax(&logits(&snapshot.theta, &features));
        let chosen = draw(&lp, &mut rng);
        let action: Action = actions[chosen];
        tokens.push(TokenRecord {
            action_id: action.id(),
            old_logprob: lp[chosen],
        });
        contexts.push(TokenContext { features, chosen });
        state.apply(action)?;
    }
    Ok(Rollout {
        trajectory: state.trajectory(),
        tokens,
        contexts,
    })
}
