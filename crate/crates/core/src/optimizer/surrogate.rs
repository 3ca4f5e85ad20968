use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::active_set::ActiveSet;
use crate::error::{Error, Result};
use crate::policy::{log_softmax, logits, score_function, PolicySnapshot, Rollout};
use crate::verifier::RewardBreakdown;

/// Importance-ratio clipping bounds `[1 - eps_low, 1 + eps_high]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clip {
    pub eps_low: f64,
    pub eps_high: f64,
}

/// G rollouts for one query with their rewards, advantages and active set.
#[derive(Clone, Debug)]
pub struct GroupBatch {
    pub query_id: String,
    pub rollouts: Vec<Rollout>,
    pub breakdowns: Vec<RewardBreakdown>,
    /// Training rewards `R(y_i)` for the variant.
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
    pub active: ActiveSet,
}

impl GroupBatch {
    /// `rho_{i,t}` of every token under `theta`.
    pub fn token_ratios(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        self.rollouts
            .iter()
            .map(|r| {
                r.contexts
                    .iter()
                    .zip(&r.tokens)
                    .map(|(c, t)| (log_softmax(&logits(theta, &c.features))[c.chosen] - t.old_logprob).exp())
                    .collect()
            })
            .collect()
    }
}

/// `min(rho * A, clip(rho) * A)` and whether the unclipped term is the one
/// selected (the only case with a gradient).
pub fn token_objective(rho: f64, adv: f64, clip: Clip) -> (f64, bool) {
    let unclipped = rho * adv;
    let clipped = rho.clamp(1.0 - clip.eps_low, 1.0 + clip.eps_high) * adv;
    if unclipped <= clipped {
        (unclipped, true)
    } else {
        (clipped, false)
    }
}

fn group_objective(batch: &GroupBatch, theta: &[f64], clip: Clip) -> Result<(f64, Vec<f64>)> {
    let d = theta.len();
    let mut value = 0.0;
    let mut grad = vec![0.0; d];
    let n_active = batch.active.indices.len();
    if n_active == 0 {
        return Err(Error::Group(format!(
            "query {} has an empty active set",
            batch.query_id
        )));
    }
    for &i in &batch.active.indices {
        let r = &batch.rollouts[i];
        let adv = batch.advantages[i];
        let len = r.token_len();
        if len == 0 {
            return Err(Error::Group(format!(
                "query {} rollout {i} has no tokens",
                batch.query_id
            )));
        }
        let w = 1.0 / (len as f64 * n_active as f64);
        for (ctx, tok) in r.contexts.iter().zip(&r.tokens) {
            if ctx.features.len() % d != 0 {
                return Err(Error::FeatureSpecMismatch {
                    expected: format!("D={d}"),
                    found: format!("{} feature values per token", ctx.features.len()),
                });
            }
            let lp = log_softmax(&logits(theta, &ctx.features))[ctx.chosen];
            let rho = (lp - tok.old_logprob).exp();
            let (v, active) = token_objective(rho, adv, clip);
            value += w * v;
            if active && adv != 0.0 {
                let s = score_function(theta, &ctx.features, ctx.chosen);
                for (g, si) in grad.iter_mut().zip(s) {
                    *g += w * adv * rho * si;
                }
            }
        }
    }
    Ok((value, grad))
}

/// Surrogate objective averaged over query groups, and its exact gradient
/// at `theta_new`. The ratio denominators are the log-probabilities
/// recorded when `snapshot_old` sampled the rollouts.
pub fn surrogate_and_grad(
    batches: &[GroupBatch],
    snapshot_old: &PolicySnapshot,
    theta_new: &[f64],
    clip: Clip,
) -> Result<(f64, Vec<f64>)> {
    if theta_new.len() != snapshot_old.theta.len() || theta_new.len() != snapshot_old.feature_spec.dim {
        return Err(Error::FeatureSpecMismatch {
            expected: snapshot_old.feature_spec.to_string(),
            found: format!("D={}", theta_new.len()),
        });
    }
    let d = theta_new.len();
    if batches.is_empty() {
        return Ok((0.0, vec![0.0; d]));
    }
    let parts = batches
        .par_iter()
        .map(|b| group_objective(b, theta_new, clip))
        .collect::<Result<Vec<_>>>()?;
    let n = batches.len() as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; d];
    for (v, g) in parts {
        value += v / n;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b / n;
        }
    }
    Ok((value, grad))
}
