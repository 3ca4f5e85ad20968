//! Critic-gated composite reward.
//!
//! With `R_base = r_fmt + r_acc`, a correct answer (`R_base > 1`) is gated by
//! the process score: above `tau_high` it earns a bonus `alpha`; below
//! `tau_low` it keeps only its format credit plus `beta`; in between the
//! bonus is scaled by `r_proc`. Everything else is left at `R_base`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verifier::RewardBreakdown;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub alpha: f64,
    pub beta: f64,
    pub tau_high: f64,
    pub tau_low: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            alpha: 0.5,
            beta: 0.2,
            tau_high: 0.9,
            tau_low: 0.3,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::RewardConfig(m));
        let RewardConfig {
            alpha,
            beta,
            tau_high,
            tau_low,
        } = *self;
        if [alpha, beta, tau_high, tau_low].iter().any(|x| !x.is_finite()) {
            return bad("all parameters must be finite".into());
        }
        if alpha < 0.0 || beta < 0.0 {
            return bad(format!("alpha and beta must be non-negative, got {alpha} and {beta}"));
        }
        if !(0.0 <= tau_low && tau_low < tau_high && tau_high <= 1.0) {
            return bad(format!(
                "need 0 <= tau_low < tau_high <= 1, got {tau_low} and {tau_high}"
            ));
        }
        if beta >= 1.0 + alpha {
            return bad(format!("beta ({beta}) must be below 1 + alpha ({})", 1.0 + alpha));
        }
        Ok(())
    }
}

/// Gated reward from the three scores.
pub fn composite(r_fmt: f64, r_acc: f64, r_proc: f64, cfg: &RewardConfig) -> f64 {
    let r_base = r_fmt + r_acc;
    if r_base > 1.0 {
        if r_proc > cfg.tau_high {
            return r_base + cfg.alpha;
        }
        if r_proc < cfg.tau_low {
            return r_fmt + cfg.beta;
        }
        return r_base + cfg.alpha * r_proc;
    }
    r_base
}

pub fn composite_reward(b: &RewardBreakdown, cfg: &RewardConfig) -> f64 {
    composite(b.r_fmt, b.r_acc, b.r_proc, cfg)
}

/// Fill in `composite`.
pub fn apply(mut b: RewardBreakdown, cfg: &RewardConfig) -> RewardBreakdown {
    b.composite = composite_reward(&b, cfg);
    b
}
