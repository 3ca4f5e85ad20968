use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::active_set::select_active_set;
use super::advantage::normalize_advantages;
use super::surrogate::{surrogate_and_grad, GroupBatch};
use super::{OptimizerConfig, Variant};
use crate::error::{Error, Result};
use crate::policy::{sample_trajectory, PolicyConfig, PolicySnapshot};
use crate::reward::{self, RewardConfig};
use crate::seed;
use crate::table_env::Episode;
use crate::verifier::{self, Path};

/// Path counts over a step's rollouts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathHistogram {
    pub rigorous: usize,
    pub hallucination: usize,
    pub shortcut: usize,
    pub faithful_wrong: usize,
}

impl PathHistogram {
    pub fn add(&mut self, p: Path) {
        *self.slot(p) += 1;
    }

    fn slot(&mut self, p: Path) -> &mut usize {
        match p {
            Path::Rigorous => &mut self.rigorous,
            Path::Hallucination => &mut self.hallucination,
            Path::Shortcut => &mut self.shortcut,
            Path::FaithfulWrong => &mut self.faithful_wrong,
        }
    }

    pub fn count(&self, p: Path) -> usize {
        match p {
            Path::Rigorous => self.rigorous,
            Path::Hallucination => self.hallucination,
            Path::Shortcut => self.shortcut,
            Path::FaithfulWrong => self.faithful_wrong,
        }
    }

    pub fn total(&self) -> usize {
        Path::ALL.iter().map(|&p| self.count(p)).sum()
    }

    pub fn frequency(&self, p: Path) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.count(p) as f64 / n as f64,
        }
    }
}

/// Summary of one optimizer step, one metrics record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub variant: Variant,
    /// Mean training reward of the variant (composite for PGPO, `R_base`
    /// otherwise).
    pub mean_reward: f64,
    /// Mean `R_base`, comparable across variants.
    pub mean_outcome_reward: f64,
    pub accuracy: f64,
    pub mean_process: f64,
    pub paths: PathHistogram,
    pub n_queries: usize,
    pub n_rollouts: usize,
    pub active_mean: f64,
    pub active_min: usize,
    pub active_max: usize,
    pub fallback_events: usize,
    pub mean_token_len: f64,
    /// Surrogate value at the sampling parameters.
    pub objective: f64,
    pub grad_norm: f64,
}

/// Sample, score and build the group for one query.
fn build_group(
    b: usize,
    ep: &Episode,
    old: &PolicySnapshot,
    cfg: &OptimizerConfig,
    reward_cfg: &RewardConfig,
    policy_cfg: &PolicyConfig,
    seed: u64,
) -> Result<GroupBatch> {
    let rollouts = (0..cfg.group_size)
        .map(|g| {
            let s = seed::derive(seed, &[seed::tag::ROLLOUT, b as u64, g as u64]);
            sample_trajectory(&ep.table, &ep.query, old, s, policy_cfg.max_tokens)
        })
        .collect::<Result<Vec<_>>>()?;
    let breakdowns: Vec<_> = rollouts
        .iter()
        .map(|r| {
            reward::apply(
                verifier::verify_trajectory(&r.trajectory, &ep.table, &ep.query),
                reward_cfg,
            )
        })
        .collect();
    let rewards: Vec<f64> = breakdowns
        .iter()
        .map(|bd| {
            if cfg.variant.uses_process_reward() {
                bd.composite
            } else {
                bd.r_base
            }
        })
        .collect();
    let advantages = normalize_advantages(&rewards, cfg.std_floor)?;
    let lens: Vec<usize> = rollouts.iter().map(|r| r.token_len()).collect();
    let active = select_active_set(&lens, &cfg.effective_bands())?;
    Ok(GroupBatch {
        query_id: ep.query.query_id.clone(),
        rollouts,
        breakdowns,
        rewards,
        advantages,
        active,
    })
}

/// One update: sample `G` rollouts per episode from `snapshot_old`, score
/// and reward them per the variant, and take `inner_epochs` ascent steps on
/// the surrogate. Rollouts run in parallel on per-rollout seed streams and
/// every reduction is sequential, so the result does not depend on
/// scheduling.
pub fn train_step(
    episodes: &[Episode],
    snapshot_old: &PolicySnapshot,
    cfg: &OptimizerConfig,
    reward_cfg: &RewardConfig,
    policy_cfg: &PolicyConfig,
    seed: u64,
) -> Result<(PolicySnapshot, StepReport)> {
    cfg.validate()?;
    reward_cfg.validate()?;
    policy_cfg.validate()?;
    if episodes.is_empty() {
        return Err(Error::Group("empty query batch".into()));
    }
    let batches = episodes
        .par_iter()
        .enumerate()
        .map(|(b, ep)| build_group(b, ep, snapshot_old, cfg, reward_cfg, policy_cfg, seed))
        .collect::<Result<Vec<_>>>()?;

    let clip = cfg.clip();
    let mut theta = snapshot_old.theta.clone();
    let mut objective = 0.0;
    let mut grad_norm = 0.0;
    for epoch in 0..cfg.inner_epochs {
        let (j, g) = surrogate_and_grad(&batches, snapshot_old, &theta, clip)?;
        if epoch == 0 {
            objective = j;
            grad_norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        }
        for (t, gi) in theta.iter_mut().zip(&g) {
            *t += cfg.learning_rate * gi;
        }
    }

    let mut paths = PathHistogram::default();
    let (mut reward_sum, mut outcome_sum, mut acc_sum, mut proc_sum, mut len_sum) = (0.0, 0.0, 0.0, 0.0, 0usize);
    for b in &batches {
        for ((bd, r), ro) in b.breakdowns.iter().zip(&b.rewards).zip(&b.rollouts) {
            paths.add(bd.path);
            reward_sum += r;
            outcome_sum += bd.r_base;
            acc_sum += bd.r_acc;
            proc_sum += bd.r_proc;
            len_sum += ro.token_len();
        }
    }
    let n = paths.total().max(1) as f64;
    let sizes: Vec<usize> = batches.iter().map(|b| b.active.indices.len()).collect();
    let report = StepReport {
        step: 0,
        variant: cfg.variant,
        mean_reward: reward_sum / n,
        mean_outcome_reward: outcome_sum / n,
        accuracy: acc_sum / n,
        mean_process: proc_sum / n,
        paths,
        n_queries: batches.len(),
        n_rollouts: paths.total(),
        active_mean: sizes.iter().sum::<usize>() as f64 / sizes.len() as f64,
        active_min: sizes.iter().copied().min().unwrap_or(0),
        active_max: sizes.iter().copied().max().unwrap_or(0),
        fallback_events: batches.iter().filter(|b| b.active.fallback).count(),
        mean_token_len: len_sum as f64 / n,
        objective,
        grad_norm,
    };
    Ok((PolicySnapshot::from_theta(theta)?, report))
}
