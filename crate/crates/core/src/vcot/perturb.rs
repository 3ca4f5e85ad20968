use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{ChainState, OpToken, Trajectory};
use crate::error::{Error, Result};
use crate::seed;
use crate::table_env::{CellRef, CellValue, Table};

/// Edit applied to one chosen step.
///
/// Only `CorruptAnchor` zeroes the edited step's score, so it is the kind
/// whose process score tracks `1 - severity` to within `1/(2K)`. A
/// corrupted value keeps its anchor credit (1/3 per step). The structural
/// kinds change the number or order of steps; their scores are graded but
/// neither calibrated nor monotone in severity (two swaps can cancel).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PerturbKind {
    /// Point the step at a different in-bounds cell, keeping its claims.
    CorruptAnchor,
    /// Claim a different value that occurs elsewhere in the table; later
    /// intermediates are recomputed so the error is local to the step.
    CorruptValue,
    DropStep,
    /// Exchange the step with its successor (or predecessor for the last).
    SwapSteps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub severity: f64,
    pub kinds: Vec<PerturbKind>,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(severity: f64, kinds: &[PerturbKind], seed: u64) -> Self {
        PerturbationSpec {
            severity,
            kinds: kinds.to_vec(),
            seed,
        }
    }
}

/// Number of steps edited at `severity` on a `k`-step chain, rounding half up.
pub(crate) fn edit_count(severity: f64, k: usize) -> usize {
    ((severity * k as f64 + 0.5).floor() as usize).min(k)
}

/// Corrupt a clean chain. The edited steps are a prefix of a seeded
/// permutation and each step's edit is drawn from its own stream, so for a
/// fixed seed the edits at a lower severity are a subset of those at a
/// higher one. Returns the corrupted chain and its target process score
/// `1 - severity`.
pub fn perturb(traj: &Trajectory, spec: &PerturbationSpec, table: &Table) -> Result<(Trajectory, f64)> {
    let s = spec.severity;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Perturbation(format!("severity must be in [0, 1], got {s}")));
    }
    let k = traj.steps.len();
    if s > 0.0 && k == 0 {
        return Err(Error::Perturbation("cannot corrupt a chain with no steps".into()));
    }
    let mut kinds = spec.kinds.clone();
    kinds.sort();
    kinds.dedup();
    if s > 0.0 && kinds.is_empty() {
        return Err(Error::Perturbation("no perturbation kinds given".into()));
    }
    if kinds == [PerturbKind::SwapSteps] && s > 0.0 && k < 2 {
        return Err(Error::Perturbation("swapping needs at least two steps".into()));
    }
    let n = edit_count(s, k);
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut seed::rng(seed::derive(spec.seed, &[seed::tag::PERTURB])));
    let mut chosen: Vec<(usize, PerturbKind, seed::Rng)> = order[..n]
        .iter()
        .map(|&i| {
            let mut rng = seed::rng(seed::derive(spec.seed, &[seed::tag::PERTURB, 1, i as u64]));
            let mut kind = kinds[rng.random_range(0..kinds.len())];
            if kind == PerturbKind::SwapSteps && k < 2 {
                kind = *kinds
                    .iter()
                    .find(|&&x| x != PerturbKind::SwapSteps)
                    .expect("checked above");
            }
            (i, kind, rng)
        })
        .collect();
    chosen.sort_by_key(|c| c.0);

    let mut out = traj.clone();
    let chain_anchors: HashSet<CellRef> = traj.anchors().collect();
    let mut value_edited = false;
    for (i, kind, rng) in chosen.iter_mut() {
        let step = &mut out.steps[*i];
        match kind {
            PerturbKind::CorruptAnchor => {
                let candidates: Vec<CellRef> = table
                    .cell_refs()
                    .filter(|c| !chain_anchors.contains(c))
                    .filter(|&c| table.cell(c).is_some_and(|v| !v.same_value(&step.claimed_value)))
                    .collect();
                step.anchor = *candidates
                    .get(rng.random_range(0..candidates.len().max(1)))
                    .ok_or_else(|| Error::Perturbation(format!("no alternative anchor for step {i}")))?;
            }
            PerturbKind::CorruptValue => {
                let mut candidates: Vec<CellValue> = Vec::new();
                for v in table.cell_refs().filter_map(|c| table.cell(c)) {
                    let same_kind = v.as_num().is_some() == step.claimed_value.as_num().is_some();
                    if same_kind && !v.same_value(&step.claimed_value) && !candidates.iter().any(|c| c.same_value(v)) {
                        candidates.push(v.clone());
                    }
                }
                step.claimed_value = candidates
                    .get(rng.random_range(0..candidates.len().max(1)))
                    .cloned()
                    .ok_or_else(|| Error::Perturbation(format!("no alternative value for step {i}")))?;
                value_edited = true;
            }
            PerturbKind::DropStep | PerturbKind::SwapSteps => {}
        }
    }
    if value_edited {
        let mut state = ChainState::default();
        for step in &mut out.steps {
            if step.op_token != OpToken::Read {
                step.intermediate = state.expected_intermediate(step.op_token, &step.claimed_value);
            }
            state.advance(step);
        }
    }
    for (i, kind, _) in &chosen {
        if *kind == PerturbKind::SwapSteps {
            let j = if i + 1 < k { i + 1 } else { i - 1 };
            out.steps.swap(*i, j);
        }
    }
    let drops: HashSet<usize> = chosen
        .iter()
        .filter(|c| c.1 == PerturbKind::DropStep)
        .map(|c| c.0)
        .collect();
    if !drops.is_empty() {
        out.steps = out
            .steps
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !drops.contains(i))
            .map(|(_, st)| st)
            .collect();
    }
    out.reindex();
    Ok((out, 1.0 - s))
}
