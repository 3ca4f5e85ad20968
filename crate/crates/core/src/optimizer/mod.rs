//! Group-relative policy optimization with process-gated rewards.
//!
//! Rewards within a group of `G` rollouts are standardized into advantages,
//! the clipped importance-ratio surrogate is averaged per token and then over
//! the group's active set, and PGPO additionally keeps only rollouts whose
//! length rank falls in configured percentile bands.

mod active_set;
mod advantage;
mod surrogate;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use active_set::{select_active_set, ActiveSet, Band};
pub use advantage::normalize_advantages;
pub use surrogate::{surrogate_and_grad, token_objective, Clip, GroupBatch};
pub use train::{train_step, PathHistogram, StepReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    Grpo,
    Dapo,
    PgpoNoProcess,
    Pgpo,
}

impl Variant {
    /// Ablation ladder order.
    pub const ALL: [Variant; 4] = [Variant::Grpo, Variant::Dapo, Variant::PgpoNoProcess, Variant::Pgpo];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Grpo => "GRPO",
            Variant::Dapo => "DAPO",
            Variant::PgpoNoProcess => "PGPO_NO_PROCESS",
            Variant::Pgpo => "PGPO",
        }
    }

    /// Whether the process-gated composite reward replaces `R_base`.
    pub fn uses_process_reward(self) -> bool {
        self == Variant::Pgpo
    }

    pub fn symmetric_clip(self) -> bool {
        self == Variant::Grpo
    }

    pub fn filters_by_length(self) -> bool {
        matches!(self, Variant::PgpoNoProcess | Variant::Pgpo)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase().replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == t)
            .ok_or_else(|| Error::Config(format!("unknown variant '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub group_size: usize,
    pub eps_low: f64,
    pub eps_high: f64,
    pub learning_rate: f64,
    /// Rank-percentile bands kept by length filtering.
    pub length_bands: Vec<Band>,
    pub variant: Variant,
    pub std_floor: f64,
    /// Gradient steps per sampled batch.
    pub inner_epochs: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            group_size: 8,
            eps_low: 0.2,
            eps_high: 0.28,
            learning_rate: 0.1,
            length_bands: Band::default_bands(),
            variant: Variant::Pgpo,
            std_floor: 1e-8,
            inner_epochs: 1,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::OptimizerConfig(m));
        if self.group_size < 2 {
            return bad(format!("group_size must be at least 2, got {}", self.group_size));
        }
        for (name, e) in [("eps_low", self.eps_low), ("eps_high", self.eps_high)] {
            if !(e > 0.0 && e < 1.0) {
                return bad(format!("{name} must be in (0, 1), got {e}"));
            }
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.std_floor.is_finite() && self.std_floor > 0.0) {
            return bad(format!("std_floor must be positive, got {}", self.std_floor));
        }
        if self.inner_epochs == 0 {
            return bad("inner_epochs must be at least 1".into());
        }
        Band::validate_all(&self.length_bands)
    }

    /// Clipping bounds the variant actually uses: GRPO clips symmetrically
    /// at `eps_low`.
    pub fn clip(&self) -> Clip {
        let eps_high = if self.variant.symmetric_clip() {
            self.eps_low
        } else {
            self.eps_high
        };
        Clip {
            eps_low: self.eps_low,
            eps_high,
        }
    }

    /// Bands in effect for the variant; unfiltered variants keep everything.
    pub fn effective_bands(&self) -> Vec<Band> {
        if self.variant.filters_by_length() {
            self.length_bands.clone()
        } else {
            vec![Band::full()]
        }
    }
}
