use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::optimizer::{OptimizerConfig, Variant};
use crate::policy::PolicyConfig;
use crate::reward::RewardConfig;
use crate::table_env::EnvSpec;
use crate::vcot::PerturbKind;

/// Corpus generation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub queries: usize,
    /// Severities for the perturbed-chain corpus; empty disables it.
    pub perturb_severities: Vec<f64>,
    pub perturb_kinds: Vec<PerturbKind>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            queries: 1000,
            perturb_severities: Vec::new(),
            perturb_kinds: vec![PerturbKind::CorruptAnchor],
        }
    }
}

/// Everything that determines a run. Loaded from TOML; every field has a
/// default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub steps: usize,
    /// Queries per optimizer step.
    pub batch_size: usize,
    pub out: PathBuf,
    pub variants: Vec<Variant>,
    pub env: EnvSpec,
    pub reward: RewardConfig,
    pub optimizer: OptimizerConfig,
    pub policy: PolicyConfig,
    pub corpus: CorpusConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            steps: 50,
            batch_size: 16,
            out: PathBuf::from("runs"),
            variants: Variant::ALL.to_vec(),
            env: EnvSpec::default(),
            reward: RewardConfig::default(),
            optimizer: OptimizerConfig::default(),
            policy: PolicyConfig::default(),
            corpus: CorpusConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::Config("variants must not be empty".into()));
        }
        let mut seen = self.variants.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.variants.len() {
            return Err(Error::Config("variants must be distinct".into()));
        }
        if self.corpus.perturb_severities.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::Config("perturb_severities must lie in [0, 1]".into()));
        }
        if !self.corpus.perturb_severities.is_empty() && self.corpus.perturb_kinds.is_empty() {
            return Err(Error::Config("perturb_kinds must not be empty".into()));
        }
        self.env.validate()?;
        self.reward.validate()?;
        self.optimizer.validate()?;
        self.policy.validate()
    }

    /// SHA-256 of the canonical JSON form, recorded in run manifests.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("run config serializes to JSON");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}
