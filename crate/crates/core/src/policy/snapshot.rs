use std::fmt;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::state::FEATURE_DIM;
use crate::error::{Error, Result};
use crate::seed;

pub const FEATURE_SPEC_VERSION: &str = "vtab-linear-v1";
const HEADER: &str = "pgpo-snapshot v1";

/// Versioned description of the feature map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub version: String,
    pub dim: usize,
}

impl FeatureSpec {
    pub fn current() -> Self {
        FeatureSpec {
            version: FEATURE_SPEC_VERSION.into(),
            dim: FEATURE_DIM,
        }
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} D={}", self.version, self.dim)
    }
}

/// Policy parameters. Treated as immutable once used for sampling; an update
/// produces a new snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySnapshot {
    pub theta: Vec<f64>,
    pub feature_spec: FeatureSpec,
}

impl PolicySnapshot {
    /// The uniform policy.
    pub fn zeros() -> Self {
        PolicySnapshot {
            theta: vec![0.0; FEATURE_DIM],
            feature_spec: FeatureSpec::current(),
        }
    }

    pub fn from_theta(theta: Vec<f64>) -> Result<Self> {
        if theta.len() != FEATURE_DIM {
            return Err(Error::FeatureSpecMismatch {
                expected: FeatureSpec::current().to_string(),
                found: format!("{FEATURE_SPEC_VERSION} D={}", theta.len()),
            });
        }
        Ok(PolicySnapshot {
            theta,
            feature_spec: FeatureSpec::current(),
        })
    }

    /// Seeded Gaussian initialization; `sigma = 0` gives [`PolicySnapshot::zeros`].
    pub fn init(seed: u64, sigma: f64) -> Result<Self> {
        if sigma == 0.0 {
            return Ok(Self::zeros());
        }
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(format!("init_sigma: {e}")))?;
        let mut rng = seed::rng(seed::derive(seed, &[seed::tag::INIT]));
        Self::from_theta((0..FEATURE_DIM).map(|_| normal.sample(&mut rng)).collect())
    }

    /// Text form: a header, the feature spec, then one parameter per line.
    /// Values use Rust's shortest round-trip formatting, so loading is
    /// bit-exact.
    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER}\nfeature_spec {}\n", self.feature_spec);
        for t in &self.theta {
            out.push_str(&format!("{t:?}\n"));
        }
        out
    }

    /// Parse [`PolicySnapshot::to_text`] output, refusing other feature specs.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(Error::Snapshot(format!("missing '{HEADER}' header")));
        }
        let spec_line = lines
            .next()
            .ok_or_else(|| Error::Snapshot("missing feature_spec line".into()))?;
        let found = spec_line
            .strip_prefix("feature_spec ")
            .ok_or_else(|| Error::Snapshot("missing feature_spec line".into()))?;
        let expected = FeatureSpec::current();
        if found != expected.to_string() {
            return Err(Error::FeatureSpecMismatch {
                expected: expected.to_string(),
                found: found.to_string(),
            });
        }
        let theta = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Snapshot(format!("bad value '{l}': {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if theta.len() != expected.dim {
            return Err(Error::Snapshot(format!(
                "expected {} values, found {}",
                expected.dim,
                theta.len()
            )));
        }
        Ok(PolicySnapshot {
            theta,
            feature_spec: expected,
        })
    }
}
