//! Process-gated group policy optimization on a synthetic, fully verifiable
//! table-reasoning environment.
//!
//! The crate is organised bottom-up:
//!
//! - [`table_env`]: seeded tables, templated questions with gold programs, and
//!   the exact answer oracle.
//! - [`vcot`]: the line-oriented reasoning-trajectory grammar (serialize,
//!   parse) and graded trajectory corruption.
//! - [`verifier`]: the rule-based critic producing format, accuracy and
//!   process scores plus a behavioural path label.
//! - [`reward`]: the critic-gated composite reward.
//! - [`policy`]: a linear-softmax policy over trajectory-building actions.
//! - [`optimizer`]: group advantages, decoupled clipping, length-aware
//!   active-set filtering and the four ablation variants.
//! - [`harness`]: run configuration, corpus generation, training runs,
//!   batch verification and reporting used by the `pgpo` binary.

pub mod error;
pub mod harness;
pub mod optimizer;
pub mod policy;
pub mod reward;
pub mod seed;
pub mod table_env;
pub mod vcot;
pub mod verifier;

pub use error::{Error, Result};
pub use optimizer::{OptimizerConfig, Variant};
pub use policy::PolicySnapshot;
pub use reward::RewardConfig;
pub use table_env::{Answer, CellRef, CellValue, Num, OpKind, Query, Table};
pub use vcot::Trajectory;
pub use verifier::{Path, RewardBreakdown};

/// Version string embedded in run manifests.
pub const ARTIFACT_VERSION: &str = concat!("pgpo-core ", env!("CARGO_PKG_VERSION"));
