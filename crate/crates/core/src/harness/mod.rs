//! Experiment plumbing behind the `pgpo` binary: run configuration, corpus
//! generation, training runs with on-disk artifacts, batch verification
//! and reporting.

pub mod config;
pub mod corpus;
pub mod jsonl;
pub mod report;
pub mod train;
pub mod verify;

pub use config::{CorpusConfig, RunConfig};
pub use corpus::{gen_corpus, CorpusSummary, PerturbedRecord, TrajectoryRecord};
pub use report::{build_report, discover_runs, Report};
pub use train::{cmd_train, run_dir, train_variant, Manifest, RunArtifacts};
pub use verify::{verify_file, verify_lines, Corpus, VerifyRecord, VerifySummary};
