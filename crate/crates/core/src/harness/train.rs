use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::jsonl;
use crate::error::{Error, Result};
use crate::optimizer::{train_step, StepReport, Variant};
use crate::policy::{FeatureSpec, PolicySnapshot};
use crate::seed;
use crate::table_env::{generate_episode, Episode};
use crate::ARTIFACT_VERSION;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.txt";
pub const FAILED_FILE: &str = "FAILED";

/// Written before step 0 of every run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact_version: String,
    pub variant: Variant,
    pub feature_spec: String,
    pub config_sha256: String,
    /// Resolved config, with `optimizer.variant` set to this run's variant.
    pub config: RunConfig,
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub reports: Vec<StepReport>,
    pub snapshot: PolicySnapshot,
}

pub fn run_dir(cfg: &RunConfig, variant: Variant) -> PathBuf {
    cfg.out.join(variant.name())
}

/// The query batch for `step`. Shared by all variants of a run.
pub fn step_episodes(cfg: &RunConfig, step: usize) -> Result<Vec<Episode>> {
    (0..cfg.batch_size)
        .map(|b| {
            generate_episode(
                seed::derive(cfg.seed, &[seed::tag::EPISODE, step as u64, b as u64]),
                &cfg.env,
            )
        })
        .collect()
}

/// Seed for the rollouts of `step`.
pub fn step_seed(cfg: &RunConfig, step: usize) -> u64 {
    seed::derive(cfg.seed, &[seed::tag::ROLLOUT, step as u64])
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Run `cfg.steps` optimizer steps for one variant and write its artifacts
/// under `out/<VARIANT>/`. A failure after the manifest is written leaves
/// the metrics written so far and a `FAILED` marker.
pub fn train_variant(cfg: &RunConfig, variant: Variant) -> Result<RunArtifacts> {
    train_variant_inner(cfg, variant, None)
}

pub(crate) fn train_variant_inner(cfg: &RunConfig, variant: Variant, fail_at: Option<usize>) -> Result<RunArtifacts> {
    cfg.validate()?;
    let mut resolved = cfg.clone();
    resolved.optimizer.variant = variant;
    resolved.variants = vec![variant];
    let dir = run_dir(cfg, variant);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let failed = dir.join(FAILED_FILE);
    if failed.exists() {
        fs::remove_file(&failed).map_err(|e| Error::io(&failed, e))?;
    }
    let manifest = Manifest {
        artifact_version: ARTIFACT_VERSION.to_string(),
        variant,
        feature_spec: FeatureSpec::current().to_string(),
        config_sha256: resolved.digest(),
        config: resolved.clone(),
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json("manifest", e))?;
    write_file(&manifest_path, &(text + "\n"))?;

    let metrics_path = dir.join(METRICS_FILE);
    let file = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(true)
        .open(&metrics_path)
        .map_err(|e| Error::io(&metrics_path, e))?;
    let mut metrics = BufWriter::new(file);
    let result = run_steps(&resolved, &mut metrics, &metrics_path, fail_at);
    metrics.flush().map_err(|e| Error::io(&metrics_path, e))?;
    match result {
        Ok((reports, snapshot)) => {
            write_file(&dir.join(SNAPSHOT_FILE), &snapshot.to_text())?;
            Ok(RunArtifacts {
                dir,
                manifest,
                reports,
                snapshot,
            })
        }
        Err(e) => {
            write_file(&failed, &format!("{e}\n"))?;
            Err(e)
        }
    }
}

fn run_steps(
    cfg: &RunConfig,
    metrics: &mut BufWriter<File>,
    path: &Path,
    fail_at: Option<usize>,
) -> Result<(Vec<StepReport>, PolicySnapshot)> {
    let mut snapshot = PolicySnapshot::init(cfg.seed, cfg.policy.init_sigma)?;
    let mut reports = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        if fail_at == Some(step) {
            return Err(Error::Policy(format!("injected failure at step {step}")));
        }
        let episodes = step_episodes(cfg, step)?;
        let (next, mut report) = train_step(
            &episodes,
            &snapshot,
            &cfg.optimizer,
            &cfg.reward,
            &cfg.policy,
            step_seed(cfg, step),
        )?;
        report.step = step;
        jsonl::write(metrics, &report, path)?;
        // Each record reaches the file before the next step starts.
        metrics.flush().map_err(|e| Error::io(path, e))?;
        reports.push(report);
        snapshot = next;
    }
    Ok((reports, snapshot))
}

/// Train every configured variant on the same seeds.
pub fn cmd_train(cfg: &RunConfig) -> Result<Vec<RunArtifacts>> {
    cfg.validate()?;
    cfg.variants.iter().map(|&v| train_variant(cfg, v)).collect()
}
