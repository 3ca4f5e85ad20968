//! Comparison table and long-format curve export over finished runs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use super::jsonl;
use super::train::{Manifest, FAILED_FILE, MANIFEST_FILE, METRICS_FILE};
use crate::error::{Error, Result};
use crate::optimizer::{PathHistogram, StepReport, Variant};
use crate::verifier::Path;

pub const REPORT_FILE: &str = "report.md";
pub const CURVES_FILE: &str = "curves.csv";

/// A run accepted into the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub dir: PathBuf,
    pub variant: Variant,
    pub steps: usize,
    pub terminal_reward: f64,
    pub terminal_outcome_reward: f64,
    pub terminal_accuracy: f64,
    pub terminal_paths: PathHistogram,
    #[serde(skip)]
    pub metrics: Vec<StepReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Excluded {
    pub dir: PathBuf,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// Ordered GRPO, DAPO, PGPO_NO_PROCESS, PGPO.
    pub rows: Vec<RunRow>,
    pub excluded: Vec<Excluded>,
}

/// Run directories under `out`, one per variant that has a directory.
pub fn discover_runs(out: &FsPath) -> Vec<PathBuf> {
    Variant::ALL
        .iter()
        .map(|v| out.join(v.name()))
        .filter(|d| d.is_dir())
        .collect()
}

fn load_run(dir: &FsPath) -> std::result::Result<RunRow, String> {
    if dir.join(FAILED_FILE).exists() {
        return Err("run failed (FAILED marker present)".into());
    }
    let mpath = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&mpath).map_err(|e| format!("missing manifest: {e}"))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| format!("corrupt manifest: {e}"))?;
    let metrics: Vec<StepReport> = jsonl::read_all(&dir.join(METRICS_FILE)).map_err(|e| match e {
        Error::Io { source, .. } => format!("missing metrics: {source}"),
        e => format!("corrupt metrics: {e}"),
    })?;
    let steps = manifest.config.steps;
    if metrics.len() != steps {
        return Err(format!(
            "metrics has {} records, manifest expects {steps}",
            metrics.len()
        ));
    }
    if let Some((i, r)) = metrics
        .iter()
        .enumerate()
        .find(|(i, r)| r.step != *i || r.variant != manifest.variant)
    {
        return Err(format!("metrics record {i} is for step {} of {}", r.step, r.variant));
    }
    let last = metrics.last();
    Ok(RunRow {
        dir: dir.to_path_buf(),
        variant: manifest.variant,
        steps,
        terminal_reward: last.map_or(0.0, |r| r.mean_reward),
        terminal_outcome_reward: last.map_or(0.0, |r| r.mean_outcome_reward),
        terminal_accuracy: last.map_or(0.0, |r| r.accuracy),
        terminal_paths: last.map_or_else(PathHistogram::default, |r| r.paths),
        metrics,
    })
}

/// Load every run, excluding (and naming) the ones that are incomplete.
pub fn build_report(dirs: &[PathBuf]) -> Report {
    let mut report = Report::default();
    for dir in dirs {
        match load_run(dir) {
            Ok(row) => report.rows.push(row),
            Err(reason) => report.excluded.push(Excluded {
                dir: dir.clone(),
                reason,
            }),
        }
    }
    report.rows.sort_by_key(|r| r.variant);
    report
}

impl Report {
    pub fn to_markdown(&self) -> String {
        let cmp = self.rows.len() > 1;
        let mut s = String::from("| variant | steps | terminal reward | terminal R_base | accuracy |");
        for p in Path::ALL {
            let _ = write!(s, " {} |", p.name());
        }
        if cmp {
            s.push_str(" Δ reward vs first |");
        }
        s.push('\n');
        let cols = 5 + Path::ALL.len() + cmp as usize;
        s.push('|');
        s.push_str(&"---|".repeat(cols));
        s.push('\n');
        let base = self.rows.first().map_or(0.0, |r| r.terminal_reward);
        for r in &self.rows {
            let _ = write!(
                s,
                "| {} | {} | {:.4} | {:.4} | {:.4} |",
                r.variant, r.steps, r.terminal_reward, r.terminal_outcome_reward, r.terminal_accuracy
            );
            for p in Path::ALL {
                let _ = write!(s, " {:.4} |", r.terminal_paths.frequency(p));
            }
            if cmp {
                let _ = write!(s, " {:+.4} |", r.terminal_reward - base);
            }
            s.push('\n');
        }
        for e in &self.excluded {
            let _ = writeln!(s, "\nexcluded {}: {}", e.dir.display(), e.reason);
        }
        s
    }

    /// Long format: one row per (step, variant).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,variant,mean_reward,mean_outcome_reward,accuracy,mean_process");
        for p in Path::ALL {
            let _ = write!(s, ",{}", p.name().to_ascii_lowercase());
        }
        s.push('\n');
        for row in &self.rows {
            for m in &row.metrics {
                let _ = write!(
                    s,
                    "{},{},{},{},{},{}",
                    m.step, m.variant, m.mean_reward, m.mean_outcome_reward, m.accuracy, m.mean_process
                );
                for p in Path::ALL {
                    let _ = write!(s, ",{}", m.paths.frequency(p));
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn write(&self, dir: &FsPath) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let (md, csv) = (dir.join(REPORT_FILE), dir.join(CURVES_FILE));
        fs::write(&md, self.to_markdown()).map_err(|e| Error::io(&md, e))?;
        fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))?;
        Ok((md, csv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::RunConfig;
    use crate::harness::train::train_variant;

    #[test]
    fn single_run_has_no_comparison_and_bad_runs_are_named() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            steps: 2,
            batch_size: 2,
            out: tmp.path().to_path_buf(),
            ..RunConfig::default()
        };
        train_variant(&cfg, Variant::Grpo).unwrap();
        let dirs = vec![tmp.path().join("GRPO"), tmp.path().join("PGPO")];
        let r = build_report(&dirs);
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.excluded.len(), 1);
        let md = r.to_markdown();
        assert!(!md.contains("Δ"));
        assert!(md.contains("PGPO: missing manifest"));
        assert_eq!(r.to_csv().lines().count(), 1 + 2);

        fs::write(tmp.path().join("GRPO").join(METRICS_FILE), "{broken\n").unwrap();
        let r = build_report(&dirs[..1]);
        assert!(r.rows.is_empty());
        assert!(r.excluded[0].reason.starts_with("corrupt metrics"));
    }
}
