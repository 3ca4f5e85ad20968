use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::jsonl;
use crate::error::{Error, Result};
use crate::seed;
use crate::table_env::{generate_episode, Episode};
use crate::vcot::{canonical_chain, perturb, serialize, PerturbKind, PerturbationSpec};

/// A trajectory text tied to a query, the input format of `verify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub query_id: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbedRecord {
    pub query_id: String,
    pub text: String,
    pub severity: f64,
    pub kinds: Vec<PerturbKind>,
    pub seed: u64,
    pub steps: usize,
    pub target_process_score: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub queries: usize,
    pub flagged: usize,
    pub perturbed: usize,
    /// Chains that could not be corrupted as requested (for example a table
    /// with no alternative anchor).
    pub perturb_skipped: usize,
    pub files: Vec<PathBuf>,
}

pub const TABLES_FILE: &str = "tables.jsonl";
pub const QUERIES_FILE: &str = "queries.jsonl";
pub const GOLD_FILE: &str = "gold_trajectories.jsonl";
pub const PERTURBED_FILE: &str = "perturbed.jsonl";

/// Episode `i` of the corpus drawn from `cfg`.
pub fn corpus_episode(cfg: &RunConfig, i: usize) -> Result<Episode> {
    generate_episode(seed::derive(cfg.seed, &[seed::tag::CORPUS, i as u64]), &cfg.env)
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Write the table, query and gold-chain corpus to `dir`, plus perturbed
/// chains when severities are configured. The config is validated before
/// anything touches the filesystem.
pub fn gen_corpus(cfg: &RunConfig, dir: &Path) -> Result<CorpusSummary> {
    cfg.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = [TABLES_FILE, QUERIES_FILE, GOLD_FILE].map(|f| dir.join(f));
    let mut tables = writer(&paths[0])?;
    let mut queries = writer(&paths[1])?;
    let mut gold = writer(&paths[2])?;
    let perturb_path = dir.join(PERTURBED_FILE);
    let mut perturbed = if cfg.corpus.perturb_severities.is_empty() {
        None
    } else {
        Some(writer(&perturb_path)?)
    };
    let mut summary = CorpusSummary::default();
    for i in 0..cfg.corpus.queries {
        let ep = corpus_episode(cfg, i)?;
        let chain = canonical_chain(&ep.table, &ep.query.gold_program)?;
        jsonl::write(&mut tables, &ep.table, &paths[0])?;
        jsonl::write(&mut queries, &ep.query, &paths[1])?;
        let rec = TrajectoryRecord {
            query_id: ep.query.query_id.clone(),
            text: serialize(&chain),
        };
        jsonl::write(&mut gold, &rec, &paths[2])?;
        summary.queries += 1;
        summary.flagged += ep.query.shortcut_bias as usize;
        if let Some(w) = perturbed.as_mut() {
            for (k, &severity) in cfg.corpus.perturb_severities.iter().enumerate() {
                let pseed = seed::derive(cfg.seed, &[seed::tag::PERTURB, i as u64, k as u64]);
                let spec = PerturbationSpec::new(severity, &cfg.corpus.perturb_kinds, pseed);
                match perturb(&chain, &spec, &ep.table) {
                    Ok((t, target)) => {
                        let rec = PerturbedRecord {
                            query_id: ep.query.query_id.clone(),
                            text: serialize(&t),
                            severity,
                            kinds: spec.kinds.clone(),
                            seed: pseed,
                            steps: chain.steps.len(),
                            target_process_score: target,
                        };
                        jsonl::write(w, &rec, &perturb_path)?;
                        summary.perturbed += 1;
                    }
                    Err(Error::Perturbation(_)) => summary.perturb_skipped += 1,
                    Err(e) => return Err(e),
                }
            }
        }
    }
    for (w, p) in [
        (&mut tables, &paths[0]),
        (&mut queries, &paths[1]),
        (&mut gold, &paths[2]),
    ] {
        w.flush().map_err(|e| Error::io(p, e))?;
    }
    summary.files = paths.to_vec();
    if let Some(mut w) = perturbed {
        w.flush().map_err(|e| Error::io(&perturb_path, e))?;
        summary.files.push(perturb_path);
    }
    Ok(summary)
}
