//! Batch verification of trajectory texts against a generated corpus.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::corpus::{TrajectoryRecord, QUERIES_FILE, TABLES_FILE};
use super::jsonl;
use crate::error::{Error, Result};
use crate::reward::{self, RewardConfig};
use crate::table_env::{Query, Table};
use crate::verifier::{verify_text, RewardBreakdown};

/// Tables and queries of a corpus, indexed by query id.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub tables: Vec<Table>,
    pub queries: Vec<Query>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn load(dir: &Path) -> Result<Self> {
        let tables: Vec<Table> = jsonl::read_all(&dir.join(TABLES_FILE))?;
        let queries: Vec<Query> = jsonl::read_all(&dir.join(QUERIES_FILE))?;
        if tables.len() != queries.len() {
            return Err(Error::Config(format!(
                "corpus {} has {} tables but {} queries",
                dir.display(),
                tables.len(),
                queries.len()
            )));
        }
        let mut index = HashMap::with_capacity(queries.len());
        for (i, (t, q)) in tables.iter().zip(&queries).enumerate() {
            t.validate()?;
            if q.table_id != t.table_id {
                return Err(Error::InvalidTable(format!(
                    "query {} is paired with table {}",
                    q.query_id, t.table_id
                )));
            }
            q.check(t)?;
            if index.insert(q.query_id.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate query id {}", q.query_id)));
            }
        }
        Ok(Corpus { tables, queries, index })
    }

    pub fn get(&self, query_id: &str) -> Option<(&Table, &Query)> {
        self.index.get(query_id).map(|&i| (&self.tables[i], &self.queries[i]))
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

/// One output line per input line: a breakdown, or the reason there is none.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyRecord {
    pub line: usize,
    pub query_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<RewardBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub records: usize,
    pub verified: usize,
    pub errors: usize,
    /// Mean process score over verified records, 0 when there are none.
    pub mean_process: f64,
    pub mean_composite: f64,
}

/// Verify every non-blank line of `input`. Lines that are not valid
/// records or name an unknown query become error records; they never abort
/// the batch. The caller decides whether errors are fatal.
pub fn verify_lines(corpus: &Corpus, input: &str, cfg: &RewardConfig) -> (Vec<VerifyRecord>, VerifySummary) {
    let mut out = Vec::new();
    let mut summary = VerifySummary::default();
    let (mut proc_sum, mut comp_sum) = (0.0, 0.0);
    for (i, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        summary.records += 1;
        let rec = match serde_json::from_str::<TrajectoryRecord>(line) {
            Err(e) => VerifyRecord {
                line: i + 1,
                query_id: None,
                breakdown: None,
                error: Some(format!("invalid record: {e}")),
            },
            Ok(r) => match corpus.get(&r.query_id) {
                None => VerifyRecord {
                    line: i + 1,
                    error: Some(format!("unknown query id {}", r.query_id)),
                    query_id: Some(r.query_id),
                    breakdown: None,
                },
                Some((table, query)) => {
                    let b = reward::apply(verify_text(&r.text, table, query), cfg);
                    proc_sum += b.r_proc;
                    comp_sum += b.composite;
                    VerifyRecord {
                        line: i + 1,
                        query_id: Some(r.query_id),
                        breakdown: Some(b),
                        error: None,
                    }
                }
            },
        };
        if rec.error.is_some() {
            summary.errors += 1;
        } else {
            summary.verified += 1;
        }
        out.push(rec);
    }
    if summary.verified > 0 {
        summary.mean_process = proc_sum / summary.verified as f64;
        summary.mean_composite = comp_sum / summary.verified as f64;
    }
    (out, summary)
}

/// File-to-file form of [`verify_lines`].
pub fn verify_file(corpus_dir: &Path, input: &Path, output: &Path, cfg: &RewardConfig) -> Result<VerifySummary> {
    cfg.validate()?;
    let corpus = Corpus::load(corpus_dir)?;
    let text = fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let (records, summary) = verify_lines(&corpus, &text, cfg);
    let file = File::create(output).map_err(|e| Error::io(output, e))?;
    let mut w = BufWriter::new(file);
    for r in &records {
        jsonl::write(&mut w, r, output)?;
    }
    w.flush().map_err(|e| Error::io(output, e))?;
    Ok(summary)
}
