use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::program::OpKind;
use super::query::{bias_draw, generate_query_with_bias, Query, QueryShape};
use super::table::{generate_table, CellLayout, Table, TableSpec, MAX_COLS, MAX_ROWS};
use crate::error::{Error, Result};
use crate::seed;

/// Inclusive integer range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Range {
    pub lo: usize,
    pub hi: usize,
}

impl Range {
    pub const fn new(lo: usize, hi: usize) -> Self {
        Range { lo, hi }
    }
}

/// Relative weights of each question kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpMix {
    pub lookup: f64,
    pub sum: f64,
    pub diff: f64,
    pub max: f64,
    pub min: f64,
    pub count: f64,
    pub compare: f64,
    pub multihop_lookup: f64,
}

impl Default for OpMix {
    fn default() -> Self {
        OpMix {
            lookup: 3.0,
            sum: 1.0,
            diff: 1.0,
            max: 2.0,
            min: 2.0,
            count: 0.5,
            compare: 0.5,
            multihop_lookup: 1.0,
        }
    }
}

impl OpMix {
    pub fn weights(&self) -> [(OpKind, f64); 8] {
        [
            (OpKind::Lookup, self.lookup),
            (OpKind::Sum, self.sum),
            (OpKind::Diff, self.diff),
            (OpKind::Max, self.max),
            (OpKind::Min, self.min),
            (OpKind::Count, self.count),
            (OpKind::Compare, self.compare),
            (OpKind::MultihopLookup, self.multihop_lookup),
        ]
    }
}

/// Distribution over (table, query) episodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSpec {
    pub rows: Range,
    pub cols: Range,
    pub layout: CellLayout,
    pub decimal_col_rate: f64,
    pub super_header_rate: f64,
    pub value_lo: i64,
    pub value_hi: i64,
    pub op_mix: OpMix,
    pub shortcut_bias_rate: f64,
    pub min_cells: usize,
    pub max_cells: usize,
}

impl Default for EnvSpec {
    fn default() -> Self {
        EnvSpec {
            rows: Range::new(3, 5),
            cols: Range::new(3, 4),
            layout: CellLayout::Numeric,
            decimal_col_rate: 0.0,
            super_header_rate: 0.3,
            value_lo: 1,
            value_hi: 999,
            op_mix: OpMix::default(),
            shortcut_bias_rate: 0.7,
            min_cells: 2,
            max_cells: 3,
        }
    }
}

const MAX_ATTEMPTS: usize = 64;

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::TableSpec(m));
        if self.rows.lo < 1 || self.rows.lo > self.rows.hi || self.rows.hi > MAX_ROWS {
            return bad(format!(
                "row range {}..={} outside 1..={MAX_ROWS}",
                self.rows.lo, self.rows.hi
            ));
        }
        if self.cols.lo < 1 || self.cols.lo > self.cols.hi || self.cols.hi > MAX_COLS {
            return bad(format!(
                "col range {}..={} outside 1..={MAX_COLS}",
                self.cols.lo, self.cols.hi
            ));
        }
        if !(0.0..=1.0).contains(&self.shortcut_bias_rate) {
            return bad(format!(
                "shortcut_bias_rate must be in [0, 1], got {}",
                self.shortcut_bias_rate
            ));
        }
        if self.min_cells < 2 || self.min_cells > self.max_cells {
            return bad(format!("bad cell bounds {}..={}", self.min_cells, self.max_cells));
        }
        let w = self.op_mix.weights();
        if w.iter().any(|(_, x)| !x.is_finite() || *x < 0.0) || w.iter().all(|(_, x)| *x == 0.0) {
            return bad("op_mix weights must be non-negative with a positive total".into());
        }
        self.table_spec(self.rows.lo, self.cols.lo).validate()?;
        self.table_spec(self.rows.hi, self.cols.hi).validate()
    }

    fn table_spec(&self, n_rows: usize, n_cols: usize) -> TableSpec {
        TableSpec {
            n_rows,
            n_cols,
            layout: self.layout,
            decimal_col_rate: self.decimal_col_rate,
            super_header_rate: self.super_header_rate,
            value_lo: self.value_lo,
            value_hi: self.value_hi,
            row_headers: None,
            col_headers: None,
        }
    }

    pub fn shape(&self) -> QueryShape {
        QueryShape {
            min_cells: self.min_cells,
            max_cells: self.max_cells,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub table: Table,
    pub query: Query,
}

/// Draw one episode. The shortcut flag is drawn once from its own stream and
/// kept across retries, so the flagged fraction is exactly Bernoulli in
/// `shortcut_bias_rate`; only the table and question kind are redrawn when a
/// combination cannot host the requested flag.
pub fn generate_episode(seed: u64, spec: &EnvSpec) -> Result<Episode> {
    spec.validate()?;
    let biased = bias_draw(seed, spec.shortcut_bias_rate);
    let weights = spec.op_mix.weights();
    let dist =
        WeightedIndex::new(weights.iter().map(|(_, w)| *w)).map_err(|e| Error::TableSpec(format!("op_mix: {e}")))?;
    let mut last_err = None;
    for attempt in 0..MAX_ATTEMPTS as u64 {
        let s = seed::derive(seed, &[seed::tag::EPISODE, attempt]);
        let mut rng = seed::rng(s);
        let n_rows = rng.random_range(spec.rows.lo..=spec.rows.hi);
        let n_cols = rng.random_range(spec.cols.lo..=spec.cols.hi);
        let op = weights[dist.sample(&mut rng)].0;
        let table = generate_table(s, &spec.table_spec(n_rows, n_cols))?;
        match generate_query_with_bias(s, &table, op, biased, spec.shape()) {
            Ok(mut query) => {
                query.query_id = format!("q-{seed:016x}");
                return Ok(Episode { table, query });
            }
            Err(e @ (Error::ShortcutUnrealizable(_) | Error::NotApplicable(..))) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::TableSpec("no episode could be drawn".into())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_rate_tracks_the_requested_rate() {
        let spec = EnvSpec::default();
        let n = 10_000u64;
        let mut flagged = 0;
        let mut hits = 0;
        for s in 0..n {
            let ep = generate_episode(s, &spec).unwrap();
            ep.query.check(&ep.table).unwrap();
            flagged += ep.query.shortcut_bias as u64;
            let mode = ep.table.mode_value();
            if let (crate::table_env::Answer::Number(a), Some(m)) = (&ep.query.gold_answer, mode) {
                hits += a.same_value(m) as u64;
            }
        }
        let rate = flagged as f64 / n as f64;
        assert!((rate - 0.7).abs() <= 0.02, "flag rate {rate}");
        // Unflagged answers avoid the cue, so hits and flags coincide.
        assert_eq!(hits, flagged);
    }

    #[test]
    fn deterministic_serialization() {
        let spec = EnvSpec::default();
        for s in 0..50 {
            let a = serde_json::to_string(&generate_episode(s, &spec).unwrap()).unwrap();
            let b = serde_json::to_string(&generate_episode(s, &spec).unwrap()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let spec = EnvSpec {
            cols: Range::new(0, 3),
            ..EnvSpec::default()
        };
        assert!(matches!(generate_episode(1, &spec), Err(Error::TableSpec(_))));
        let spec = EnvSpec {
            shortcut_bias_rate: 1.5,
            ..EnvSpec::default()
        };
        assert!(generate_episode(1, &spec).unwrap_err().is_validation());
    }
}
