use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::value::{CellValue, Num};
use crate::error::{Error, Result};
use crate::seed;

pub const MAX_ROWS: usize = 64;
pub const MAX_COLS: usize = 16;

/// 0-based grid coordinate of a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellRef {
    pub row: usize,
    pub col: usize,
}

impl CellRef {
    pub const fn new(row: usize, col: usize) -> Self {
        CellRef { row, col }
    }
}

/// Hierarchical header spanning columns `col_start..=col_end`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperHeader {
    pub label: String,
    pub col_start: usize,
    pub col_end: usize,
}

/// Logical table grid. Construct through [`Table::new`] so that the shape,
/// header and span invariants are checked.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub table_id: String,
    pub n_rows: usize,
    pub n_cols: usize,
    pub col_headers: Vec<String>,
    pub row_headers: Vec<String>,
    pub cells: Vec<Vec<CellValue>>,
    #[serde(default)]
    pub super_headers: Vec<SuperHeader>,
}

impl Table {
    pub fn new(
        table_id: impl Into<String>,
        row_headers: Vec<String>,
        col_headers: Vec<String>,
        cells: Vec<Vec<CellValue>>,
        super_headers: Vec<SuperHeader>,
    ) -> Result<Table> {
        let t = Table {
            table_id: table_id.into(),
            n_rows: row_headers.len(),
            n_cols: col_headers.len(),
            col_headers,
            row_headers,
            cells,
            super_headers,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTable(m));
        if self.n_rows == 0 || self.n_cols == 0 {
            return bad(format!("empty grid {}x{}", self.n_rows, self.n_cols));
        }
        if self.row_headers.len() != self.n_rows || self.col_headers.len() != self.n_cols {
            return bad("header count does not match grid shape".into());
        }
        if self.cells.len() != self.n_rows || self.cells.iter().any(|r| r.len() != self.n_cols) {
            return bad(format!("cells grid is not {}x{}", self.n_rows, self.n_cols));
        }
        for (axis, headers) in [("row", &self.row_headers), ("col", &self.col_headers)] {
            let mut seen = HashSet::new();
            for h in headers {
                if h.trim().is_empty() {
                    return bad(format!("empty {axis} header"));
                }
                if h.contains('"') {
                    return bad(format!("{axis} header {h:?} contains a double quote"));
                }
                if !seen.insert(h.as_str()) {
                    return bad(format!("duplicate {axis} header {h:?}"));
                }
            }
        }
        let mut spans: Vec<&SuperHeader> = self.super_headers.iter().collect();
        spans.sort_by_key(|s| s.col_start);
        for (i, s) in spans.iter().enumerate() {
            if s.col_start > s.col_end || s.col_end >= self.n_cols {
                return bad(format!("super header {:?} outside [0, {})", s.label, self.n_cols));
            }
            if i > 0 && spans[i - 1].col_end >= s.col_start {
                return bad(format!("super header {:?} overlaps its neighbour", s.label));
            }
        }
        Ok(())
    }

    pub fn contains(&self, cell: CellRef) -> bool {
        cell.row < self.n_rows && cell.col < self.n_cols
    }

    pub fn cell(&self, cell: CellRef) -> Option<&CellValue> {
        self.cells.get(cell.row).and_then(|r| r.get(cell.col))
    }

    pub fn checked_cell(&self, cell: CellRef) -> Result<&CellValue> {
        self.cell(cell).ok_or(Error::CellOutOfBounds {
            row: cell.row,
            col: cell.col,
            n_rows: self.n_rows,
            n_cols: self.n_cols,
        })
    }

    pub fn num_at(&self, cell: CellRef) -> Option<Num> {
        self.cell(cell).and_then(CellValue::as_num)
    }

    pub fn cell_refs(&self) -> impl Iterator<Item = CellRef> + '_ {
        (0..self.n_rows).flat_map(move |r| (0..self.n_cols).map(move |c| CellRef::new(r, c)))
    }

    pub fn numeric_cells(&self) -> impl Iterator<Item = (CellRef, Num)> + '_ {
        self.cell_refs().filter_map(|c| self.num_at(c).map(|n| (c, n)))
    }

    pub fn is_numeric_col(&self, col: usize) -> bool {
        (0..self.n_rows).all(|r| self.num_at(CellRef::new(r, col)).is_some())
    }

    pub fn numeric_cols(&self) -> Vec<usize> {
        (0..self.n_cols).filter(|&c| self.is_numeric_col(c)).collect()
    }

    pub fn row_index(&self, header: &str) -> Option<usize> {
        self.row_headers.iter().position(|h| h == header)
    }

    pub fn col_index(&self, header: &str) -> Option<usize> {
        self.col_headers.iter().position(|h| h == header)
    }

    /// The most frequent numeric value (by numeric equality); ties go to the
    /// smallest value. This is the global surface cue a shortcut policy can
    /// read without grounding any cell.
    pub fn mode_value(&self) -> Option<Num> {
        let mut counts: BTreeMap<i128, (usize, Num)> = BTreeMap::new();
        for (_, n) in self.numeric_cells() {
            counts.entry(n.hundredths()).or_insert((0, n)).0 += 1;
        }
        let mut best: Option<(usize, Num)> = None;
        for (_, (count, n)) in counts {
            if best.is_none_or(|(bc, _)| count > bc) {
                best = Some((count, n));
            }
        }
        best.map(|(_, n)| n)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellLayout {
    /// Every column numeric.
    #[default]
    Numeric,
    /// Column 0 holds text labels, the rest are numeric.
    Mixed,
}

/// Shape and content parameters for [`generate_table`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TableSpec {
    pub n_rows: usize,
    pub n_cols: usize,
    pub layout: CellLayout,
    /// Probability that a numeric column holds 2-decimal fixed-point values.
    pub decimal_col_rate: f64,
    /// Probability that the table gets hierarchical super headers.
    pub super_header_rate: f64,
    /// Inclusive integer range for generated numeric values.
    pub value_lo: i64,
    pub value_hi: i64,
    pub row_headers: Option<Vec<String>>,
    pub col_headers: Option<Vec<String>>,
}

impl Default for TableSpec {
    fn default() -> Self {
        TableSpec {
            n_rows: 4,
            n_cols: 3,
            layout: CellLayout::Numeric,
            decimal_col_rate: 0.0,
            super_header_rate: 0.3,
            value_lo: 1,
            value_hi: 999,
            row_headers: None,
            col_headers: None,
        }
    }
}

impl TableSpec {
    pub fn numeric(n_rows: usize, n_cols: usize) -> Self {
        TableSpec {
            n_rows,
            n_cols,
            ..TableSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::TableSpec(m));
        if !(1..=MAX_ROWS).contains(&self.n_rows) {
            return bad(format!("n_rows must be in 1..={MAX_ROWS}, got {}", self.n_rows));
        }
        if !(1..=MAX_COLS).contains(&self.n_cols) {
            return bad(format!("n_cols must be in 1..={MAX_COLS}, got {}", self.n_cols));
        }
        if self.layout == CellLayout::Mixed && self.n_cols < 2 {
            return bad("mixed layout needs at least two columns".into());
        }
        if self.value_lo > self.value_hi || self.value_lo < -1_000_000 || self.value_hi > 1_000_000 {
            return bad(format!("bad value range {}..={}", self.value_lo, self.value_hi));
        }
        for (name, p) in [
            ("decimal_col_rate", self.decimal_col_rate),
            ("super_header_rate", self.super_header_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if let Some(h) = &self.row_headers {
            if h.len() != self.n_rows {
                return bad(format!("{} row headers for {} rows", h.len(), self.n_rows));
            }
        }
        if let Some(h) = &self.col_headers {
            if h.len() != self.n_cols {
                return bad(format!("{} col headers for {} cols", h.len(), self.n_cols));
            }
        }
        Ok(())
    }
}

const ROW_NAMES: &[&str] = &[
    "Alder", "Birch", "Cedar", "Dogwood", "Elm", "Fir", "Ginkgo", "Hazel", "Ironwood", "Juniper", "Kapok", "Larch",
    "Maple", "Nutmeg", "Oak", "Pine", "Quince", "Rowan", "Spruce", "Teak", "Umbrella", "Viburnum", "Willow", "Xylosma",
    "Yew", "Zelkova", "Acacia", "Baobab", "Cypress", "Durian", "Ebony", "Fig",
];

const COL_NAMES: &[&str] = &[
    "Revenue",
    "Cost",
    "Units",
    "Visits",
    "Returns",
    "Staff",
    "Orders",
    "Refunds",
    "Hours",
    "Claims",
    "Leads",
    "Tickets",
    "Shipments",
    "Defects",
    "Signups",
    "Churn",
];

const GROUP_NAMES: &[&str] = &["Primary", "Secondary", "Tertiary", "Quaternary"];

const CATEGORY_WORDS: &[&str] = &["north", "south", "east", "west", "central", "coastal", "inland"];

fn headers(pool: &[&str], n: usize, rng: &mut seed::Rng) -> Vec<String> {
    let mut base: Vec<&str> = pool.to_vec();
    base.shuffle(rng);
    (0..n)
        .map(|i| {
            let name = base[i % base.len()];
            match i / base.len() {
                0 => name.to_string(),
                k => format!("{name} {}", k + 1),
            }
        })
        .collect()
}

/// Generate a seeded table. Numeric cells are distinct except for one planted
/// value that repeats in roughly a quarter of the numeric cells (at least two
/// when there are two or more), which makes it the unique table mode.
pub fn generate_table(seed: u64, spec: &TableSpec) -> Result<Table> {
    spec.validate()?;
    let mut rng = seed::rng(seed::derive(seed, &[seed::tag::TABLE]));
    let (n_rows, n_cols) = (spec.n_rows, spec.n_cols);

    let row_headers = spec
        .row_headers
        .clone()
        .unwrap_or_else(|| headers(ROW_NAMES, n_rows, &mut rng));
    let mut col_headers = spec
        .col_headers
        .clone()
        .unwrap_or_else(|| headers(COL_NAMES, n_cols, &mut rng));
    if spec.layout == CellLayout::Mixed && spec.col_headers.is_none() {
        col_headers[0] = "Region".to_string();
    }

    let text_cols: usize = usize::from(spec.layout == CellLayout::Mixed);
    let decimal_col: Vec<bool> = (0..n_cols)
        .map(|c| c >= text_cols && rng.random_bool(spec.decimal_col_rate))
        .collect();

    let numeric_cells: Vec<CellRef> = (0..n_rows)
        .flat_map(|r| (text_cols..n_cols).map(move |c| CellRef::new(r, c)))
        .collect();
    let n_numeric = numeric_cells.len();

    // Scale the range up when needed so distinct values always exist.
    let lo = spec.value_lo;
    let hi = spec.value_hi.max(lo + 4 * n_numeric as i64 + 4);
    let quarter = (hi - lo) / 4;
    let mode = rng.random_range(lo + quarter..=hi - quarter);

    let n_mode = if n_numeric >= 2 {
        (n_numeric / 4).max(2)
    } else {
        n_numeric
    };
    let mut order = numeric_cells.clone();
    order.shuffle(&mut rng);
    let mode_cells: HashSet<CellRef> = order.iter().take(n_mode).copied().collect();

    let mut used: HashSet<i64> = HashSet::from([mode]);
    let mut cells = vec![vec![CellValue::int(0); n_cols]; n_rows];
    for (r, row) in cells.iter_mut().enumerate() {
        for (c, slot) in row.iter_mut().enumerate() {
            if c < text_cols {
                let w = CATEGORY_WORDS[rng.random_range(0..CATEGORY_WORDS.len())];
                *slot = CellValue::text(format!("{w}-{r}"));
                continue;
            }
            let v = if mode_cells.contains(&CellRef::new(r, c)) {
                mode
            } else {
                loop {
                    let v = rng.random_range(lo..=hi);
                    if used.insert(v) {
                        break v;
                    }
                }
            };
            *slot = if decimal_col[c] {
                CellValue::dec(v * 100)
            } else {
                CellValue::int(v)
            };
        }
    }
    // Decimal columns get non-zero cents on non-mode values so they read as
    // genuine fixed-point data; the integer part stays distinct so no new
    // collisions appear.
    for &cell in &numeric_cells {
        if decimal_col[cell.col] && !mode_cells.contains(&cell) {
            if let CellValue::Num(Num::Dec(h)) = &mut cells[cell.row][cell.col] {
                *h += rng.random_range(1..100);
            }
        }
    }

    let mut super_headers = Vec::new();
    if n_cols >= 2 && rng.random_bool(spec.super_header_rate) {
        let groups = if n_cols >= 4 { 2 } else { 1 };
        let width = n_cols.div_ceil(groups);
        for g in 0..groups {
            let start = g * width;
            let end = ((g + 1) * width).min(n_cols) - 1;
            if start <= end {
                super_headers.push(SuperHeader {
                    label: GROUP_NAMES[g % GROUP_NAMES.len()].to_string(),
                    col_start: start,
                    col_end: end,
                });
            }
        }
    }

    Table::new(
        format!("tbl-{seed:016x}"),
        row_headers,
        col_headers,
        cells,
        super_headers,
    )
}
