use std::cmp::Ordering;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::program::{evaluate_program, GoldProgram, OpKind, Program};
use super::table::{CellRef, Table};
use super::value::{Answer, Num};
use crate::error::{Error, Result};
use crate::seed;

/// A question over one table with its gold program and answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub table_id: String,
    pub question: String,
    pub op_kind: OpKind,
    pub gold_program: GoldProgram,
    pub gold_answer: Answer,
    /// Set when the gold answer was deliberately made equal to the table mode.
    pub shortcut_bias: bool,
}

impl Query {
    /// Check that every gold anchor is valid and that the program evaluates
    /// to the recorded gold answer.
    pub fn check(&self, table: &Table) -> Result<()> {
        for read in &self.gold_program.reads {
            let v = table.checked_cell(read.cell)?;
            if v != &read.value {
                return Err(Error::InvalidTable(format!(
                    "gold read at ({}, {}) does not match the table",
                    read.cell.row, read.cell.col
                )));
            }
        }
        let got = evaluate_program(table, &self.gold_program.tree)?;
        if got != self.gold_answer {
            return Err(Error::InvalidTable(format!(
                "query {} evaluates to {got:?}, recorded {:?}",
                self.query_id, self.gold_answer
            )));
        }
        Ok(())
    }
}

/// Bounds on how many cells aggregate questions touch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryShape {
    pub min_cells: usize,
    pub max_cells: usize,
}

impl Default for QueryShape {
    fn default() -> Self {
        QueryShape {
            min_cells: 2,
            max_cells: 3,
        }
    }
}

/// Whether a query drawn with `seed` carries the shortcut cue. Drawn from its
/// own stream so that a caller retrying on different tables keeps the draw.
pub fn bias_draw(seed: u64, shortcut_bias_rate: f64) -> bool {
    let p = shortcut_bias_rate.clamp(0.0, 1.0);
    seed::rng(seed::derive(seed, &[seed::tag::BIAS])).random_bool(p)
}

/// Generate a seeded query of kind `op_kind`. With probability
/// `shortcut_bias_rate` the gold answer equals the table's most frequent
/// numeric value and the query is flagged; otherwise the answer is kept
/// away from that value.
pub fn generate_query(seed: u64, table: &Table, op_kind: OpKind, shortcut_bias_rate: f64) -> Result<Query> {
    let biased = bias_draw(seed, shortcut_bias_rate);
    generate_query_with_bias(seed, table, op_kind, biased, QueryShape::default())
}

pub fn generate_query_with_bias(
    seed: u64,
    table: &Table,
    op_kind: OpKind,
    biased: bool,
    shape: QueryShape,
) -> Result<Query> {
    table.validate()?;
    if shape.min_cells < 2 || shape.min_cells > shape.max_cells {
        return Err(Error::NotApplicable(
            op_kind,
            format!("bad cell bounds {}..={}", shape.min_cells, shape.max_cells),
        ));
    }
    let mut rng = seed::rng(seed::derive(seed, &[seed::tag::QUERY]));
    let mode = table.mode_value();
    let drawn = if biased {
        let m = mode.ok_or(Error::ShortcutUnrealizable(op_kind))?;
        biased_program(table, op_kind, m, shape, &mut rng).ok_or(Error::ShortcutUnrealizable(op_kind))?
    } else {
        unbiased_program(table, op_kind, mode, shape, &mut rng)?
    };
    let gold_answer = evaluate_program(table, &drawn.tree)?;
    let question = render_question(table, &drawn);
    let gold_program = GoldProgram::from_tree(table, drawn.tree)?;
    Ok(Query {
        query_id: format!("q-{seed:016x}"),
        table_id: table.table_id.clone(),
        question,
        op_kind,
        gold_program,
        gold_answer,
        shortcut_bias: biased,
    })
}

/// COUNT questions mention more rows than the program keeps, plus a threshold.
struct CountScope {
    rows: Vec<usize>,
    col: usize,
    threshold: Num,
}

struct Drawn {
    tree: Program,
    count_scope: Option<CountScope>,
}

impl From<Program> for Drawn {
    fn from(tree: Program) -> Self {
        Drawn {
            tree,
            count_scope: None,
        }
    }
}

fn answer_hits(answer: &Answer, mode: Option<Num>) -> bool {
    match (answer, mode) {
        (Answer::Number(n), Some(m)) => n.same_value(m),
        _ => false,
    }
}

fn require(op: OpKind, ok: bool, why: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::NotApplicable(op, why.to_string()))
    }
}

fn sample_rows(rng: &mut seed::Rng, n_rows: usize, k: usize, include: Option<usize>) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n_rows).filter(|&r| Some(r) != include).collect();
    pool.shuffle(rng);
    let mut rows: Vec<usize> = include.into_iter().chain(pool).take(k).collect();
    rows.shuffle(rng);
    rows
}

fn cells_in(col: usize, rows: &[usize]) -> Vec<CellRef> {
    rows.iter().map(|&r| CellRef::new(r, col)).collect()
}

fn unique_max(table: &Table, keys: &[CellRef]) -> bool {
    let vals: Vec<Num> = keys.iter().filter_map(|&k| table.num_at(k)).collect();
    match vals.iter().copied().reduce(Num::max_value) {
        Some(m) => vals.len() == keys.len() && vals.iter().filter(|v| v.same_value(m)).count() == 1,
        None => false,
    }
}

fn count_scope(table: &Table, col: usize, rows: Vec<usize>, threshold: Num) -> Drawn {
    let matching: Vec<CellRef> = cells_in(col, &rows)
        .into_iter()
        .filter(|&cell| {
            table
                .num_at(cell)
                .is_some_and(|v| v.cmp_value(threshold) == Ordering::Greater)
        })
        .collect();
    Drawn {
        tree: Program::Count(matching),
        count_scope: Some(CountScope { rows, col, threshold }),
    }
}

fn unbiased_program(
    table: &Table,
    op: OpKind,
    mode: Option<Num>,
    shape: QueryShape,
    rng: &mut seed::Rng,
) -> Result<Drawn> {
    let numeric_cols = table.numeric_cols();
    let n_rows = table.n_rows;
    match op {
        OpKind::Lookup => {}
        OpKind::MultihopLookup => {
            require(op, table.n_cols >= 2, "needs two columns")?;
            require(op, !numeric_cols.is_empty(), "needs a numeric key column")?;
            require(op, n_rows >= shape.min_cells, "too few rows")?;
        }
        _ => {
            require(op, !numeric_cols.is_empty(), "no numeric column")?;
            require(op, n_rows >= shape.min_cells, "too few rows")?;
        }
    }
    let k_hi = shape.max_cells.min(n_rows).max(shape.min_cells);
    for _ in 0..256 {
        let k = rng.random_range(shape.min_cells..=k_hi);
        let col = numeric_cols.choose(rng).copied();
        let drawn: Option<Drawn> = match (op, col) {
            (OpKind::Lookup, _) => {
                let cell = CellRef::new(rng.random_range(0..n_rows), rng.random_range(0..table.n_cols));
                Some(Program::Lookup(cell).into())
            }
            (OpKind::Sum, Some(c)) => Some(Program::Sum(cells_in(c, &sample_rows(rng, n_rows, k, None))).into()),
            (OpKind::Max, Some(c)) => Some(Program::Max(cells_in(c, &sample_rows(rng, n_rows, k, None))).into()),
            (OpKind::Min, Some(c)) => Some(Program::Min(cells_in(c, &sample_rows(rng, n_rows, k, None))).into()),
            (OpKind::Compare, Some(c)) => {
                let rows = sample_rows(rng, n_rows, 2, None);
                Some(Program::Compare(CellRef::new(rows[0], c), CellRef::new(rows[1], c)).into())
            }
            (OpKind::Diff, Some(c)) => {
                let rows = sample_rows(rng, n_rows, 2, None);
                let (a, b) = (CellRef::new(rows[0], c), CellRef::new(rows[1], c));
                let (x, y) = (table.num_at(a), table.num_at(b));
                // "How much higher is a than b" keeps the larger value first.
                let swap = matches!((x, y), (Some(x), Some(y)) if x.cmp_value(y) == Ordering::Less);
                Some(if swap { Program::Diff(b, a) } else { Program::Diff(a, b) }.into())
            }
            (OpKind::Count, Some(c)) => {
                let rows = sample_rows(rng, n_rows, k, None);
                let vals: Vec<Num> = rows.iter().filter_map(|&r| table.num_at(CellRef::new(r, c))).collect();
                let max = vals
                    .iter()
                    .copied()
                    .reduce(|a, b| if b.cmp_value(a) == Ordering::Greater { b } else { a });
                // Threshold strictly below the largest value so at least one cell counts.
                let below: Vec<Num> = vals
                    .iter()
                    .copied()
                    .filter(|v| max.is_some_and(|m| v.cmp_value(m) == Ordering::Less))
                    .collect();
                below.choose(rng).map(|&t| count_scope(table, c, rows, t))
            }
            (OpKind::MultihopLookup, Some(key_col)) => {
                let targets: Vec<usize> = (0..table.n_cols).filter(|&t| t != key_col).collect();
                let target_col = *targets.choose(rng).expect("n_cols >= 2 checked above");
                let keys = cells_in(key_col, &sample_rows(rng, n_rows, k, None));
                unique_max(table, &keys).then(|| Program::MultihopLookup { keys, target_col }.into())
            }
            (_, None) => None,
        };
        let Some(drawn) = drawn else { continue };
        let ans = evaluate_program(table, &drawn.tree)?;
        if !answer_hits(&ans, mode) {
            return Ok(drawn);
        }
    }
    Err(Error::NotApplicable(op, "no candidate avoids the shortcut cue".into()))
}

/// Construct a program whose answer equals the table mode `m`, if one exists.
fn biased_program(table: &Table, op: OpKind, m: Num, shape: QueryShape, rng: &mut seed::Rng) -> Option<Drawn> {
    let n_rows = table.n_rows;
    let mut mode_cells: Vec<CellRef> = table
        .numeric_cells()
        .filter(|(_, n)| n.same_value(m))
        .map(|(c, _)| c)
        .collect();
    mode_cells.shuffle(rng);
    let extra_hi = shape.max_cells.saturating_sub(1).max(1);
    let col_vals = |col: usize| -> Vec<(usize, Num)> {
        (0..n_rows)
            .filter_map(|r| table.num_at(CellRef::new(r, col)).map(|v| (r, v)))
            .collect()
    };
    let with_extras = |rng: &mut seed::Rng, anchor: CellRef, mut pool: Vec<usize>| -> Option<Vec<usize>> {
        let need = shape.min_cells - 1;
        if pool.len() < need {
            return None;
        }
        pool.shuffle(rng);
        let k = rng.random_range(need..=extra_hi.min(pool.len()).max(need));
        let mut rows: Vec<usize> = pool.into_iter().take(k).collect();
        rows.push(anchor.row);
        rows.shuffle(rng);
        Some(rows)
    };
    match op {
        OpKind::Lookup => mode_cells.first().map(|&c| Program::Lookup(c).into()),
        OpKind::Max | OpKind::Min => mode_cells.iter().find_map(|&cell| {
            let want = if op == OpKind::Max {
                Ordering::Greater
            } else {
                Ordering::Less
            };
            let pool: Vec<usize> = col_vals(cell.col)
                .into_iter()
                .filter(|&(r, v)| r != cell.row && m.cmp_value(v) != want.reverse())
                .map(|(r, _)| r)
                .collect();
            let rows = with_extras(rng, cell, pool)?;
            let cells = cells_in(cell.col, &rows);
            Some(
                if op == OpKind::Max {
                    Program::Max(cells)
                } else {
                    Program::Min(cells)
                }
                .into(),
            )
        }),
        OpKind::MultihopLookup => mode_cells.iter().find_map(|&target| {
            let mut key_cols: Vec<usize> = table.numeric_cols().into_iter().filter(|&c| c != target.col).collect();
            key_cols.shuffle(rng);
            key_cols.into_iter().find_map(|kc| {
                let key_val = table.num_at(CellRef::new(target.row, kc))?;
                let pool: Vec<usize> = col_vals(kc)
                    .into_iter()
                    .filter(|&(r, v)| r != target.row && v.cmp_value(key_val) == Ordering::Less)
                    .map(|(r, _)| r)
                    .collect();
                let rows = with_extras(rng, target, pool)?;
                Some(
                    Program::MultihopLookup {
                        keys: cells_in(kc, &rows),
                        target_col: target.col,
                    }
                    .into(),
                )
            })
        }),
        OpKind::Sum | OpKind::Diff => {
            let mut pairs = Vec::new();
            for col in table.numeric_cols() {
                let vals = col_vals(col);
                for &(ra, a) in &vals {
                    for &(rb, b) in &vals {
                        if ra == rb || (op == OpKind::Sum && ra > rb) {
                            continue;
                        }
                        let v = if op == OpKind::Sum {
                            a.checked_add(b)
                        } else {
                            a.checked_sub(b)
                        };
                        if v.is_some_and(|v| v.same_value(m)) {
                            pairs.push((CellRef::new(ra, col), CellRef::new(rb, col)));
                        }
                    }
                }
            }
            pairs.choose(rng).map(|&(a, b)| {
                if op == OpKind::Sum {
                    Program::Sum(vec![a, b]).into()
                } else {
                    Program::Diff(a, b).into()
                }
            })
        }
        OpKind::Count => {
            if m.is_decimal() && m.hundredths() % 100 != 0 {
                return None;
            }
            let target = usize::try_from(m.hundredths() / 100).ok().filter(|&t| t >= 1)?;
            let mut cols = table.numeric_cols();
            cols.shuffle(rng);
            cols.into_iter().find_map(|col| {
                let mut rows: Vec<usize> = (0..n_rows).collect();
                rows.shuffle(rng);
                let size = rows.len();
                if size < target.max(2) {
                    return None;
                }
                let mut vals: Vec<Num> = rows
                    .iter()
                    .filter_map(|&r| table.num_at(CellRef::new(r, col)))
                    .collect();
                vals.sort_by(|a, b| b.cmp_value(*a));
                let threshold = if target == size {
                    vals[size - 1].checked_sub(Num::Int(1))?
                } else if vals[target - 1].cmp_value(vals[target]) == Ordering::Greater {
                    vals[target]
                } else {
                    return None;
                };
                Some(count_scope(table, col, rows, threshold))
            })
        }
        OpKind::Compare => None,
    }
}

fn quote(s: &str) -> String {
    format!("\"{s}\"")
}

fn list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn row_list(table: &Table, cells: &[CellRef]) -> String {
    let names: Vec<String> = cells.iter().map(|c| quote(&table.row_headers[c.row])).collect();
    list(&names)
}

fn render_question(table: &Table, drawn: &Drawn) -> String {
    let col = |c: usize| quote(&table.col_headers[c]);
    let row = |r: usize| quote(&table.row_headers[r]);
    match &drawn.tree {
        Program::Lookup(c) => format!("What is the {} of {}?", col(c.col), row(c.row)),
        Program::Sum(cs) => format!("What is the total {} of {}?", col(cs[0].col), row_list(table, cs)),
        Program::Diff(a, b) => format!(
            "How much higher is the {} of {} than that of {}?",
            col(a.col),
            row(a.row),
            row(b.row)
        ),
        Program::Max(cs) => format!("What is the highest {} among {}?", col(cs[0].col), row_list(table, cs)),
        Program::Min(cs) => format!("What is the lowest {} among {}?", col(cs[0].col), row_list(table, cs)),
        Program::Compare(a, b) => format!(
            "Is the {} of {} greater than that of {}?",
            col(a.col),
            row(a.row),
            row(b.row)
        ),
        Program::MultihopLookup { keys, target_col } => format!(
            "What is the {} of the row with the highest {} among {}?",
            col(*target_col),
            col(keys[0].col),
            row_list(table, keys)
        ),
        Program::Count(_) => {
            let scope = drawn.count_scope.as_ref().expect("count questions carry their scope");
            let names: Vec<String> = scope.rows.iter().map(|&r| row(r)).collect();
            format!(
                "How many of {} have a {} above {}?",
                list(&names),
                col(scope.col),
                scope.threshold
            )
        }
    }
}
