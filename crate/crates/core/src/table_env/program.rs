use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::table::{CellRef, Table};
use super::value::{Answer, CellValue, Num};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OpKind {
    Lookup,
    Sum,
    Diff,
    Max,
    Min,
    Count,
    Compare,
    MultihopLookup,
}

impl OpKind {
    pub const ALL: [OpKind; 8] = [
        OpKind::Lookup,
        OpKind::Sum,
        OpKind::Diff,
        OpKind::Max,
        OpKind::Min,
        OpKind::Count,
        OpKind::Compare,
        OpKind::MultihopLookup,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Lookup => "LOOKUP",
            OpKind::Sum => "SUM",
            OpKind::Diff => "DIFF",
            OpKind::Max => "MAX",
            OpKind::Min => "MIN",
            OpKind::Count => "COUNT",
            OpKind::Compare => "COMPARE",
            OpKind::MultihopLookup => "MULTIHOP_LOOKUP",
        }
    }

    pub fn from_name(s: &str) -> Option<OpKind> {
        OpKind::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s))
    }
}

/// Operation tree of a gold program. Leaves are cell references; evaluation
/// always reads the table, never the recorded expected values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Program {
    Lookup(CellRef),
    Sum(Vec<CellRef>),
    /// `a - b`.
    Diff(CellRef, CellRef),
    Max(Vec<CellRef>),
    Min(Vec<CellRef>),
    /// Number of selected cells.
    Count(Vec<CellRef>),
    /// `a > b`.
    Compare(CellRef, CellRef),
    /// Row of the largest key (first on ties), then that row's `target_col`.
    MultihopLookup {
        keys: Vec<CellRef>,
        target_col: usize,
    },
}

impl Program {
    pub fn kind(&self) -> OpKind {
        match self {
            Program::Lookup(_) => OpKind::Lookup,
            Program::Sum(_) => OpKind::Sum,
            Program::Diff(..) => OpKind::Diff,
            Program::Max(_) => OpKind::Max,
            Program::Min(_) => OpKind::Min,
            Program::Count(_) => OpKind::Count,
            Program::Compare(..) => OpKind::Compare,
            Program::MultihopLookup { .. } => OpKind::MultihopLookup,
        }
    }
}

/// One required read of a gold program: an anchor and the value expected there.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRead {
    pub cell: CellRef,
    pub value: CellValue,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldProgram {
    /// Ordered anchors a rigorous chain visits.
    pub reads: Vec<GoldRead>,
    pub tree: Program,
}

impl GoldProgram {
    /// Build from a tree, resolving the ordered read list against `table`.
    pub fn from_tree(table: &Table, tree: Program) -> Result<GoldProgram> {
        let cells: Vec<CellRef> = match &tree {
            Program::Lookup(c) => vec![*c],
            Program::Sum(cs) | Program::Max(cs) | Program::Min(cs) | Program::Count(cs) => cs.clone(),
            Program::Diff(a, b) | Program::Compare(a, b) => vec![*a, *b],
            Program::MultihopLookup { keys, target_col } => {
                let row = argmax_row(table, keys)?;
                let mut v = keys.clone();
                v.push(CellRef::new(row, *target_col));
                v
            }
        };
        let reads = cells
            .into_iter()
            .map(|cell| table.checked_cell(cell).map(|v| GoldRead { cell, value: v.clone() }))
            .collect::<Result<Vec<_>>>()?;
        Ok(GoldProgram { reads, tree })
    }

    pub fn anchors(&self) -> impl Iterator<Item = CellRef> + '_ {
        self.reads.iter().map(|r| r.cell)
    }
}

fn num(table: &Table, cell: CellRef, op: &'static str) -> Result<Num> {
    table.checked_cell(cell)?.as_num().ok_or(Error::NonNumeric {
        op,
        row: cell.row,
        col: cell.col,
    })
}

fn all_nums(table: &Table, cells: &[CellRef], op: &'static str) -> Result<Vec<Num>> {
    cells.iter().map(|&c| num(table, c, op)).collect()
}

fn argmax_row(table: &Table, keys: &[CellRef]) -> Result<usize> {
    let vals = all_nums(table, keys, "MULTIHOP_LOOKUP")?;
    let mut best: Option<(usize, Num)> = None;
    for (k, v) in keys.iter().zip(vals) {
        if best.is_none_or(|(_, b)| v.cmp_value(b) == Ordering::Greater) {
            best = Some((k.row, v));
        }
    }
    best.map(|(r, _)| r)
        .ok_or_else(|| Error::NotApplicable(OpKind::MultihopLookup, "no key cells".into()))
}

/// Evaluate a program against a table. Pure; integer inputs give exact
/// integer results, any decimal input yields a 2-decimal fixed-point result.
pub fn evaluate_program(table: &Table, program: &Program) -> Result<Answer> {
    let extremum = |cells: &[CellRef], op: &'static str, pick: fn(Num, Num) -> Num| -> Result<Answer> {
        let vals = all_nums(table, cells, op)?;
        vals.into_iter()
            .reduce(pick)
            .map(Answer::Number)
            .ok_or_else(|| Error::NotApplicable(program.kind(), "empty selection".into()))
    };
    match program {
        Program::Lookup(c) => Ok(Answer::from(table.checked_cell(*c)?.clone())),
        Program::Sum(cells) => {
            let vals = all_nums(table, cells, "SUM")?;
            let total = vals
                .into_iter()
                .try_fold(Num::Int(0), |acc, v| acc.checked_add(v).ok_or(Error::Overflow))?;
            Ok(Answer::Number(total))
        }
        Program::Diff(a, b) => {
            let (x, y) = (num(table, *a, "DIFF")?, num(table, *b, "DIFF")?);
            x.checked_sub(y).map(Answer::Number).ok_or(Error::Overflow)
        }
        Program::Max(cells) => extremum(cells, "MAX", Num::max_value),
        Program::Min(cells) => extremum(cells, "MIN", Num::min_value),
        Program::Count(cells) => {
            for &c in cells {
                table.checked_cell(c)?;
            }
            Ok(Answer::Number(Num::Int(cells.len() as i64)))
        }
        Program::Compare(a, b) => {
            let (x, y) = (num(table, *a, "COMPARE")?, num(table, *b, "COMPARE")?);
            Ok(Answer::Bool(x.cmp_value(y) == Ordering::Greater))
        }
        Program::MultihopLookup { keys, target_col } => {
            let row = argmax_row(table, keys)?;
            Ok(Answer::from(
                table.checked_cell(CellRef::new(row, *target_col))?.clone(),
            ))
        }
    }
}
