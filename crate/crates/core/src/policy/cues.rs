use std::cmp::Ordering;

use crate::table_env::{CellRef, Num, Table};

/// Question family as recognized from its wording.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuestionKind {
    Lookup,
    Sum,
    Diff,
    Max,
    Min,
    Count,
    Compare,
    Multihop,
    Unknown,
}

/// What the policy can read off the question text: the quoted headers it
/// mentions, the question family and a COUNT threshold. The gold program is
/// never consulted.
#[derive(Clone, Debug, PartialEq)]
pub struct QuestionCues {
    pub kind: QuestionKind,
    /// Mentioned rows in order of mention.
    pub rows: Vec<usize>,
    /// Column asked about (the target column for multi-hop questions).
    pub col: Option<usize>,
    /// Column whose maximum selects the row in multi-hop questions.
    pub key_col: Option<usize>,
    pub threshold: Option<Num>,
}

fn quoted(s: &str) -> Vec<&str> {
    s.split('"').skip(1).step_by(2).collect()
}

pub fn parse_question(table: &Table, question: &str) -> QuestionCues {
    let q = question.trim();
    let kind = if q.contains("of the row with the highest") {
        QuestionKind::Multihop
    } else if q.starts_with("What is the total") {
        QuestionKind::Sum
    } else if q.starts_with("How much higher") {
        QuestionKind::Diff
    } else if q.starts_with("What is the highest") {
        QuestionKind::Max
    } else if q.starts_with("What is the lowest") {
        QuestionKind::Min
    } else if q.starts_with("How many of") {
        QuestionKind::Count
    } else if q.starts_with("Is the") {
        QuestionKind::Compare
    } else if q.starts_with("What is the") {
        QuestionKind::Lookup
    } else {
        QuestionKind::Unknown
    };
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    for h in quoted(q) {
        if let Some(c) = table.col_index(h) {
            cols.push(c);
        } else if let Some(r) = table.row_index(h) {
            rows.push(r);
        }
    }
    let threshold = q
        .rsplit_once(" above ")
        .and_then(|(_, t)| t.trim_end_matches('?').trim().parse::<Num>().ok());
    QuestionCues {
        kind,
        rows,
        col: cols.first().copied(),
        key_col: if kind == QuestionKind::Multihop {
            cols.get(1).copied()
        } else {
            None
        },
        threshold,
    }
}

impl QuestionCues {
    /// Cells a rigorous chain should visit, in order, as inferred from the
    /// question and the table.
    pub fn required_cells(&self, table: &Table) -> Vec<CellRef> {
        let Some(col) = self.col else { return Vec::new() };
        let in_col = |c: usize| self.rows.iter().map(move |&r| CellRef::new(r, c));
        match self.kind {
            QuestionKind::Lookup => self
                .rows
                .first()
                .map(|&r| vec![CellRef::new(r, col)])
                .unwrap_or_default(),
            QuestionKind::Sum | QuestionKind::Diff | QuestionKind::Max | QuestionKind::Min | QuestionKind::Compare => {
                in_col(col).collect()
            }
            QuestionKind::Count => match self.threshold {
                Some(t) => in_col(col)
                    .filter(|&c| table.num_at(c).is_some_and(|v| v.cmp_value(t) == Ordering::Greater))
                    .collect(),
                None => Vec::new(),
            },
            QuestionKind::Multihop => {
                let Some(key) = self.key_col else { return Vec::new() };
                let mut cells: Vec<CellRef> = in_col(key).collect();
                let mut best: Option<(usize, Num)> = None;
                for c in &cells {
                    if let Some(v) = table.num_at(*c) {
                        if best.is_none_or(|(_, b)| v.cmp_value(b) == Ordering::Greater) {
                            best = Some((c.row, v));
                        }
                    }
                }
                match best {
                    Some((r, _)) => cells.push(CellRef::new(r, col)),
                    None => cells.clear(),
                }
                cells
            }
            QuestionKind::Unknown => Vec::new(),
        }
    }
}
