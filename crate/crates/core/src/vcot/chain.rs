use std::cmp::Ordering;

use super::{OpToken, TraceStep, Trajectory};
use crate::error::Result;
use crate::table_env::{Answer, CellRef, CellValue, GoldProgram, Num, Program, Table};

/// Running value of a chain as claimed so far. Each step is judged against
/// the state its predecessors claim, so one upstream mistake is charged once.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChainState {
    pub running: Option<CellValue>,
    pub last_op: Option<OpToken>,
}

impl ChainState {
    /// The intermediate an op must produce when applied to `value`. `READ`
    /// produces none; `None` is also returned for ops with no defined result
    /// (missing or non-numeric operands, overflow).
    pub fn expected_intermediate(&self, op: OpToken, value: &CellValue) -> Option<Num> {
        let prev = self.running.as_ref().and_then(CellValue::as_num);
        match op {
            OpToken::Read => None,
            OpToken::Count => {
                let base = match (self.last_op, prev) {
                    (Some(OpToken::Count), Some(n)) => n,
                    _ => Num::Int(0),
                };
                base.checked_add(Num::Int(1))
            }
            _ => {
                let (p, v) = (prev?, value.as_num()?);
                match op {
                    OpToken::Add => p.checked_add(v),
                    OpToken::Sub => p.checked_sub(v),
                    OpToken::Max => Some(p.max_value(v)),
                    OpToken::Min => Some(p.min_value(v)),
                    OpToken::Cmp => Some(Num::Int((p.cmp_value(v) == Ordering::Greater) as i64)),
                    OpToken::Read | OpToken::Count => unreachable!(),
                }
            }
        }
    }

    /// Move past a step using what it claims.
    pub fn advance(&mut self, step: &TraceStep) {
        self.running = match step.op_token {
            OpToken::Read => Some(step.claimed_value.clone()),
            _ => step.intermediate.map(CellValue::Num),
        };
        self.last_op = Some(step.op_token);
    }

    /// The running value read out as an answer; a comparison yields yes/no.
    pub fn answer(&self) -> Option<Answer> {
        let v = self.running.clone()?;
        match (self.last_op, &v) {
            (Some(OpToken::Cmp), CellValue::Num(n)) => Some(Answer::Bool(n.hundredths() != 0)),
            _ => Some(Answer::from(v)),
        }
    }

    /// Build the next step that claims the true value at `cell`.
    pub fn step(&self, table: &Table, index: usize, cell: CellRef, op: OpToken) -> Result<TraceStep> {
        let value = table.checked_cell(cell)?.clone();
        let intermediate = self.expected_intermediate(op, &value);
        Ok(TraceStep {
            step_index: index,
            anchor: cell,
            claimed_value: value,
            op_token: op,
            intermediate,
        })
    }
}

/// The rigorous chain for a gold program: every required read, in order,
/// with exact intermediates, answering with the final running value.
pub fn canonical_chain(table: &Table, gold: &GoldProgram) -> Result<Trajectory> {
    let cells: Vec<CellRef> = gold.anchors().collect();
    let first = |agg: OpToken| move |i: usize| if i == 0 { OpToken::Read } else { agg };
    let op_at: Box<dyn Fn(usize) -> OpToken> = match &gold.tree {
        Program::Lookup(_) => Box::new(|_| OpToken::Read),
        Program::Sum(_) => Box::new(first(OpToken::Add)),
        Program::Diff(..) => Box::new(first(OpToken::Sub)),
        Program::Max(_) => Box::new(first(OpToken::Max)),
        Program::Min(_) => Box::new(first(OpToken::Min)),
        Program::Count(_) => Box::new(|_| OpToken::Count),
        Program::Compare(..) => Box::new(first(OpToken::Cmp)),
        Program::MultihopLookup { keys, .. } => {
            let n = keys.len();
            Box::new(move |i| if i == 0 || i == n { OpToken::Read } else { OpToken::Max })
        }
    };
    let mut state = ChainState::default();
    let mut steps = Vec::with_capacity(cells.len());
    for (i, &cell) in cells.iter().enumerate() {
        let step = state.step(table, i, cell, op_at(i))?;
        state.advance(&step);
        steps.push(step);
    }
    let answer = if steps.is_empty() {
        // Only an empty COUNT has no reads.
        Some(Answer::Number(Num::Int(0)))
    } else {
        state.answer()
    };
    Ok(Trajectory::new(steps, answer))
}
