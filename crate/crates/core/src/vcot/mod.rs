//! Visual chain-of-thought trajectories.
//!
//! A trajectory is a list of anchored steps followed by a final answer. The
//! text form is line oriented:
//!
//! ```text
//! <step 0> <cell: Row 14, Col 4> value=8189 op=READ
//! <step 1> <cell: Row 15, Col 4> value=4911 op=SUB acc=3278
//! <answer> 3278
//! ```
//!
//! Text cell values and text answers are JSON-quoted strings. Boolean answers
//! are written `yes` / `no`.

mod chain;
mod grammar;
mod perturb;

use serde::{Deserialize, Serialize};

use crate::table_env::{Answer, CellRef, CellValue, Num};

pub use chain::{canonical_chain, ChainState};
pub use grammar::{parse, serialize, Diagnostic, DiagnosticKind, ParseOutcome};
pub use perturb::{perturb, PerturbKind, PerturbationSpec};

/// Operation applied at a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OpToken {
    Read,
    Add,
    Sub,
    Max,
    Min,
    Count,
    Cmp,
}

impl OpToken {
    pub const ALL: [OpToken; 7] = [
        OpToken::Read,
        OpToken::Add,
        OpToken::Sub,
        OpToken::Max,
        OpToken::Min,
        OpToken::Count,
        OpToken::Cmp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpToken::Read => "READ",
            OpToken::Add => "ADD",
            OpToken::Sub => "SUB",
            OpToken::Max => "MAX",
            OpToken::Min => "MIN",
            OpToken::Count => "COUNT",
            OpToken::Cmp => "CMP",
        }
    }

    pub fn from_name(s: &str) -> Option<OpToken> {
        OpToken::ALL.into_iter().find(|o| o.name() == s)
    }

    /// Ops that combine a numeric running value with a numeric cell.
    pub fn needs_numeric_running(self) -> bool {
        matches!(
            self,
            OpToken::Add | OpToken::Sub | OpToken::Max | OpToken::Min | OpToken::Cmp
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step_index: usize,
    pub anchor: CellRef,
    /// Value the trajectory claims lives at `anchor`.
    pub claimed_value: CellValue,
    pub op_token: OpToken,
    /// Running value after the op. `READ` carries none.
    pub intermediate: Option<Num>,
}

/// Text-level trajectory. Sampling records (action ids and log-probabilities)
/// live on the policy's rollout type since the text form cannot carry them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<TraceStep>,
    pub answer: Option<Answer>,
    /// True when produced by a clean parse or built programmatically.
    pub well_formed: bool,
}

impl Trajectory {
    pub fn new(steps: Vec<TraceStep>, answer: Option<Answer>) -> Self {
        Trajectory {
            steps,
            answer,
            well_formed: true,
        }
    }

    pub fn anchors(&self) -> impl Iterator<Item = CellRef> + '_ {
        self.steps.iter().map(|s| s.anchor)
    }

    /// Renumber steps 0, 1, ...
    pub fn reindex(&mut self) {
        for (i, s) in self.steps.iter_mut().enumerate() {
            s.step_index = i;
        }
    }
}
