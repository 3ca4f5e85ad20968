use std::collections::HashSet;

use super::cues::{parse_question, QuestionCues, QuestionKind};
use super::snapshot::PolicySnapshot;
use super::{log_softmax, logits, score_function, Action, AnswerSource};
use crate::error::{Error, Result};
use crate::table_env::{Answer, CellRef, Num, Table};
use crate::vcot::{ChainState, OpToken, TraceStep, Trajectory};

/// Names of the entries of `phi(state, action)`, in order.
pub const FEATURE_NAMES: [&str; 39] = [
    "sel.bias",
    "sel.row_mentioned",
    "sel.col_asked",
    "sel.col_key",
    "sel.required",
    "sel.next_required",
    "sel.already_selected",
    "sel.after_all_required",
    "sel.equals_mode",
    "sel.numeric",
    "sel.above_threshold",
    "sel.first_mentioned_row",
    "sel.step_count",
    "sel.row_pos",
    "sel.col_pos",
    "sel.value_rank",
    "op.read",
    "op.add",
    "op.sub",
    "op.max",
    "op.min",
    "op.count",
    "op.cmp",
    "op.natural",
    "op.read_first",
    "op.count_for_how_many",
    "op.read_target",
    "op.max_on_key",
    "op.natural_on_required",
    "ans.running",
    "ans.last_read",
    "ans.mode",
    "ans.running_complete",
    "ans.last_read_complete",
    "ans.mode_no_steps",
    "ans.no_steps",
    "ans.mode_complete",
    "stop.bias",
    "stop.complete",
];

pub const FEATURE_DIM: usize = FEATURE_NAMES.len();

const SEL: usize = 0;
const OP: usize = 16;
const ANS: usize = 29;
const STOP: usize = 37;

/// Everything the policy conditions on: the table, cues parsed from the
/// question, and a summary of the partial trajectory.
#[derive(Clone, Debug)]
pub struct RolloutState<'a> {
    table: &'a Table,
    cues: QuestionCues,
    required: Vec<CellRef>,
    mode: Option<Num>,
    /// Sorted numeric values in hundredths, for value-rank features.
    sorted: Vec<i128>,
    max_tokens: usize,
    steps: Vec<TraceStep>,
    selected: HashSet<CellRef>,
    chain: ChainState,
    pending: Option<CellRef>,
    tokens: usize,
    done: bool,
    answer: Option<Answer>,
}

impl<'a> RolloutState<'a> {
    pub fn new(table: &'a Table, question: &str, max_tokens: usize) -> Self {
        let cues = parse_question(table, question);
        let required = cues.required_cells(table);
        let mut sorted: Vec<i128> = table.numeric_cells().map(|(_, n)| n.hundredths()).collect();
        sorted.sort_unstable();
        RolloutState {
            table,
            cues,
            required,
            mode: table.mode_value(),
            sorted,
            max_tokens,
            steps: Vec::new(),
            selected: HashSet::new(),
            chain: ChainState::default(),
            pending: None,
            tokens: 0,
            done: false,
            answer: None,
        }
    }

    pub fn cues(&self) -> &QuestionCues {
        &self.cues
    }

    pub fn tokens_used(&self) -> usize {
        self.tokens
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    pub fn is_done(&self) -> bool {
        self.done || self.tokens >= self.max_tokens
    }

    fn all_required_selected(&self) -> bool {
        !self.required.is_empty() && self.required.iter().all(|c| self.selected.contains(c))
    }

    fn running_num(&self) -> Option<Num> {
        self.chain.running.as_ref().and_then(|v| v.as_num())
    }

    /// Legal actions in vocabulary order. Cell selection needs room for its
    /// op and an answer, so a rollout never runs out of budget mid-step.
    pub fn legal_actions(&self) -> Vec<Action> {
        if self.is_done() {
            return Vec::new();
        }
        if let Some(p) = self.pending {
            let numeric = self.running_num().is_some() && self.table.num_at(p).is_some();
            return OpToken::ALL
                .into_iter()
                .filter(|op| !op.needs_numeric_running() || numeric)
                .map(Action::EmitOp)
                .collect();
        }
        let mut out = Vec::new();
        if self.tokens + 3 <= self.max_tokens {
            out.extend(self.table.cell_refs().map(Action::SelectCell));
        }
        if self.chain.running.is_some() {
            out.push(Action::EmitAnswer(AnswerSource::Running));
        }
        if !self.steps.is_empty() {
            out.push(Action::EmitAnswer(AnswerSource::LastRead));
        }
        if self.mode.is_some() {
            out.push(Action::EmitAnswer(AnswerSource::Mode));
        }
        if !self.steps.is_empty() {
            out.push(Action::Stop);
        }
        out
    }

    fn natural_op(&self, cell: CellRef) -> OpToken {
        let first = self.steps.is_empty();
        let then = |op: OpToken| if first { OpToken::Read } else { op };
        match self.cues.kind {
            QuestionKind::Lookup | QuestionKind::Unknown => OpToken::Read,
            QuestionKind::Sum => then(OpToken::Add),
            QuestionKind::Diff => then(OpToken::Sub),
            QuestionKind::Max => then(OpToken::Max),
            QuestionKind::Min => then(OpToken::Min),
            QuestionKind::Compare => then(OpToken::Cmp),
            QuestionKind::Count => OpToken::Count,
            QuestionKind::Multihop if Some(cell.col) == self.cues.col => OpToken::Read,
            QuestionKind::Multihop => then(OpToken::Max),
        }
    }

    /// `phi(state, action)`. Each action family uses its own block.
    pub fn features(&self, action: Action) -> [f64; FEATURE_DIM] {
        let mut f = [0.0; FEATURE_DIM];
        let b = |x: bool| x as u8 as f64;
        let complete = self.all_required_selected();
        let n_steps = self.steps.len();
        match action {
            Action::SelectCell(c) => {
                let v = self.table.num_at(c);
                let next = self.required.iter().find(|r| !self.selected.contains(r));
                f[SEL] = 1.0;
                f[SEL + 1] = b(self.cues.rows.contains(&c.row));
                f[SEL + 2] = b(self.cues.col == Some(c.col));
                f[SEL + 3] = b(self.cues.key_col == Some(c.col));
                f[SEL + 4] = b(self.required.contains(&c));
                f[SEL + 5] = b(next == Some(&c));
                f[SEL + 6] = b(self.selected.contains(&c));
                f[SEL + 7] = b(complete);
                f[SEL + 8] = b(matches!((v, self.mode), (Some(v), Some(m)) if v.same_value(m)));
                f[SEL + 9] = b(v.is_some());
                f[SEL + 10] = b(self.cues.kind == QuestionKind::Count
                    && matches!((v, self.cues.threshold), (Some(v), Some(t)) if v.cmp_value(t).is_gt()));
                f[SEL + 11] = b(self.cues.rows.first() == Some(&c.row));
                f[SEL + 12] = n_steps as f64 / 4.0;
                f[SEL + 13] = c.row as f64 / self.table.n_rows as f64;
                f[SEL + 14] = c.col as f64 / self.table.n_cols as f64;
                if let Some(v) = v {
                    let rank = self.sorted.partition_point(|&h| h < v.hundredths());
                    f[SEL + 15] = rank as f64 / self.sorted.len().max(2).saturating_sub(1) as f64;
                }
            }
            Action::EmitOp(op) => {
                let p = self.pending.expect("ops follow a selected cell");
                let natural = op == self.natural_op(p);
                let multihop = self.cues.kind == QuestionKind::Multihop;
                f[OP + OpToken::ALL.iter().position(|&o| o == op).expect("known op")] = 1.0;
                f[OP + 7] = b(natural);
                f[OP + 8] = b(op == OpToken::Read && n_steps == 0);
                f[OP + 9] = b(op == OpToken::Count && self.cues.kind == QuestionKind::Count);
                f[OP + 10] = b(op == OpToken::Read && multihop && self.cues.col == Some(p.col));
                f[OP + 11] = b(op == OpToken::Max && multihop && self.cues.key_col == Some(p.col));
                f[OP + 12] = b(natural && self.required.contains(&p));
            }
            Action::EmitAnswer(src) => {
                f[ANS] = b(src == AnswerSource::Running);
                f[ANS + 1] = b(src == AnswerSource::LastRead);
                f[ANS + 2] = b(src == AnswerSource::Mode);
                f[ANS + 3] = b(src == AnswerSource::Running && complete);
                f[ANS + 4] = b(src == AnswerSource::LastRead && complete);
                f[ANS + 5] = b(src == AnswerSource::Mode && n_steps == 0);
                f[ANS + 6] = b(n_steps == 0);
                f[ANS + 7] = b(src == AnswerSource::Mode && complete);
            }
            Action::Stop => {
                f[STOP] = 1.0;
                f[STOP + 1] = b(complete);
            }
        }
        f
    }

    /// Row-major feature matrix for `actions`.
    pub fn feature_matrix(&self, actions: &[Action]) -> Vec<f64> {
        actions.iter().flat_map(|&a| self.features(a)).collect()
    }

    /// Advance by one token.
    pub fn apply(&mut self, action: Action) -> Result<()> {
        if !self.legal_actions().contains(&action) {
            return Err(Error::IllegalAction(format!("{action:?}")));
        }
        self.tokens += 1;
        match action {
            Action::SelectCell(c) => self.pending = Some(c),
            Action::EmitOp(op) => {
                let cell = self.pending.take().expect("legal only with a pending cell");
                let step = self.chain.step(self.table, self.steps.len(), cell, op)?;
                self.chain.advance(&step);
                self.selected.insert(cell);
                self.steps.push(step);
            }
            Action::EmitAnswer(src) => {
                self.answer = match src {
                    AnswerSource::Running => self.chain.answer(),
                    AnswerSource::LastRead => self.steps.last().map(|s| Answer::from(s.claimed_value.clone())),
                    AnswerSource::Mode => self.mode.map(Answer::Number),
                };
                self.done = true;
            }
            Action::Stop => self.done = true,
        }
        Ok(())
    }

    /// The trajectory built so far. A selected cell still waiting for its op
    /// is dropped.
    pub fn trajectory(&self) -> Trajectory {
        Trajectory::new(self.steps.clone(), self.answer.clone())
    }
}

fn check_dim(snapshot: &PolicySnapshot) -> Result<()> {
    if snapshot.theta.len() != FEATURE_DIM || snapshot.feature_spec.dim != FEATURE_DIM {
        return Err(Error::FeatureSpecMismatch {
            expected: super::FeatureSpec::current().to_string(),
            found: snapshot.feature_spec.to_string(),
        });
    }
    Ok(())
}

/// Log-probabilities of the legal actions under `snapshot`.
pub fn action_logprobs(state: &RolloutState<'_>, snapshot: &PolicySnapshot) -> Result<Vec<(Action, f64)>> {
    check_dim(snapshot)?;
    let actions = state.legal_actions();
    if actions.is_empty() {
        return Err(Error::Policy("no legal actions".into()));
    }
    let lp = log_softmax(&logits(&snapshot.theta, &state.feature_matrix(&actions)));
    Ok(actions.into_iter().zip(lp).collect())
}

/// Gradient of `log pi(action | state)` with respect to theta.
pub fn logprob_grad(state: &RolloutState<'_>, action: Action, snapshot: &PolicySnapshot) -> Result<Vec<f64>> {
    check_dim(snapshot)?;
    let actions = state.legal_actions();
    let chosen = actions
        .iter()
        .position(|&a| a == action)
        .ok_or_else(|| Error::IllegalAction(format!("{action:?}")))?;
    Ok(score_function(&snapshot.theta, &state.feature_matrix(&actions), chosen))
}
