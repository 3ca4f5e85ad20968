//! Rule-based critic: format, accuracy and process scores, and the path
//! label of a trajectory.
//!
//! Each step gets three verdicts. The anchor must be in bounds and be one of
//! the cells the gold program reads. The claimed value must equal the table
//! value at the anchor. The op is judged only when the value is right, and
//! then locally: its intermediate must equal the op applied to the running
//! value the previous steps claim. The step score is the mean of the three
//! and the process score is the mean over steps.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::table_env::{Answer, CellRef, Num, Query, Table};
use crate::vcot::{self, ChainState, DiagnosticKind, OpToken, ParseOutcome, Trajectory};

/// Behavioural path of a scored trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Path {
    /// Correct answer through a fully verified chain.
    Rigorous,
    /// Wrong answer with an unverified chain (or none).
    Hallucination,
    /// Correct answer without a fully verified chain.
    Shortcut,
    /// Wrong answer despite a fully verified chain.
    FaithfulWrong,
}

impl Path {
    pub const ALL: [Path; 4] = [Path::Rigorous, Path::Hallucination, Path::Shortcut, Path::FaithfulWrong];

    pub fn name(self) -> &'static str {
        match self {
            Path::Rigorous => "RIGOROUS",
            Path::Hallucination => "HALLUCINATION",
            Path::Shortcut => "SHORTCUT",
            Path::FaithfulWrong => "FAITHFUL_WRONG",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepVerdict {
    pub anchor_ok: bool,
    pub value_ok: bool,
    pub op_ok: bool,
}

impl StepVerdict {
    pub fn all_ok(self) -> bool {
        self.anchor_ok && self.value_ok && self.op_ok
    }

    pub fn score(self) -> f64 {
        (self.anchor_ok as u8 + self.value_ok as u8 + self.op_ok as u8) as f64 / 3.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_fmt: f64,
    pub r_acc: f64,
    pub r_proc: f64,
    pub r_base: f64,
    /// Gated reward. Equal to `r_base` until the reward module fills it in.
    pub composite: f64,
    pub path: Path,
    pub per_step_verdicts: Vec<StepVerdict>,
    pub well_formed: bool,
}

const FORMAT_RULES: f64 = 5.0;

/// Fraction of the five structural rules satisfied: the text parses, has at
/// least one step, every step has an anchor, has an answer, and step indices
/// run 0, 1, 2, ... Blank text scores 0.
pub fn score_format(text: &str, parsed: &ParseOutcome) -> f64 {
    if text.trim().is_empty() {
        return 0.0;
    }
    let rules = [
        !parsed.diagnostics.iter().any(|d| d.kind.is_syntax()),
        parsed.step_lines >= 1,
        !parsed.has(DiagnosticKind::MissingAnchor),
        !parsed.has(DiagnosticKind::MissingAnswer),
        !parsed.has(DiagnosticKind::NonContiguousIndex),
    ];
    rules.iter().filter(|&&ok| ok).count() as f64 / FORMAT_RULES
}

#[derive(PartialEq, Eq)]
enum Key {
    Num(i128),
    Str(String),
}

fn key(a: &Answer) -> Key {
    match a {
        Answer::Number(n) => Key::Num(n.hundredths()),
        Answer::Bool(b) => Key::Str(if *b { "yes" } else { "no" }.into()),
        Answer::Text(s) => {
            let t = s.trim().to_lowercase();
            if let Ok(n) = t.parse::<Num>() {
                return Key::Num(n.hundredths());
            }
            match t.as_str() {
                "true" => Key::Str("yes".into()),
                "false" => Key::Str("no".into()),
                _ => Key::Str(t),
            }
        }
    }
}

/// Normalized answer equality. Numbers compare exactly in hundredths, which
/// for 2-decimal values is the same as an absolute tolerance of 0.005; text
/// compares case-insensitively after trimming.
pub fn answers_match(answer: &Answer, gold: &Answer) -> bool {
    key(answer) == key(gold)
}

pub fn score_accuracy(answer: Option<&Answer>, gold: &Answer) -> f64 {
    match answer {
        Some(a) if answers_match(a, gold) => 1.0,
        _ => 0.0,
    }
}

/// Per-step verdicts and their mean. Malformed or empty chains score 0.
pub fn score_process(traj: &Trajectory, table: &Table, query: &Query) -> (f64, Vec<StepVerdict>) {
    let relevant: HashSet<CellRef> = query.gold_program.anchors().collect();
    let mut state = ChainState::default();
    let verdicts: Vec<StepVerdict> = traj
        .steps
        .iter()
        .map(|step| {
            let cell = table.cell(step.anchor);
            let anchor_ok = cell.is_some() && relevant.contains(&step.anchor);
            let value_ok = cell.is_some_and(|v| v.same_value(&step.claimed_value));
            let op_ok = value_ok
                && match step.op_token {
                    OpToken::Read => step.intermediate.is_none(),
                    op => {
                        let want = state.expected_intermediate(op, &step.claimed_value);
                        matches!((want, step.intermediate), (Some(w), Some(got)) if w.same_value(got))
                    }
                };
            state.advance(step);
            StepVerdict {
                anchor_ok,
                value_ok,
                op_ok,
            }
        })
        .collect();
    if !traj.well_formed || verdicts.is_empty() {
        return (0.0, verdicts);
    }
    let total: f64 = verdicts.iter().map(|v| v.score()).sum();
    (total / verdicts.len() as f64, verdicts)
}

/// A chain counts as grounded when it parsed cleanly, has at least one step
/// and every verdict is fully OK.
pub fn classify_path(b: &RewardBreakdown) -> Path {
    let grounded = b.well_formed && !b.per_step_verdicts.is_empty() && b.per_step_verdicts.iter().all(|v| v.all_ok());
    match (b.r_acc >= 1.0, grounded) {
        (true, true) => Path::Rigorous,
        (true, false) => Path::Shortcut,
        (false, true) => Path::FaithfulWrong,
        (false, false) => Path::Hallucination,
    }
}

/// Score an already parsed text.
pub fn verify_parsed(text: &str, parsed: &ParseOutcome, table: &Table, query: &Query) -> RewardBreakdown {
    let traj = &parsed.trajectory;
    let r_fmt = score_format(text, parsed);
    let r_acc = score_accuracy(traj.answer.as_ref(), &query.gold_answer);
    let (r_proc, per_step_verdicts) = score_process(traj, table, query);
    let r_base = r_fmt + r_acc;
    let mut b = RewardBreakdown {
        r_fmt,
        r_acc,
        r_proc,
        r_base,
        composite: r_base,
        path: Path::Hallucination,
        per_step_verdicts,
        well_formed: traj.well_formed,
    };
    b.path = classify_path(&b);
    b
}

/// Parse and score trajectory text.
pub fn verify_text(text: &str, table: &Table, query: &Query) -> RewardBreakdown {
    verify_parsed(text, &vcot::parse(text), table, query)
}

/// Score a trajectory through its text form, so format credit is read off the
/// same grammar a text-producing policy would be held to.
pub fn verify_trajectory(traj: &Trajectory, table: &Table, query: &Query) -> RewardBreakdown {
    verify_text(&vcot::serialize(traj), table, query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table_env::{CellValue, GoldProgram, OpKind, Program};
    use crate::vcot::{canonical_chain, TraceStep};

    fn table_2x1(a: i64, b: i64) -> Table {
        Table::new(
            "t",
            vec!["a".into(), "b".into()],
            vec!["x".into()],
            vec![vec![CellValue::int(a)], vec![CellValue::int(b)]],
            vec![],
        )
        .unwrap()
    }

    fn query(table: &Table, tree: Program) -> Query {
        let gold_program = GoldProgram::from_tree(table, tree).unwrap();
        let gold_answer = crate::table_env::evaluate_program(table, &gold_program.tree).unwrap();
        Query {
            query_id: "q".into(),
            table_id: table.table_id.clone(),
            question: String::new(),
            op_kind: gold_program.tree.kind(),
            gold_program,
            gold_answer,
            shortcut_bias: false,
        }
    }

    #[test]
    fn format_rules() {
        let f = |t: &str| score_format(t, &vcot::parse(t));
        let three = "<step 0> <cell: Row 0, Col 0> value=1 op=READ\n<step 1> <cell: Row 1, Col 0> value=2 op=ADD acc=3\n<step 2> <cell: Row 2, Col 0> value=3 op=ADD acc=6\n<answer> 6";
        assert_eq!(f(three), 1.0);
        // Only the answer rule fails: 4 of 5.
        assert_eq!(f("<step 0> <cell: Row 0, Col 0> value=1 op=READ"), 4.0 / 5.0);
        assert_eq!(f(""), 0.0);
        assert_eq!(f(" \n "), 0.0);
        // A bare answer misses only the step rule.
        assert_eq!(f("<answer> 7"), 0.8);
        assert_eq!(f("<step 0> value=1 op=READ\n<answer> 1"), 0.8);
    }

    #[test]
    fn accuracy_normalization() {
        let n = |h: i64| Answer::Number(Num::Dec(h));
        assert_eq!(score_accuracy(Some(&n(818_900)), &Answer::Number(Num::Int(8189))), 1.0);
        assert_eq!(score_accuracy(Some(&n(491_100)), &Answer::Number(Num::Int(8189))), 0.0);
        assert_eq!(
            score_accuracy(Some(&Answer::Text("  YES".into())), &Answer::Text("yes".into())),
            1.0
        );
        assert_eq!(
            score_accuracy(Some(&Answer::Text(" Yes ".into())), &Answer::Bool(true)),
            1.0
        );
        assert_eq!(score_accuracy(Some(&Answer::Text("12.3".into())), &n(1230)), 1.0);
        assert_eq!(score_accuracy(None, &n(1230)), 0.0);
    }

    #[test]
    fn clean_two_step_chain() {
        let t = table_2x1(4, 6);
        let q = query(&t, Program::Sum(vec![CellRef::new(0, 0), CellRef::new(1, 0)]));
        let chain = canonical_chain(&t, &q.gold_program).unwrap();
        let b = verify_trajectory(&chain, &t, &q);
        assert_eq!((b.r_fmt, b.r_acc, b.r_proc), (1.0, 1.0, 1.0));
        assert!(b.per_step_verdicts.iter().all(|v| v.all_ok()));
        assert_eq!(b.path, Path::Rigorous);
    }

    #[test]
    fn one_wrong_value_scores_two_thirds() {
        let t = table_2x1(4, 6);
        let q = query(&t, Program::Sum(vec![CellRef::new(0, 0), CellRef::new(1, 0)]));
        let mut chain = canonical_chain(&t, &q.gold_program).unwrap();
        // Second step claims 7 and adds consistently with it.
        chain.steps[1].claimed_value = CellValue::int(7);
        chain.steps[1].intermediate = Some(Num::Int(11));
        chain.answer = Some(Answer::Number(Num::Int(11)));
        let (r, v) = score_process(&chain, &t, &q);
        let oracle = (1.0 + 1.0 / 3.0) / 2.0;
        assert!((r - oracle).abs() < 1e-15);
        assert_eq!(
            v[1],
            StepVerdict {
                anchor_ok: true,
                value_ok: false,
                op_ok: false
            }
        );
    }

    #[test]
    fn zero_steps_scores_zero_process() {
        let t = table_2x1(4, 6);
        let q = query(&t, Program::Lookup(CellRef::new(0, 0)));
        let traj = Trajectory::new(vec![], Some(Answer::Number(Num::Int(4))));
        let b = verify_trajectory(&traj, &t, &q);
        assert_eq!(b.r_proc, 0.0);
        assert_eq!(b.r_acc, 1.0);
        assert_eq!(b.path, Path::Shortcut);
    }

    #[test]
    fn wrong_cell_is_hallucination() {
        let t = table_2x1(8189, 4911);
        let q = query(&t, Program::Lookup(CellRef::new(0, 0)));
        let traj = Trajectory::new(
            vec![TraceStep {
                step_index: 0,
                anchor: CellRef::new(1, 0),
                claimed_value: CellValue::int(4911),
                op_token: OpToken::Read,
                intermediate: None,
            }],
            Some(Answer::Number(Num::Dec(491_100))),
        );
        let b = verify_trajectory(&traj, &t, &q);
        assert_eq!(b.r_acc, 0.0);
        assert!(!b.per_step_verdicts[0].anchor_ok && b.per_step_verdicts[0].value_ok);
        assert_eq!(b.path, Path::Hallucination);
        assert_eq!(q.op_kind, OpKind::Lookup);
    }

    #[test]
    fn out_of_bounds_anchor_fails_every_verdict() {
        let t = table_2x1(4, 6);
        let q = query(&t, Program::Lookup(CellRef::new(0, 0)));
        let b = verify_text("<step 0> <cell: Row 0, Col 99> value=4 op=READ\n<answer> 4", &t, &q);
        assert!(b.well_formed);
        assert_eq!(b.per_step_verdicts[0], StepVerdict::default());
        assert_eq!(b.path, Path::Shortcut);
    }

    #[test]
    fn malformed_text_scores_zero_process() {
        let t = table_2x1(4, 6);
        let q = query(&t, Program::Lookup(CellRef::new(0, 0)));
        let b = verify_text("<step 1> <cell: Row 0, Col 0> value=4 op=READ\n<answer> 4", &t, &q);
        assert_eq!(b.r_proc, 0.0);
        assert_eq!(b.r_fmt, 0.8);
        assert_eq!(b.path, Path::Shortcut);
    }

    #[test]
    fn gold_chains_are_rigorous() {
        let spec = crate::table_env::EnvSpec::default();
        for seed in 0..3000 {
            let ep = crate::table_env::generate_episode(seed, &spec).unwrap();
            let chain = canonical_chain(&ep.table, &ep.query.gold_program).unwrap();
            let b = verify_trajectory(&chain, &ep.table, &ep.query);
            assert_eq!(
                (b.path, b.r_proc, b.r_base),
                (Path::Rigorous, 1.0, 2.0),
                "seed {seed}: {}",
                ep.query.question
            );
        }
    }
}
