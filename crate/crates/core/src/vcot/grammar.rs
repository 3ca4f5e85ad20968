use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::{OpToken, TraceStep, Trajectory};
use crate::table_env::{Answer, CellRef, CellValue, Num};

/// A violated grammar rule. Line numbers are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub line: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiagnosticKind {
    /// A non-blank line that is neither a step nor an answer.
    UnrecognizedLine,
    MalformedStep,
    MissingAnchor,
    MalformedAnswer,
    MissingAnswer,
    DuplicateAnswer,
    ContentAfterAnswer,
    NonContiguousIndex,
}

impl DiagnosticKind {
    /// Kinds that mean the text does not parse at all, as opposed to
    /// missing or misnumbered parts.
    pub fn is_syntax(self) -> bool {
        matches!(
            self,
            DiagnosticKind::UnrecognizedLine
                | DiagnosticKind::MalformedStep
                | DiagnosticKind::MalformedAnswer
                | DiagnosticKind::DuplicateAnswer
                | DiagnosticKind::ContentAfterAnswer
        )
    }
}

/// Result of parsing arbitrary text: a best-effort trajectory plus every
/// violated rule. `trajectory.well_formed` is true iff there are no
/// diagnostics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseOutcome {
    pub trajectory: Trajectory,
    pub diagnostics: Vec<Diagnostic>,
    /// Lines that started as a step, including ones that failed to parse.
    pub step_lines: usize,
}

impl ParseOutcome {
    pub fn has(&self, kind: DiagnosticKind) -> bool {
        self.diagnostics.iter().any(|d| d.kind == kind)
    }
}

fn write_value(out: &mut String, v: &CellValue) {
    match v {
        CellValue::Num(n) => write!(out, "{n}").unwrap(),
        CellValue::Text(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
    }
}

fn write_answer(out: &mut String, a: &Answer) {
    match a {
        Answer::Number(n) => write!(out, "{n}").unwrap(),
        Answer::Bool(true) => out.push_str("yes"),
        Answer::Bool(false) => out.push_str("no"),
        Answer::Text(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
    }
}

/// Render a trajectory. Lines are joined with `\n`, no trailing newline; a
/// trajectory without an answer simply has no answer line.
pub fn serialize(traj: &Trajectory) -> String {
    let mut out = String::new();
    for s in &traj.steps {
        if !out.is_empty() {
            out.push('\n');
        }
        write!(
            out,
            "<step {}> <cell: Row {}, Col {}> value=",
            s.step_index, s.anchor.row, s.anchor.col
        )
        .unwrap();
        write_value(&mut out, &s.claimed_value);
        write!(out, " op={}", s.op_token.name()).unwrap();
        if let Some(acc) = s.intermediate {
            write!(out, " acc={acc}").unwrap();
        }
    }
    if let Some(a) = &traj.answer {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str("<answer> ");
        write_answer(&mut out, a);
    }
    out
}

#[derive(Debug)]
struct Syntax(String);

impl fmt::Display for Syntax {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Character cursor over one line. Whitespace between tokens is skipped.
struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let r = self.rest();
        self.pos += r.len() - r.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn punct(&mut self, c: char) -> Result<(), Syntax> {
        match self.peek() {
            Some(got) if got == c => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(got) => Err(Syntax(format!("expected '{c}', found '{got}'"))),
            None => Err(Syntax(format!("expected '{c}', found end of line"))),
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        self.skip_ws();
        let r = self.rest();
        let n = r.find(|c: char| !f(c)).unwrap_or(r.len());
        self.pos += n;
        &r[..n]
    }

    fn ident(&mut self) -> &'a str {
        self.take_while(|c| c.is_ascii_alphabetic() || c == '_')
    }

    fn keyword(&mut self, kw: &str) -> Result<(), Syntax> {
        let save = self.pos;
        let got = self.ident();
        if got == kw {
            Ok(())
        } else {
            self.pos = save;
            Err(Syntax(format!("expected '{kw}', found '{}'", preview(self.rest()))))
        }
    }

    fn index(&mut self, what: &str) -> Result<usize, Syntax> {
        let digits = self.take_while(|c| c.is_ascii_digit());
        digits
            .parse()
            .map_err(|_| Syntax(format!("expected {what} index, found '{}'", preview(self.rest()))))
    }

    fn number(&mut self) -> Result<Num, Syntax> {
        self.skip_ws();
        let r = self.rest();
        let n = r
            .char_indices()
            .find(|&(i, c)| !(c.is_ascii_digit() || c == '.' || (i == 0 && c == '-')))
            .map_or(r.len(), |(i, _)| i);
        let tok = &r[..n];
        let v = tok
            .parse::<Num>()
            .map_err(|_| Syntax(format!("bad number '{}'", preview(r))))?;
        self.pos += n;
        Ok(v)
    }

    /// A JSON string literal starting at the cursor.
    fn string(&mut self) -> Result<String, Syntax> {
        self.skip_ws();
        let r = self.rest();
        let mut escaped = false;
        for (i, c) in r.char_indices().skip(1) {
            match (escaped, c) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => {
                    let lit = &r[..=i];
                    let s =
                        serde_json::from_str::<String>(lit).map_err(|e| Syntax(format!("bad string literal: {e}")))?;
                    self.pos += i + 1;
                    return Ok(s);
                }
                _ => {}
            }
        }
        Err(Syntax("unterminated string literal".into()))
    }

    fn value(&mut self) -> Result<CellValue, Syntax> {
        match self.peek() {
            Some('"') => self.string().map(CellValue::Text),
            _ => self.number().map(CellValue::Num),
        }
    }
}

fn preview(s: &str) -> String {
    s.chars().take(16).collect()
}

enum StepParse {
    Ok(TraceStep),
    MissingAnchor(usize),
}

fn parse_step(lx: &mut Lexer<'_>) -> Result<StepParse, Syntax> {
    // "<step" has been consumed by the line dispatcher.
    let index = lx.index("step")?;
    lx.punct('>')?;
    let anchor = if lx.peek() == Some('<') {
        lx.punct('<')?;
        lx.keyword("cell")?;
        lx.punct(':')?;
        lx.keyword("Row")?;
        let row = lx.index("row")?;
        lx.punct(',')?;
        lx.keyword("Col")?;
        let col = lx.index("col")?;
        lx.punct('>')?;
        Some(CellRef::new(row, col))
    } else {
        None
    };
    lx.keyword("value")?;
    lx.punct('=')?;
    let claimed_value = lx.value()?;
    lx.keyword("op")?;
    lx.punct('=')?;
    let name = lx.take_while(|c| c.is_ascii_uppercase());
    let op_token = OpToken::from_name(name).ok_or_else(|| Syntax(format!("unknown op '{}'", preview(name))))?;
    let intermediate = if lx.at_end() {
        None
    } else {
        lx.keyword("acc")?;
        lx.punct('=')?;
        Some(lx.number()?)
    };
    if !lx.at_end() {
        return Err(Syntax(format!("unexpected '{}'", preview(lx.rest()))));
    }
    Ok(match anchor {
        Some(anchor) => StepParse::Ok(TraceStep {
            step_index: index,
            anchor,
            claimed_value,
            op_token,
            intermediate,
        }),
        None => StepParse::MissingAnchor(index),
    })
}

fn parse_answer(body: &str) -> Result<Answer, Syntax> {
    let t = body.trim();
    if t.is_empty() {
        return Err(Syntax("empty answer".into()));
    }
    if t.starts_with('"') {
        let mut lx = Lexer::new(t);
        let s = lx.string()?;
        if !lx.at_end() {
            return Err(Syntax("text after quoted answer".into()));
        }
        return Ok(Answer::Text(s));
    }
    if t.eq_ignore_ascii_case("yes") {
        return Ok(Answer::Bool(true));
    }
    if t.eq_ignore_ascii_case("no") {
        return Ok(Answer::Bool(false));
    }
    Ok(t.parse::<Num>()
        .map(Answer::Number)
        .unwrap_or_else(|_| Answer::Text(t.to_string())))
}

/// First two tokens of a line decide its kind.
enum LineKind<'a> {
    Step(Lexer<'a>),
    Answer(&'a str),
    Blank,
    Other,
}

fn classify(line: &str) -> LineKind<'_> {
    let mut lx = Lexer::new(line);
    if lx.at_end() {
        return LineKind::Blank;
    }
    if lx.punct('<').is_err() {
        return LineKind::Other;
    }
    match lx.ident() {
        "step" => LineKind::Step(lx),
        "answer" if lx.punct('>').is_ok() => LineKind::Answer(lx.rest()),
        _ => LineKind::Other,
    }
}

/// Parse arbitrary text. Never fails: problems are reported as diagnostics
/// and whatever parsed cleanly is kept in the returned trajectory.
pub fn parse(text: &str) -> ParseOutcome {
    let mut diagnostics = Vec::new();
    let mut steps = Vec::new();
    let mut indices = Vec::new();
    let mut answer: Option<Answer> = None;
    let mut answer_line: Option<usize> = None;
    let mut step_lines = 0;
    let mut diag = |line: usize, kind: DiagnosticKind, message: String| {
        diagnostics.push(Diagnostic { line, kind, message });
    };
    for (i, line) in text.split('\n').enumerate() {
        let ln = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        match classify(line) {
            LineKind::Blank => {}
            LineKind::Other => diag(
                ln,
                DiagnosticKind::UnrecognizedLine,
                format!("unrecognized line '{}'", preview(line)),
            ),
            LineKind::Step(mut lx) => {
                step_lines += 1;
                if let Some(a) = answer_line {
                    diag(
                        ln,
                        DiagnosticKind::ContentAfterAnswer,
                        format!("step after the answer on line {a}"),
                    );
                }
                match parse_step(&mut lx) {
                    Ok(StepParse::Ok(step)) => {
                        indices.push(step.step_index);
                        steps.push(step);
                    }
                    Ok(StepParse::MissingAnchor(k)) => {
                        indices.push(k);
                        diag(
                            ln,
                            DiagnosticKind::MissingAnchor,
                            format!("step {k} has no cell anchor"),
                        );
                    }
                    Err(e) => diag(ln, DiagnosticKind::MalformedStep, e.to_string()),
                }
            }
            LineKind::Answer(body) => {
                if let Some(a) = answer_line {
                    diag(
                        ln,
                        DiagnosticKind::DuplicateAnswer,
                        format!("answer already given on line {a}"),
                    );
                    continue;
                }
                answer_line = Some(ln);
                match parse_answer(body) {
                    Ok(a) => answer = Some(a),
                    Err(e) => diag(ln, DiagnosticKind::MalformedAnswer, e.to_string()),
                }
            }
        }
    }
    if answer_line.is_none() {
        diag(0, DiagnosticKind::MissingAnswer, "no <answer> line".into());
    }
    if let Some(k) = indices.iter().enumerate().find(|&(i, &k)| i != k).map(|(_, &k)| k) {
        diag(
            0,
            DiagnosticKind::NonContiguousIndex,
            format!("step indices are not 0, 1, 2, ... (saw {k})"),
        );
    }
    let well_formed = diagnostics.is_empty();
    ParseOutcome {
        trajectory: Trajectory {
            steps,
            answer,
            well_formed,
        },
        diagnostics,
        step_lines,
    }
}
