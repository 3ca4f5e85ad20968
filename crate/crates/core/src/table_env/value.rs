use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Exact numeric cell content: a 64-bit integer or a fixed-point decimal
/// with two fractional digits (stored in hundredths).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Num {
    Int(i64),
    Dec(i64),
}

impl Num {
    pub fn hundredths(self) -> i128 {
        match self {
            Num::Int(v) => v as i128 * 100,
            Num::Dec(h) => h as i128,
        }
    }

    pub fn is_decimal(self) -> bool {
        matches!(self, Num::Dec(_))
    }

    /// Numeric equality; `Int(5)` and `Dec(500)` are the same value.
    pub fn same_value(self, other: Num) -> bool {
        self.hundredths() == other.hundredths()
    }

    pub fn cmp_value(self, other: Num) -> Ordering {
        self.hundredths().cmp(&other.hundredths())
    }

    fn from_hundredths(h: i128, decimal: bool) -> Option<Num> {
        if decimal {
            i64::try_from(h).ok().map(Num::Dec)
        } else {
            i64::try_from(h / 100).ok().map(Num::Int)
        }
    }

    pub fn checked_add(self, other: Num) -> Option<Num> {
        let decimal = self.is_decimal() || other.is_decimal();
        Num::from_hundredths(self.hundredths() + other.hundredths(), decimal)
    }

    pub fn checked_sub(self, other: Num) -> Option<Num> {
        let decimal = self.is_decimal() || other.is_decimal();
        Num::from_hundredths(self.hundredths() - other.hundredths(), decimal)
    }

    pub fn max_value(self, other: Num) -> Num {
        if other.cmp_value(self) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    pub fn min_value(self, other: Num) -> Num {
        if other.cmp_value(self) == Ordering::Less {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Num::Int(v) => write!(f, "{v}"),
            Num::Dec(h) => {
                let sign = if h < 0 { "-" } else { "" };
                let a = h.unsigned_abs();
                write!(f, "{sign}{}.{:02}", a / 100, a % 100)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseNumError;

impl fmt::Display for ParseNumError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("not a number with at most two fractional digits")
    }
}

impl std::error::Error for ParseNumError {}

impl FromStr for Num {
    type Err = ParseNumError;

    /// Accepts `-?digits(.d{1,2})?`. Anything with more fractional digits,
    /// exponents or a leading `+` is rejected so that equality stays exact.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (body, None),
        };
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseNumError);
        }
        let int_val: i128 = int_part.parse().map_err(|_| ParseNumError)?;
        let signed = |v: i128| if neg { -v } else { v };
        match frac_part {
            None => i64::try_from(signed(int_val)).map(Num::Int).map_err(|_| ParseNumError),
            Some(frac) => {
                if frac.is_empty() || frac.len() > 2 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(ParseNumError);
                }
                let mut h: i128 = frac.parse().map_err(|_| ParseNumError)?;
                if frac.len() == 1 {
                    h *= 10;
                }
                i64::try_from(signed(int_val * 100 + h))
                    .map(Num::Dec)
                    .map_err(|_| ParseNumError)
            }
        }
    }
}

/// Content of one table cell.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellValue {
    Num(Num),
    Text(String),
}

impl CellValue {
    pub fn int(v: i64) -> Self {
        CellValue::Num(Num::Int(v))
    }

    pub fn dec(hundredths: i64) -> Self {
        CellValue::Num(Num::Dec(hundredths))
    }

    pub fn text(s: impl Into<String>) -> Self {
        CellValue::Text(s.into())
    }

    pub fn as_num(&self) -> Option<Num> {
        match self {
            CellValue::Num(n) => Some(*n),
            CellValue::Text(_) => None,
        }
    }

    /// Numeric values compare by value, text compares exactly.
    pub fn same_value(&self, other: &CellValue) -> bool {
        match (self, other) {
            (CellValue::Num(a), CellValue::Num(b)) => a.same_value(*b),
            (CellValue::Text(a), CellValue::Text(b)) => a == b,
            _ => false,
        }
    }
}

impl From<Num> for CellValue {
    fn from(n: Num) -> Self {
        CellValue::Num(n)
    }
}

/// A final answer: numeric, boolean (`yes`/`no`) or free text.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    Number(Num),
    Bool(bool),
    Text(String),
}

impl From<CellValue> for Answer {
    fn from(v: CellValue) -> Self {
        match v {
            CellValue::Num(n) => Answer::Number(n),
            CellValue::Text(s) => Answer::Text(s),
        }
    }
}
