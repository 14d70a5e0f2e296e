//! Row predicates for cohort selection, e.g. `Age in [60,69] and Sex == 1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Eq(f64),
    Lt(f64),
    Le(f64),
    Gt(f64),
    Ge(f64),
    /// Closed interval.
    Range(f64, f64),
}

impl Comparison {
    pub fn holds(&self, x: f64) -> bool {
        match *self {
            Comparison::Eq(v) => x == v,
            Comparison::Lt(v) => x < v,
            Comparison::Le(v) => x <= v,
            Comparison::Gt(v) => x > v,
            Comparison::Ge(v) => x >= v,
            Comparison::Range(lo, hi) => lo <= x && x <= hi,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub column: String,
    pub comparison: Comparison,
}

/// Conjunction of clauses; the empty predicate keeps every row.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub clauses: Vec<Clause>,
}

impl Predicate {
    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn columns(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.clauses {
            if !out.contains(&c.column) {
                out.push(c.column.clone());
            }
        }
        out
    }

    /// Rows satisfying every clause; the column set is unchanged.
    pub fn filter_rows(&self, data: &Dataset) -> Result<Dataset> {
        let cols = self
            .clauses
            .iter()
            .map(|c| data.require(&c.column))
            .collect::<Result<Vec<_>>>()?;
        let keep: Vec<bool> = (0..data.n_rows())
            .map(|i| self.clauses.iter().zip(&cols).all(|(c, col)| c.comparison.holds(col[i])))
            .collect();
        Ok(data.retain_rows(&keep))
    }
}

pub fn filter_rows(data: &Dataset, predicate: &Predicate) -> Result<Dataset> {
    predicate.filter_rows(data)
}

fn parse_number(s: &str, ctx: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::InvalidPredicate(format!("`{}` is not a number in `{ctx}`", s.trim())))
}

fn parse_clause(text: &str) -> Result<Clause> {
    let text = text.trim();
    let lower = text.to_ascii_lowercase();
    if let Some(pos) = lower.find(" in ") {
        let column = text[..pos].trim();
        let range = text[pos + 4..].trim();
        let inner = range
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| Error::InvalidPredicate(format!("expected `[lo, hi]` in `{text}`")))?;
        let (lo, hi) = inner
            .split_once(',')
            .ok_or_else(|| Error::InvalidPredicate(format!("expected `[lo, hi]` in `{text}`")))?;
        let (lo, hi) = (parse_number(lo, text)?, parse_number(hi, text)?);
        if lo > hi {
            return Err(Error::InvalidPredicate(format!("empty range in `{text}`")));
        }
        if column.is_empty() {
            return Err(Error::InvalidPredicate(format!("missing column in `{text}`")));
        }
        return Ok(Clause { column: column.to_string(), comparison: Comparison::Range(lo, hi) });
    }
    for (token, make) in [
        ("==", Comparison::Eq as fn(f64) -> Comparison),
        ("<=", Comparison::Le),
        (">=", Comparison::Ge),
        ("<", Comparison::Lt),
        (">", Comparison::Gt),
    ] {
        if let Some((lhs, rhs)) = text.split_once(token) {
            let column = lhs.trim();
            if column.is_empty() {
                return Err(Error::InvalidPredicate(format!("missing column in `{text}`")));
            }
            return Ok(Clause { column: column.to_string(), comparison: make(parse_number(rhs, text)?) });
        }
    }
    Err(Error::InvalidPredicate(format!("no comparison operator in `{text}`")))
}

impl FromStr for Predicate {
    type Err = Error;

    /// Clauses joined by `and` (case-insensitive). Each clause is
    /// `col == v`, `col < v`, `col <= v`, `col > v`, `col >= v` or
    /// `col in [lo, hi]`.
    fn from_str(s: &str) -> Result<Self> {
        if s.trim().is_empty() {
            return Ok(Predicate::default());
        }
        let lower = s.to_ascii_lowercase();
        let mut clauses = Vec::new();
        let mut start = 0;
        for (pos, _) in lower.match_indices(" and ") {
            clauses.push(parse_clause(&s[start..pos])?);
            start = pos + 5;
        }
        clauses.push(parse_clause(&s[start..])?);
        Ok(Predicate { clauses })
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(" and ")?;
            }
            match c.comparison {
                Comparison::Eq(v) => write!(f, "{} == {v}", c.column)?,
                Comparison::Lt(v) => write!(f, "{} < {v}", c.column)?,
                Comparison::Le(v) => write!(f, "{} <= {v}", c.column)?,
                Comparison::Gt(v) => write!(f, "{} > {v}", c.column)?,
                Comparison::Ge(v) => write!(f, "{} >= {v}", c.column)?,
                Comparison::Range(lo, hi) => write!(f, "{} in [{lo}, {hi}]", c.column)?,
            }
        }
        Ok(())
    }
}
