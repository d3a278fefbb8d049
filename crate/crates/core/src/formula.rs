//! A small model-formula language.
//!
//! ```text
//! y ~ x1 + C(x2) + spline(x3; 50, 65) + x4:x5
//! y ~ 1
//! ```
//!
//! `C(col)` expands a column into indicators for every level but the first
//! (numeric levels sort ascending, text levels keep first-appearance order).
//! `spline(col; k1, k2, ...)` adds a linear-spline basis. `a:b` is the
//! elementwise product of numeric columns. The intercept is always implicit.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::data::{DataError, Dataset};
use crate::frame::{Column, Frame, FrameError};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::spline::{spline_basis, SplineError, SplineSpec};

#[derive(Debug, Error)]
pub enum FormulaError {
    #[error("formula syntax: {0}")]
    Parse(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Spline(#[from] SplineError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Numeric(String),
    Categorical(String),
    Spline { column: String, knots: Vec<f64> },
    Product(Vec<String>),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Numeric(c) => f.write_str(c),
            Term::Categorical(c) => write!(f, "C({c})"),
            Term::Spline { column, knots } => {
                let ks: Vec<String> = knots.iter().map(|k| k.to_string()).collect();
                write!(f, "spline({column}; {})", ks.join(","))
            }
            Term::Product(cs) => f.write_str(&cs.join(":")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Formula {
    pub response: String,
    pub terms: Vec<Term>,
}

/// Response vector and predictor matrix built from a frame.
#[derive(Debug, Clone)]
pub struct Design<T> {
    pub y: Vec<T>,
    pub x: Matrix<T>,
    pub names: Vec<String>,
}

fn ident(s: &str) -> Result<String, FormulaError> {
    let s = s.trim();
    let ok = !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.');
    if ok {
        Ok(s.to_string())
    } else {
        Err(FormulaError::Parse(format!("bad column name '{s}'")))
    }
}

fn parse_term(raw: &str) -> Result<Term, FormulaError> {
    let t = raw.trim();
    if let Some(inner) = t.strip_prefix("C(").and_then(|r| r.strip_suffix(')')) {
        return Ok(Term::Categorical(ident(inner)?));
    }
    if let Some(inner) = t.strip_prefix("spline(").and_then(|r| r.strip_suffix(')')) {
        let (col, knots) = inner
            .split_once(';')
            .ok_or_else(|| FormulaError::Parse(format!("spline term '{t}' needs 'col; knots'")))?;
        let knots = knots
            .split(',')
            .map(|k| {
                k.trim()
                    .parse::<f64>()
                    .map_err(|_| FormulaError::Parse(format!("bad knot '{}' in '{t}'", k.trim())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(Term::Spline {
            column: ident(col)?,
            knots,
        });
    }
    if t.contains(':') {
        let parts = t.split(':').map(ident).collect::<Result<Vec<_>, _>>()?;
        return Ok(Term::Product(parts));
    }
    Ok(Term::Numeric(ident(t)?))
}

impl FromStr for Formula {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lhs, rhs) = s
            .split_once('~')
            .ok_or_else(|| FormulaError::Parse(format!("missing '~' in '{s}'")))?;
        let response = ident(lhs)?;
        let rhs = rhs.trim();
        if rhs.is_empty() {
            return Err(FormulaError::Parse("empty right-hand side".into()));
        }
        let mut terms = Vec::new();
        let mut depth = 0i32;
        let mut start = 0;
        let bytes: Vec<char> = rhs.chars().collect();
        let mut pieces = Vec::new();
        for (i, c) in bytes.iter().enumerate() {
            match c {
                '(' => depth += 1,
                ')' => depth -= 1,
                '+' if depth == 0 => {
                    pieces.push(bytes[start..i].iter().collect::<String>());
                    start = i + 1;
                }
                _ => {}
            }
            if depth < 0 {
                return Err(FormulaError::Parse(format!("unbalanced ')' in '{s}'")));
            }
        }
        if depth != 0 {
            return Err(FormulaError::Parse(format!("unbalanced '(' in '{s}'")));
        }
        pieces.push(bytes[start..].iter().collect::<String>());
        for piece in pieces {
            if piece.trim() == "1" {
                continue;
            }
            terms.push(parse_term(&piece)?);
        }
        Ok(Self { response, terms })
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "{} ~ 1", self.response);
        }
        let ts: Vec<String> = self.terms.iter().map(Term::to_string).collect();
        write!(f, "{} ~ {}", self.response, ts.join(" + "))
    }
}

fn levels<T: Scalar>(column: &Column<T>) -> Vec<String> {
    match column {
        Column::Numeric(v) => {
            let mut vals = v.clone();
            vals.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            vals.dedup();
            vals.iter().map(|x| format!("{x}")).collect()
        }
        Column::Text(v) => {
            let mut seen: Vec<String> = Vec::new();
            for s in v {
                if !seen.contains(s) {
                    seen.push(s.clone());
                }
            }
            seen
        }
    }
}

impl Formula {
    /// `y ~ x1 + … + xp` over plain numeric columns.
    pub fn linear(response: &str, predictors: &[&str]) -> Self {
        Self {
            response: response.to_string(),
            terms: predictors.iter().map(|p| Term::Numeric((*p).to_string())).collect(),
        }
    }

    pub fn design<T: Scalar>(&self, frame: &Frame<T>) -> Result<Design<T>, FormulaError> {
        let n = frame.nrows();
        let y = frame.numeric(&self.response)?.to_vec();
        let mut columns: Vec<Vec<T>> = Vec::new();
        let mut names = Vec::new();
        for term in &self.terms {
            match term {
                Term::Numeric(c) => {
                    columns.push(frame.numeric(c)?.to_vec());
                    names.push(c.clone());
                }
                Term::Product(cs) => {
                    let mut prod = vec![T::one(); n];
                    for c in cs {
                        for (p, v) in prod.iter_mut().zip(frame.numeric(c)?) {
                            *p *= *v;
                        }
                    }
                    columns.push(prod);
                    names.push(cs.join(":"));
                }
                Term::Spline { column, knots } => {
                    let spec = SplineSpec::new(knots.iter().map(|k| T::lit(*k)).collect())?;
                    let basis = spline_basis(frame.numeric(column)?, &spec);
                    for j in 0..basis.ncols() {
                        columns.push(basis.column(j));
                        names.push(if j == 0 {
                            format!("spline({column})")
                        } else {
                            format!("spline({column})[>{}]", knots[j - 1])
                        });
                    }
                }
                Term::Categorical(c) => {
                    let col = frame.column(c)?;
                    let lv = levels(col);
                    for level in lv.iter().skip(1) {
                        let ind: Vec<T> = (0..n)
                            .map(|i| {
                                let hit = match col {
                                    Column::Numeric(v) => format!("{}", v[i]) == *level,
                                    Column::Text(v) => v[i] == *level,
                                };
                                if hit {
                                    T::one()
                                } else {
                                    T::zero()
                                }
                            })
                            .collect();
                        columns.push(ind);
                        names.push(format!("C({c})[{level}]"));
                    }
                }
            }
        }
        let x = Matrix::from_columns(n, &columns).expect("columns share the frame length");
        Ok(Design { y, x, names })
    }

    /// Builds a validated dataset, reading weights from `weight_column`
    /// when given.
    pub fn dataset<T: Scalar>(
        &self,
        frame: &Frame<T>,
        weight_column: Option<&str>,
    ) -> Result<Dataset<T>, FormulaError> {
        let design = self.design(frame)?;
        let weights = weight_column.map(|w| frame.numeric(w).map(<[T]>::to_vec)).transpose()?;
        Ok(Dataset::new(design.y, design.x, weights)?)
    }
}
