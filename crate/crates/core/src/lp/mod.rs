//! Exact rational linear programming.
//!
//! [`solve`] is a two-phase bounded-variable simplex using Bland's rule.
//! [`vertex_oracle`] enumerates basic feasible points directly and is only
//! meant for certifying [`solve`] on small instances.

mod oracle;
mod simplex;

use num::Zero;
use thiserror::Error;

use crate::model::Rational;

pub use oracle::{vertex_oracle, ORACLE_MAX_VARS};
pub use simplex::solve;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("row has {got} coefficients but the program has {expected} variables")]
    RowLength { expected: usize, got: usize },
    #[error("variable {var} has lower bound above upper bound")]
    EmptyBounds { var: usize },
    #[error("vertex enumeration is limited to {max} variables and rows, got {got}")]
    TooLarge { max: usize, got: usize },
    #[error("vertex enumeration needs a finite upper bound on variable {var}")]
    UnboundedVariable { var: usize },
}

/// `coeffs · x (= or <=) rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub coeffs: Vec<Rational>,
    pub rhs: Rational,
}

impl Row {
    pub fn new(coeffs: Vec<Rational>, rhs: Rational) -> Self {
        Self { coeffs, rhs }
    }

    pub(crate) fn lhs(&self, x: &[Rational]) -> Rational {
        dot(&self.coeffs, x)
    }
}

/// Box bounds of one variable; `hi = None` means no upper bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarBounds {
    pub lo: Rational,
    pub hi: Option<Rational>,
}

impl VarBounds {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        Self { lo, hi: Some(hi) }
    }

    pub fn at_least(lo: Rational) -> Self {
        Self { lo, hi: None }
    }

    fn contains(&self, v: &Rational) -> bool {
        *v >= self.lo && self.hi.as_ref().is_none_or(|hi| v <= hi)
    }
}

/// Minimize `objective · x` subject to equality rows, `<=` rows and bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub eq_rows: Vec<Row>,
    pub le_rows: Vec<Row>,
    pub bounds: Vec<VarBounds>,
}

impl LinearProgram {
    /// A program with the given objective and every variable in `[0, 1]`.
    pub fn unit_box(objective: Vec<Rational>) -> Self {
        let bounds = objective
            .iter()
            .map(|_| VarBounds::new(Rational::zero(), num::One::one()))
            .collect();
        Self {
            objective,
            eq_rows: Vec::new(),
            le_rows: Vec::new(),
            bounds,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn check(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        if self.bounds.len() != n {
            return Err(LpError::RowLength {
                expected: n,
                got: self.bounds.len(),
            });
        }
        for row in self.eq_rows.iter().chain(&self.le_rows) {
            if row.coeffs.len() != n {
                return Err(LpError::RowLength {
                    expected: n,
                    got: row.coeffs.len(),
                });
            }
        }
        for (var, b) in self.bounds.iter().enumerate() {
            if b.hi.as_ref().is_some_and(|hi| *hi < b.lo) {
                return Err(LpError::EmptyBounds { var });
            }
        }
        Ok(())
    }

    /// Exact feasibility of `x` against every row and bound.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.n_vars()
            && self.bounds.iter().zip(x).all(|(b, v)| b.contains(v))
            && self.eq_rows.iter().all(|row| row.lhs(x) == row.rhs)
            && self.le_rows.iter().all(|row| row.lhs(x) <= row.rhs)
    }

    pub fn value_at(&self, x: &[Rational]) -> Rational {
        dot(&self.objective, x)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpSolution {
    Optimal { value: Rational, point: Vec<Rational> },
    Infeasible,
    Unbounded,
}

impl LpSolution {
    pub fn value(&self) -> Option<&Rational> {
        match self {
            LpSolution::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn point(&self) -> Option<&[Rational]> {
        match self {
            LpSolution::Optimal { point, .. } => Some(point),
            _ => None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        matches!(self, LpSolution::Optimal { .. })
    }
}

pub(crate) fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}
