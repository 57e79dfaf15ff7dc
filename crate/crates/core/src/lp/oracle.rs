use num::Zero;

use super::{LinearProgram, LpError, LpSolution, Row};
use crate::model::{subsets, Rational};

/// Variable (and row) limit for [`vertex_oracle`].
pub const ORACLE_MAX_VARS: usize = 16;

/// Exhaustive search over basic points.
///
/// A vertex has some set `F` of variables strictly inside their bounds and a
/// set of `|F|` independent active rows determining them; every other variable
/// sits at a bound. All `(rows, F)` pairs are tried and the remaining
/// variables are assigned bounds depth-first, pruning branches whose row
/// activity interval can no longer reach the right-hand side.
pub fn vertex_oracle(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.check()?;
    let n = lp.n_vars();
    let m = lp.eq_rows.len() + lp.le_rows.len();
    if n > ORACLE_MAX_VARS || m > ORACLE_MAX_VARS {
        return Err(LpError::TooLarge {
            max: ORACLE_MAX_VARS,
            got: n.max(m),
        });
    }
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for (var, b) in lp.bounds.iter().enumerate() {
        lo.push(b.lo.clone());
        hi.push(b.hi.clone().ok_or(LpError::UnboundedVariable { var })?);
    }
    let rows: Vec<(&Row, bool)> = lp
        .eq_rows
        .iter()
        .map(|r| (r, true))
        .chain(lp.le_rows.iter().map(|r| (r, false)))
        .collect();

    let mut search = Search {
        lp,
        rows: &rows,
        lo: &lo,
        hi: &hi,
        best: None,
    };
    for mask in 0u32..(1u32 << m) {
        let active: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if active.len() > n {
            continue;
        }
        for free in subsets(n, active.len()) {
            search.try_pair(&active, &free);
        }
    }
    Ok(match search.best {
        Some((value, point)) => LpSolution::Optimal { value, point },
        None => LpSolution::Infeasible,
    })
}

struct Search<'a> {
    lp: &'a LinearProgram,
    rows: &'a [(&'a Row, bool)],
    lo: &'a [Rational],
    hi: &'a [Rational],
    best: Option<(Rational, Vec<Rational>)>,
}

impl Search<'_> {
    fn try_pair(&mut self, active: &[usize], free: &[usize]) {
        let n = self.lo.len();
        let square: Vec<Vec<Rational>> = active
            .iter()
            .map(|&i| free.iter().map(|&j| self.rows[i].0.coeffs[j].clone()).collect())
            .collect();
        if !square.is_empty() && solve_square(square.clone(), vec![Rational::zero(); free.len()]).is_none() {
            return;
        }
        let fixed: Vec<usize> = (0..n).filter(|j| !free.contains(j)).collect();

        // Activity intervals of the free variables, and suffix intervals of
        // the fixed ones in assignment order.
        let m = self.rows.len();
        let mut free_lo = vec![Rational::zero(); m];
        let mut free_hi = vec![Rational::zero(); m];
        let mut suffix_lo = vec![vec![Rational::zero(); fixed.len() + 1]; m];
        let mut suffix_hi = vec![vec![Rational::zero(); fixed.len() + 1]; m];
        for i in 0..m {
            let coeffs = &self.rows[i].0.coeffs;
            for &j in free {
                let (a, b) = self.span(&coeffs[j], j);
                free_lo[i] += a;
                free_hi[i] += b;
            }
            for k in (0..fixed.len()).rev() {
                let (a, b) = self.span(&coeffs[fixed[k]], fixed[k]);
                suffix_lo[i][k] = &suffix_lo[i][k + 1] + a;
                suffix_hi[i][k] = &suffix_hi[i][k + 1] + b;
            }
        }
        let ctx = Ctx {
            active,
            free,
            fixed: &fixed,
            square: &square,
            free_lo: &free_lo,
            free_hi: &free_hi,
            suffix_lo: &suffix_lo,
            suffix_hi: &suffix_hi,
        };
        let mut x = self.lo.to_vec();
        let mut partial = vec![Rational::zero(); m];
        self.descend(&ctx, 0, &mut x, &mut partial);
    }

    /// `(min, max)` of `a * x_j` over the bounds of `x_j`.
    fn span(&self, a: &Rational, j: usize) -> (Rational, Rational) {
        let p = a * &self.lo[j];
        let q = a * &self.hi[j];
        if p <= q {
            (p, q)
        } else {
            (q, p)
        }
    }

    fn reachable(&self, ctx: &Ctx, depth: usize, partial: &[Rational]) -> bool {
        self.rows.iter().enumerate().all(|(i, (row, is_eq))| {
            let min = &partial[i] + &ctx.free_lo[i] + &ctx.suffix_lo[i][depth];
            if min > row.rhs {
                return false;
            }
            if *is_eq {
                let max = &partial[i] + &ctx.free_hi[i] + &ctx.suffix_hi[i][depth];
                return max >= row.rhs;
            }
            true
        })
    }

    fn descend(&mut self, ctx: &Ctx, depth: usize, x: &mut Vec<Rational>, partial: &mut Vec<Rational>) {
        if !self.reachable(ctx, depth, partial) {
            return;
        }
        if depth == ctx.fixed.len() {
            self.leaf(ctx, x, partial);
            return;
        }
        let j = ctx.fixed[depth];
        let choices = if self.lo[j] == self.hi[j] {
            vec![self.lo[j].clone()]
        } else {
            vec![self.lo[j].clone(), self.hi[j].clone()]
        };
        for v in choices {
            for (i, (row, _)) in self.rows.iter().enumerate() {
                partial[i] += &row.coeffs[j] * &v;
            }
            x[j] = v.clone();
            self.descend(ctx, depth + 1, x, partial);
            for (i, (row, _)) in self.rows.iter().enumerate() {
                partial[i] -= &row.coeffs[j] * &v;
            }
        }
    }

    fn leaf(&mut self, ctx: &Ctx, x: &mut [Rational], partial: &[Rational]) {
        if !ctx.free.is_empty() {
            let rhs: Vec<Rational> = ctx
                .active
                .iter()
                .map(|&i| &self.rows[i].0.rhs - &partial[i])
                .collect();
            let Some(sol) = solve_square(ctx.square.to_vec(), rhs) else {
                return;
            };
            for (&j, v) in ctx.free.iter().zip(sol) {
                x[j] = v;
            }
        }
        if !self.lp.is_feasible(x) {
            return;
        }
        let value = self.lp.value_at(x);
        if self.best.as_ref().is_none_or(|(b, _)| value < *b) {
            self.best = Some((value, x.to_vec()));
        }
    }
}

struct Ctx<'a> {
    active: &'a [usize],
    free: &'a [usize],
    fixed: &'a [usize],
    square: &'a [Vec<Rational>],
    free_lo: &'a [Rational],
    free_hi: &'a [Rational],
    suffix_lo: &'a [Vec<Rational>],
    suffix_hi: &'a [Vec<Rational>],
}

/// Gauss-Jordan elimination; `None` if the matrix is singular.
fn solve_square(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let k = b.len();
    for col in 0..k {
        let p = (col..k).find(|&i| !a[i][col].is_zero())?;
        a.swap(col, p);
        b.swap(col, p);
        let pivot = a[col][col].clone();
        for j in col..k {
            a[col][j] = &a[col][j] / &pivot;
        }
        b[col] = &b[col] / &pivot;
        for i in 0..k {
            if i == col || a[i][col].is_zero() {
                continue;
            }
            let f = a[i][col].clone();
            for j in col..k {
                let d = &f * &a[col][j];
                a[i][j] -= d;
            }
            let d = &f * &b[col];
            b[i] -= d;
        }
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ratio;

    #[test]
    fn square_solver() {
        let a = vec![vec![ratio(2, 1), ratio(1, 1)], vec![ratio(1, 1), ratio(3, 1)]];
        let x = solve_square(a, vec![ratio(3, 1), ratio(5, 1)]).unwrap();
        assert_eq!(x, vec![ratio(4, 5), ratio(7, 5)]);
        let singular = vec![vec![ratio(1, 1), ratio(2, 1)], vec![ratio(2, 1), ratio(4, 1)]];
        assert!(solve_square(singular, vec![ratio(0, 1), ratio(0, 1)]).is_none());
    }
}
