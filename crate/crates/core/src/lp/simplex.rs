use num::{One, Signed, Zero};

use super::{LinearProgram, LpError, LpSolution};
use crate::model::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Structural,
    Slack,
    Artificial,
}

/// Dense tableau over shifted variables `y = x - lo`, each `y_j` in `[0, upper_j]`.
struct Tableau {
    rows: Vec<Vec<Rational>>,
    /// Current values of the basic variables, one per row.
    beta: Vec<Rational>,
    basis: Vec<usize>,
    upper: Vec<Option<Rational>>,
    kinds: Vec<Kind>,
    at_upper: Vec<bool>,
    reduced: Vec<Rational>,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl Tableau {
    fn n_cols(&self) -> usize {
        self.kinds.len()
    }

    fn basic_row(&self, col: usize) -> Option<usize> {
        self.basis.iter().position(|&b| b == col)
    }

    fn nonbasic_value(&self, col: usize) -> Rational {
        if self.at_upper[col] {
            self.upper[col].clone().expect("at upper bound without one")
        } else {
            Rational::zero()
        }
    }

    fn value(&self, col: usize) -> Rational {
        match self.basic_row(col) {
            Some(i) => self.beta[i].clone(),
            None => self.nonbasic_value(col),
        }
    }

    fn reset_costs(&mut self, cost: &[Rational]) {
        let mut reduced = cost.to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = &cost[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for (d, a) in reduced.iter_mut().zip(row) {
                if !a.is_zero() {
                    *d -= cb * a;
                }
            }
        }
        self.reduced = reduced;
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col].clone();
        for a in self.rows[r].iter_mut() {
            if !a.is_zero() {
                *a /= &p;
            }
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (a, b) in row.iter_mut().zip(&pivot_row) {
                if !b.is_zero() {
                    *a -= &f * b;
                }
            }
        }
        let f = self.reduced[col].clone();
        if !f.is_zero() {
            for (d, b) in self.reduced.iter_mut().zip(&pivot_row) {
                if !b.is_zero() {
                    *d -= &f * b;
                }
            }
        }
        self.basis[r] = col;
    }

    /// One Bland iteration: lowest-index improving column enters, ties in the
    /// ratio test go to the lowest-index basic variable.
    fn step(&mut self, allowed: &dyn Fn(usize) -> bool) -> Step {
        let entering = (0..self.n_cols()).find(|&j| {
            allowed(j)
                && self.basic_row(j).is_none()
                && if self.at_upper[j] {
                    self.reduced[j].is_positive()
                } else {
                    self.reduced[j].is_negative()
                }
        });
        let Some(j) = entering else {
            return Step::Optimal;
        };
        let increasing = !self.at_upper[j];

        // (theta, leaving row, leaving var goes to its upper bound)
        let mut best: Option<(Rational, usize, bool)> = None;
        for i in 0..self.rows.len() {
            let a = &self.rows[i][j];
            if a.is_zero() {
                continue;
            }
            // basic value moves by -a * delta where delta = +-theta
            let falls = a.is_positive() == increasing;
            let limit = if falls {
                Some((&self.beta[i] / a.abs(), false))
            } else {
                self.upper[self.basis[i]]
                    .as_ref()
                    .map(|u| ((u - &self.beta[i]) / a.abs(), true))
            };
            if let Some((theta, to_upper)) = limit {
                let better = match &best {
                    None => true,
                    Some((bt, bi, _)) => {
                        theta < *bt || (theta == *bt && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((theta, i, to_upper));
                }
            }
        }

        let flip = self.upper[j].clone();
        let flip_wins = match (&flip, &best) {
            (Some(u), Some((t, _, _))) => u <= t,
            (Some(_), None) => true,
            (None, _) => false,
        };
        let theta = if flip_wins {
            flip.clone().unwrap()
        } else {
            match &best {
                Some((t, _, _)) => t.clone(),
                None => return Step::Unbounded,
            }
        };

        let signed = if increasing {
            theta.clone()
        } else {
            -theta.clone()
        };
        if !signed.is_zero() {
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if !a.is_zero() {
                    self.beta[i] -= a * &signed;
                }
            }
        }

        if flip_wins {
            self.at_upper[j] = increasing;
            return Step::Moved;
        }
        let (_, r, to_upper) = best.unwrap();
        let leaving = self.basis[r];
        let entering_value = if increasing {
            theta
        } else {
            self.upper[j].clone().unwrap() - theta
        };
        self.beta[r] = entering_value;
        self.at_upper[leaving] = to_upper;
        self.at_upper[j] = false;
        self.pivot(r, j);
        Step::Moved
    }

    fn run(&mut self, allowed: &dyn Fn(usize) -> bool) -> bool {
        loop {
            match self.step(allowed) {
                Step::Optimal => return true,
                Step::Unbounded => return false,
                Step::Moved => {}
            }
        }
    }
}

/// Solves `lp` exactly. Deterministic for a fixed input ordering.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.check()?;
    let n = lp.n_vars();
    let n_le = lp.le_rows.len();

    let mut kinds = vec![Kind::Structural; n];
    let mut upper: Vec<Option<Rational>> = lp
        .bounds
        .iter()
        .map(|b| b.hi.as_ref().map(|hi| hi - &b.lo))
        .collect();
    kinds.extend(std::iter::repeat_n(Kind::Slack, n_le));
    upper.extend(std::iter::repeat_n(None, n_le));

    let lo: Vec<Rational> = lp.bounds.iter().map(|b| b.lo.clone()).collect();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut slack_of_row = Vec::new();
    for row in &lp.eq_rows {
        let mut coeffs = row.coeffs.clone();
        coeffs.extend(std::iter::repeat_n(Rational::zero(), n_le));
        rhs.push(&row.rhs - super::dot(&row.coeffs, &lo));
        rows.push(coeffs);
        slack_of_row.push(None);
    }
    for (k, row) in lp.le_rows.iter().enumerate() {
        let mut coeffs = row.coeffs.clone();
        coeffs.extend(std::iter::repeat_n(Rational::zero(), n_le));
        coeffs[n + k] = Rational::one();
        rhs.push(&row.rhs - super::dot(&row.coeffs, &lo));
        rows.push(coeffs);
        slack_of_row.push(Some(n + k));
    }
    for (row, b) in rows.iter_mut().zip(rhs.iter_mut()) {
        if b.is_negative() {
            for a in row.iter_mut() {
                *a = -a.clone();
            }
            *b = -b.clone();
        }
    }

    // Rows whose slack has coefficient +1 start with the slack basic; the rest
    // get an artificial column.
    let m = rows.len();
    let mut basis = vec![0; m];
    for i in 0..m {
        match slack_of_row[i] {
            Some(s) if rows[i][s].is_one() => basis[i] = s,
            _ => {
                let col = kinds.len();
                kinds.push(Kind::Artificial);
                upper.push(None);
                for (k, row) in rows.iter_mut().enumerate() {
                    row.push(if k == i {
                        Rational::one()
                    } else {
                        Rational::zero()
                    });
                }
                basis[i] = col;
            }
        }
    }

    let n_cols = kinds.len();
    let mut tab = Tableau {
        rows,
        beta: rhs,
        basis,
        upper,
        kinds,
        at_upper: vec![false; n_cols],
        reduced: Vec::new(),
    };

    if tab.kinds.contains(&Kind::Artificial) {
        let phase1: Vec<Rational> = tab
            .kinds
            .iter()
            .map(|k| match k {
                Kind::Artificial => Rational::one(),
                _ => Rational::zero(),
            })
            .collect();
        tab.reset_costs(&phase1);
        tab.run(&|_| true);
        let infeasibility = (0..m)
            .filter(|&i| tab.kinds[tab.basis[i]] == Kind::Artificial)
            .fold(Rational::zero(), |acc, i| acc + &tab.beta[i]);
        if infeasibility.is_positive() {
            return Ok(LpSolution::Infeasible);
        }
        drive_out_artificials(&mut tab);
    }

    let mut cost: Vec<Rational> = lp.objective.clone();
    cost.resize(tab.n_cols(), Rational::zero());
    tab.reset_costs(&cost);
    let kinds = tab.kinds.clone();
    if !tab.run(&|j| kinds[j] != Kind::Artificial) {
        return Ok(LpSolution::Unbounded);
    }

    let point: Vec<Rational> = (0..n).map(|j| &lo[j] + tab.value(j)).collect();
    let value = lp.value_at(&point);
    debug_assert!(lp.is_feasible(&point));
    Ok(LpSolution::Optimal { value, point })
}

/// Replaces zero-valued basic artificials by real columns; rows where that is
/// impossible are linearly dependent and get dropped.
fn drive_out_artificials(tab: &mut Tableau) {
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.kinds[tab.basis[i]] != Kind::Artificial {
            i += 1;
            continue;
        }
        let replacement = (0..tab.n_cols()).find(|&j| {
            tab.kinds[j] != Kind::Artificial
                && tab.basic_row(j).is_none()
                && !tab.rows[i][j].is_zero()
        });
        match replacement {
            Some(j) => {
                let v = tab.nonbasic_value(j);
                let leaving = tab.basis[i];
                tab.at_upper[leaving] = false;
                tab.at_upper[j] = false;
                tab.beta[i] = v;
                tab.pivot(i, j);
                i += 1;
            }
            None => {
                tab.rows.remove(i);
                tab.beta.remove(i);
                tab.basis.remove(i);
            }
        }
    }
}
