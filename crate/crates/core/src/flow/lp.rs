//! Exact two-phase tableau simplex with Bland's rule.

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Ge,
    Le,
}

/// `Σ coeffs · y  (sense)  rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub sense: Sense,
    pub rhs: Rational,
}

/// Minimize `objective · y` subject to the constraints and `y ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal {
        value: Rational,
        solution: Vec<Rational>,
    },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<&Rational> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![Rational::zero(); num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn constrain(&mut self, coeffs: Vec<(usize, Rational)>, sense: Sense, rhs: Rational) {
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    /// Whether `y` satisfies every constraint and `y ≥ 0`.
    pub fn is_feasible(&self, y: &[Rational]) -> bool {
        if y.len() != self.num_vars || y.iter().any(Signed::is_negative) {
            return false;
        }
        self.constraints.iter().all(|c| {
            let lhs: Rational = c.coeffs.iter().map(|(v, a)| a * &y[*v]).sum();
            match c.sense {
                Sense::Eq => lhs == c.rhs,
                Sense::Ge => lhs >= c.rhs,
                Sense::Le => lhs <= c.rhs,
            }
        })
    }

    pub fn objective_value(&self, y: &[Rational]) -> Rational {
        self.objective.iter().zip(y).map(|(c, v)| c * v).sum()
    }

    /// Equality form `A y = b`, `b ≥ 0`, with one slack column appended per
    /// inequality. Returns the dense rows, the right-hand sides and the
    /// total column count.
    pub fn standard_form(&self) -> (Vec<Vec<Rational>>, Vec<Rational>, usize) {
        let slacks = self
            .constraints
            .iter()
            .filter(|c| c.sense != Sense::Eq)
            .count();
        let cols = self.num_vars + slacks;
        let mut rows = Vec::with_capacity(self.constraints.len());
        let mut rhs = Vec::with_capacity(self.constraints.len());
        let mut next_slack = self.num_vars;
        for c in &self.constraints {
            let mut row = vec![Rational::zero(); cols];
            for (v, a) in &c.coeffs {
                row[*v] += a;
            }
            match c.sense {
                Sense::Eq => {}
                Sense::Ge => {
                    row[next_slack] = -Rational::one();
                    next_slack += 1;
                }
                Sense::Le => {
                    row[next_slack] = Rational::one();
                    next_slack += 1;
                }
            }
            let mut b = c.rhs.clone();
            if b.is_negative() {
                for a in row.iter_mut() {
                    *a = -&*a;
                }
                b = -b;
            }
            rows.push(row);
            rhs.push(b);
        }
        (rows, rhs, cols)
    }
}

struct Tableau {
    /// `rows[r]` holds the coefficients followed by the right-hand side.
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = Rational::one() / &self.rows[r][c];
        for a in self.rows[r].iter_mut() {
            *a *= &inv;
        }
        let pivot_row = self.rows[r].clone();
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for (a, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *a -= &factor * p;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Reduced costs of `cost` with respect to the current basis, with the
    /// objective value in the last slot.
    fn reduced(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut red: Vec<Rational> = cost.to_vec();
        red.push(Rational::zero());
        for (r, &b) in self.basis.iter().enumerate() {
            if cost[b].is_zero() {
                continue;
            }
            for (k, a) in self.rows[r].iter().enumerate() {
                if !a.is_zero() {
                    red[k] -= &cost[b] * a;
                }
            }
        }
        red
    }

    /// Minimizes `cost` over the columns `allowed`. Returns false when
    /// unbounded.
    fn optimize(&mut self, cost: &[Rational], allowed: &[bool]) -> bool {
        loop {
            let red = self.reduced(cost);
            let entering = (0..self.cols).find(|&k| allowed[k] && red[k].is_negative());
            let Some(c) = entering else {
                return true;
            };
            let mut best: Option<(Rational, usize, usize)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let ratio = &row[self.cols] / &row[c];
                let better = match &best {
                    None => true,
                    Some((q, _, b)) => ratio < *q || (ratio == *q && self.basis[r] < *b),
                };
                if better {
                    best = Some((ratio, r, self.basis[r]));
                }
            }
            match best {
                None => return false,
                Some((_, r, _)) => self.pivot(r, c),
            }
        }
    }
}

/// Solves `lp` exactly.
pub fn solve(lp: &LinearProgram) -> LpOutcome {
    let (rows, rhs, cols) = lp.standard_form();
    let m = rows.len();
    let total = cols + m;
    // One artificial per row keeps phase one uniform.
    let mut tab = Tableau {
        rows: rows
            .into_iter()
            .zip(rhs)
            .enumerate()
            .map(|(r, (mut row, b))| {
                row.extend((0..m).map(|k| {
                    if k == r {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                }));
                row.push(b);
                row
            })
            .collect(),
        basis: (cols..total).collect(),
        cols: total,
    };
    let mut phase1 = vec![Rational::zero(); total];
    for c in phase1.iter_mut().skip(cols) {
        *c = Rational::one();
    }
    let all = vec![true; total];
    tab.optimize(&phase1, &all);
    let infeasibility: Rational = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= cols)
        .map(|(r, _)| tab.rows[r][total].clone())
        .sum();
    if infeasibility.is_positive() {
        return LpOutcome::Infeasible;
    }
    // Drive remaining (zero-valued) artificials out of the basis; rows
    // where that fails are redundant and dropped.
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= cols {
            if let Some(c) = (0..cols).find(|&c| !tab.rows[r][c].is_zero()) {
                tab.pivot(r, c);
                r += 1;
            } else {
                tab.rows.remove(r);
                tab.basis.remove(r);
            }
        } else {
            r += 1;
        }
    }
    let mut cost = vec![Rational::zero(); total];
    cost[..lp.num_vars].clone_from_slice(&lp.objective);
    let allowed: Vec<bool> = (0..total).map(|k| k < cols).collect();
    if !tab.optimize(&cost, &allowed) {
        return LpOutcome::Unbounded;
    }
    let mut solution = vec![Rational::zero(); lp.num_vars];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < lp.num_vars {
            solution[b] = tab.rows[r][total].clone();
        }
    }
    let value = lp.objective_value(&solution);
    LpOutcome::Optimal { value, solution }
}
