//! Dense two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! Minimizes `c . x` over `x >= 0` subject to rows of the form
//! `a . x (<= | = | >=) b`. Intended for the small relaxations built by the
//! oracles (tens of variables), not as a general-purpose LP code.

use thiserror::Error;

const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Basis changes over both phases.
    pub pivots: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("constraint {0} has {1} coefficients, expected {2}")]
    Shape(usize, usize, usize),
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced costs.
    cost: Vec<f64>,
    /// Negated objective value.
    cost_rhs: f64,
    pivots: u64,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rhs[r] /= p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c];
            if f != 0.0 {
                for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.cost_rhs -= f * pivot_rhs;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Sets reduced costs for cost vector `c` under the current basis.
    fn price(&mut self, c: &[f64]) {
        self.cost = c.to_vec();
        self.cost_rhs = 0.0;
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = c[b];
            if cb != 0.0 {
                for (v, a) in self.cost.iter_mut().zip(&self.rows[i]) {
                    *v -= cb * a;
                }
                self.cost_rhs -= cb * self.rhs[i];
            }
        }
    }

    /// Iterates to optimality over columns `0..allowed`.
    fn optimize(&mut self, allowed: usize) -> Result<(), LpError> {
        loop {
            // Bland: lowest-index improving column
            let Some(enter) = (0..allowed).find(|&j| self.cost[j] < -EPS) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][enter];
                if a > EPS {
                    let ratio = self.rhs[i] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            if ratio < best - EPS
                                || (ratio <= best + EPS && self.basis[i] < self.basis[r])
                            {
                                Some((i, ratio))
                            } else {
                                Some((r, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(r, enter);
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let n = lp.objective.len();
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.len() != n {
            return Err(LpError::Shape(i, c.coeffs.len(), n));
        }
    }

    // Normalize to nonnegative right-hand sides.
    let rows: Vec<(Vec<f64>, Relation, f64)> = lp
        .constraints
        .iter()
        .map(|c| {
            if c.rhs < 0.0 {
                let flipped = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (c.coeffs.iter().map(|v| -v).collect(), flipped, -c.rhs)
            } else {
                (c.coeffs.clone(), c.relation, c.rhs)
            }
        })
        .collect();

    // Column layout: structural | slack/surplus | artificial.
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let width = n + n_slack + n_art;
    let mut tab = Tableau {
        rows: Vec::with_capacity(rows.len()),
        rhs: Vec::with_capacity(rows.len()),
        basis: Vec::with_capacity(rows.len()),
        cost: vec![0.0; width],
        cost_rhs: 0.0,
        pivots: 0,
    };
    let (mut next_slack, mut next_art) = (n, n + n_slack);
    for (coeffs, rel, b) in rows {
        let mut row = coeffs;
        row.resize(width, 0.0);
        match rel {
            Relation::Le => {
                row[next_slack] = 1.0;
                tab.basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -1.0;
                next_slack += 1;
                row[next_art] = 1.0;
                tab.basis.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = 1.0;
                tab.basis.push(next_art);
                next_art += 1;
            }
        }
        tab.rows.push(row);
        tab.rhs.push(b);
    }

    let first_art = n + n_slack;
    if n_art > 0 {
        let mut phase1 = vec![0.0; width];
        phase1[first_art..].fill(1.0);
        tab.price(&phase1);
        tab.optimize(width)?;
        if -tab.cost_rhs > EPS * (1.0 + tab.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()))) {
            return Err(LpError::Infeasible);
        }
        // Drive remaining zero-level artificials out of the basis; rows where
        // that is impossible are redundant and dropped.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= first_art {
                match (0..first_art).find(|&j| tab.rows[i][j].abs() > EPS) {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.rows.remove(i);
                        tab.rhs.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut phase2 = lp.objective.clone();
    phase2.resize(width, 0.0);
    tab.price(&phase2);
    tab.optimize(first_art)?;

    let mut x = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs[i].max(0.0);
        }
    }
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        x,
        value,
        pivots: tab.pivots,
    })
}
