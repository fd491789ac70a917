//! Dense two-phase simplex for the small programs built by the preference
//! oracle: a handful of variables, a few hundred rows at most.
//!
//! All variables are nonnegative. Equality rows are split into two `≤` rows
//! so the tableau only ever sees one canonical form. Pivoting follows Bland's
//! rule, which rules out cycling on the degenerate programs the cutting-plane
//! loop produces.

use thiserror::Error;

/// Default feasibility tolerance.
pub const LP_TOL: f64 = 1e-7;

const PIVOT_TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("row has {found} coefficients, program has {expected} variables")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("program is unbounded")]
    Unbounded,
    #[error("simplex failed to converge after {pivots} pivots")]
    NumericalFailure { pivots: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `minimize objective · x` subject to the constraints and `x ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective_value: f64,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Result<Self, LpError> {
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite);
        }
        Ok(LinearProgram { num_vars: objective.len(), objective, constraints: Vec::new() })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn add_constraint(
        &mut self,
        coeffs: Vec<f64>,
        relation: Relation,
        rhs: f64,
    ) -> Result<(), LpError> {
        if coeffs.len() != self.num_vars {
            return Err(LpError::DimensionMismatch { expected: self.num_vars, found: coeffs.len() });
        }
        if !rhs.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite);
        }
        self.constraints.push(Constraint { coeffs, relation, rhs });
        Ok(())
    }

    /// Builder-style variant of [`add_constraint`](Self::add_constraint).
    pub fn with_constraint(
        mut self,
        coeffs: Vec<f64>,
        relation: Relation,
        rhs: f64,
    ) -> Result<Self, LpError> {
        self.add_constraint(coeffs, relation, rhs)?;
        Ok(self)
    }

    /// Largest violation of any constraint (or of `x ≥ 0`) at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().fold(0.0f64, |m, v| m.max(-v));
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let viol = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub fn solve(&self, tol: f64) -> Result<LpSolution, LpError> {
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(self.constraints.len() + 1);
        for c in &self.constraints {
            rows.push((c.coeffs.clone(), c.rhs));
            if c.relation == Relation::Eq {
                rows.push((c.coeffs.iter().map(|a| -a).collect(), -c.rhs));
            }
        }
        let mut tab = Tableau::new(self.num_vars, &rows);

        let phase_one: Vec<f64> = (0..tab.cols)
            .map(|j| if tab.is_artificial(j) { 1.0 } else { 0.0 })
            .collect();
        tab.optimize(&phase_one, true)?;
        let infeasibility: f64 = (0..tab.basis.len())
            .filter(|&i| tab.is_artificial(tab.basis[i]))
            .map(|i| tab.rhs(i))
            .sum();
        if infeasibility > tol {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                values: tab.values(),
                objective_value: f64::NAN,
            });
        }
        tab.drive_out_artificials();

        let mut phase_two = vec![0.0; tab.cols];
        phase_two[..self.num_vars].copy_from_slice(&self.objective);
        tab.optimize(&phase_two, false)?;

        let values: Vec<f64> = tab
            .values()
            .into_iter()
            .map(|v| if v < 0.0 && v >= -tol { 0.0 } else { v })
            .collect();
        for c in &self.constraints {
            let scale = c.coeffs.iter().fold(c.rhs.abs(), |m, a| m.max(a.abs())).max(1.0);
            let lhs: f64 = c.coeffs.iter().zip(&values).map(|(a, v)| a * v).sum();
            let viol = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            if viol > tol * scale {
                return Err(LpError::NumericalFailure { pivots: tab.pivots });
            }
        }
        let objective_value = self.objective.iter().zip(&values).map(|(c, v)| c * v).sum();
        Ok(LpSolution { status: LpStatus::Optimal, values, objective_value })
    }
}

/// Row-major simplex tableau. Columns are laid out as
/// `[structural | slack | artificial | rhs]`.
struct Tableau {
    num_vars: usize,
    num_rows: usize,
    first_artificial: usize,
    cols: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn new(num_vars: usize, rows: &[(Vec<f64>, f64)]) -> Self {
        let m = rows.len();
        let negative: Vec<bool> = rows.iter().map(|(_, b)| *b < 0.0).collect();
        let num_art = negative.iter().filter(|n| **n).count();
        let first_artificial = num_vars + m;
        let cols = first_artificial + num_art;
        let width = cols + 1;
        let mut data = vec![0.0; m * width];
        let mut basis = Vec::with_capacity(m);
        let mut next_art = first_artificial;
        for (i, (a, b)) in rows.iter().enumerate() {
            let row = &mut data[i * width..(i + 1) * width];
            let sign = if negative[i] { -1.0 } else { 1.0 };
            for (j, v) in a.iter().enumerate() {
                row[j] = sign * v;
            }
            row[num_vars + i] = sign;
            row[cols] = sign * b;
            if negative[i] {
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            } else {
                basis.push(num_vars + i);
            }
        }
        Tableau { num_vars, num_rows: m, first_artificial, cols, data, basis, pivots: 0 }
    }

    fn width(&self) -> usize {
        self.cols + 1
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.first_artificial
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width() + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn values(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.num_vars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.num_vars {
                x[b] = self.rhs(i);
            }
        }
        x
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let p = self.at(r, c);
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..self.num_rows {
            if i == r {
                continue;
            }
            let f = self.at(i, c);
            if f == 0.0 {
                continue;
            }
            for (v, pr) in self.data[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            self.data[i * w + c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Minimizes `cost · x` with Bland's rule. Artificial columns may only
    /// enter during phase one.
    fn optimize(&mut self, cost: &[f64], phase_one: bool) -> Result<(), LpError> {
        let mut in_basis = vec![false; self.cols];
        for &b in &self.basis {
            in_basis[b] = true;
        }
        loop {
            if self.pivots >= MAX_PIVOTS {
                return Err(LpError::NumericalFailure { pivots: self.pivots });
            }
            let entering = (0..self.cols).find(|&j| {
                if in_basis[j] || (!phase_one && self.is_artificial(j)) {
                    return false;
                }
                let reduced = cost[j]
                    - (0..self.num_rows)
                        .map(|i| cost[self.basis[i]] * self.at(i, j))
                        .sum::<f64>();
                reduced < -PIVOT_TOL
            });
            let Some(c) = entering else { return Ok(()) };

            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.num_rows {
                let a = self.at(i, c);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leaving = match leaving {
                    None => Some((i, ratio)),
                    Some((best, best_ratio)) => {
                        let tie = (ratio - best_ratio).abs() <= PIVOT_TOL * best_ratio.abs().max(1.0);
                        if (!tie && ratio < best_ratio) || (tie && self.basis[i] < self.basis[best]) {
                            Some((i, ratio))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
            let Some((r, _)) = leaving else { return Err(LpError::Unbounded) };
            in_basis[self.basis[r]] = false;
            in_basis[c] = true;
            self.pivot(r, c);
        }
    }

    /// Pivots zero-level artificials out of the basis where possible; rows
    /// where that is impossible are redundant and left alone.
    fn drive_out_artificials(&mut self) {
        for i in 0..self.num_rows {
            if !self.is_artificial(self.basis[i]) {
                continue;
            }
            let in_basis: Vec<usize> = self.basis.clone();
            if let Some(c) = (0..self.first_artificial)
                .find(|&j| !in_basis.contains(&j) && self.at(i, j).abs() > PIVOT_TOL)
            {
                self.pivot(i, c);
            }
        }
    }
}
