//! Dense two-phase tableau simplex for small minimization LPs with `x >= 0`.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `min c·x` subject to the rows and `x >= 0`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        LinearProgram {
            n_vars,
            objective: vec![0.0; n_vars],
            rows: Vec::new(),
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row { coeffs, sense, rhs });
    }

    /// Largest violation of any row by `values` (0 when feasible).
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst = values.iter().fold(0.0f64, |w, &v| w.max(-v));
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * values[j]).sum();
            let gap = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, x)| c * x).sum()
    }
}

#[derive(Clone, Debug)]
pub struct SimplexSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

pub const PIVOT_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

struct Tableau {
    rows: usize,
    cols: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.width + self.cols]
    }

    fn obj_row(&self) -> usize {
        self.rows
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let piv = self.data[r * w + c];
        let inv = 1.0 / piv;
        for x in &mut self.data[r * w..(r + 1) * w] {
            *x *= inv;
        }
        self.data[r * w + c] = 1.0;
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[c];
            if f != 0.0 {
                for (x, &p) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
                row[c] = 0.0;
            }
        };
        before.chunks_mut(w).for_each(eliminate);
        after.chunks_mut(w).for_each(eliminate);
        self.basis[r] = c;
    }

    /// Runs pivots until optimal for the objective row. Columns with
    /// `blocked[j]` never enter.
    fn optimize(&mut self, blocked: &[bool], pivots: &mut usize, limit: usize) -> Result<()> {
        let obj = self.obj_row();
        let mut streak = 0usize;
        loop {
            let bland = streak >= DEGENERATE_STREAK;
            let mut enter = None;
            let mut best = -PIVOT_TOL;
            for j in 0..self.cols {
                if blocked[j] {
                    continue;
                }
                let d = self.at(obj, j);
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(c) = enter else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best_ratio)) => {
                            if ratio < best_ratio - 1e-12
                                || (ratio <= best_ratio + 1e-12 && self.basis[i] < self.basis[r])
                            {
                                Some((i, ratio.min(best_ratio)))
                            } else {
                                Some((r, best_ratio))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(Error::Unbounded);
            };
            if ratio.abs() <= 1e-12 {
                streak += 1;
            } else {
                streak = 0;
            }
            self.pivot(r, c);
            *pivots += 1;
            if *pivots > limit {
                return Err(Error::PivotLimit(limit));
            }
        }
    }
}

pub fn simplex_solve(lp: &LinearProgram) -> Result<SimplexSolution> {
    let n = lp.n_vars;
    let m = lp.rows.len();
    for row in &lp.rows {
        if !row.rhs.is_finite() || row.coeffs.iter().any(|&(j, a)| j >= n || !a.is_finite()) {
            return Err(Error::InvalidArgument("malformed lp row".into()));
        }
    }
    // Normalize to nonnegative right-hand sides.
    let norm: Vec<(f64, Sense)> = lp
        .rows
        .iter()
        .map(|r| {
            if r.rhs < 0.0 || (r.rhs == 0.0 && r.sense == Sense::Ge) {
                let flipped = match r.sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
                (-1.0, flipped)
            } else {
                (1.0, r.sense)
            }
        })
        .collect();
    let n_slack = norm.iter().filter(|(_, s)| *s != Sense::Eq).count();
    let n_art = norm.iter().filter(|(_, s)| *s != Sense::Le).count();
    let cols = n + n_slack + n_art;
    let width = cols + 1;
    let mut t = Tableau {
        rows: m,
        cols,
        width,
        data: vec![0.0; (m + 1) * width],
        basis: vec![0; m],
    };
    let mut artificial = vec![false; cols];
    let mut next_slack = n;
    let mut next_art = n + n_slack;
    for (i, (row, &(sign, sense))) in lp.rows.iter().zip(&norm).enumerate() {
        for &(j, a) in &row.coeffs {
            t.data[i * width + j] += sign * a;
        }
        t.data[i * width + cols] = sign * row.rhs;
        match sense {
            Sense::Le => {
                t.data[i * width + next_slack] = 1.0;
                t.basis[i] = next_slack;
                next_slack += 1;
            }
            Sense::Ge => {
                t.data[i * width + next_slack] = -1.0;
                next_slack += 1;
                t.data[i * width + next_art] = 1.0;
                artificial[next_art] = true;
                t.basis[i] = next_art;
                next_art += 1;
            }
            Sense::Eq => {
                t.data[i * width + next_art] = 1.0;
                artificial[next_art] = true;
                t.basis[i] = next_art;
                next_art += 1;
            }
        }
    }
    let limit = 50_000 + 50 * (m + cols);
    let mut pivots = 0;

    if n_art > 0 {
        // Phase one: minimize the sum of artificials.
        let obj = m * width;
        for i in 0..m {
            if artificial[t.basis[i]] {
                for j in 0..width {
                    t.data[obj + j] -= t.data[i * width + j];
                }
            }
        }
        for j in 0..cols {
            if artificial[j] {
                t.data[obj + j] = 0.0;
            }
        }
        let none = vec![false; cols];
        t.optimize(&none, &mut pivots, limit)?;
        let infeas = -t.data[obj + cols];
        let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        if infeas > 1e-7 * scale {
            return Err(Error::Infeasible);
        }
        // Drive zero-level artificials out of the basis where possible.
        for i in 0..m {
            if artificial[t.basis[i]] {
                if let Some(j) = (0..cols).find(|&j| !artificial[j] && t.at(i, j).abs() > PIVOT_TOL) {
                    t.pivot(i, j);
                    pivots += 1;
                }
            }
        }
    }

    // Phase two.
    let obj = m * width;
    for j in 0..width {
        t.data[obj + j] = 0.0;
    }
    for j in 0..n {
        t.data[obj + j] = lp.objective[j];
    }
    for i in 0..m {
        let cb = if t.basis[i] < n { lp.objective[t.basis[i]] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..width {
                t.data[obj + j] -= cb * t.data[i * width + j];
            }
        }
    }
    t.optimize(&artificial, &mut pivots, limit)?;

    let mut values = vec![0.0; n];
    for i in 0..m {
        if t.basis[i] < n {
            values[t.basis[i]] = t.rhs(i).max(0.0);
        }
    }
    let objective = lp.objective_value(&values);
    Ok(SimplexSolution { values, objective, pivots })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_lower_bound() {
        let mut lp = LinearProgram::new(1);
        lp.objective[0] = 1.0;
        lp.add_row(vec![(0, 1.0)], Sense::Ge, 1.0);
        let s = simplex_solve(&lp).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-12);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6)
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-3.0, -5.0];
        lp.add_row(vec![(0, 1.0)], Sense::Le, 4.0);
        lp.add_row(vec![(1, 2.0)], Sense::Le, 12.0);
        lp.add_row(vec![(0, 3.0), (1, 2.0)], Sense::Le, 18.0);
        let s = simplex_solve(&lp).unwrap();
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.values[0] - 2.0).abs() < 1e-9 && (s.values[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_negative_rhs() {
        // min x + 2y, x + y = 3, -x <= -1  ->  x = 3
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 2.0];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 3.0);
        lp.add_row(vec![(0, -1.0)], Sense::Le, -1.0);
        let s = simplex_solve(&lp).unwrap();
        assert!((s.objective - 3.0).abs() < 1e-9);
        assert!(lp.max_violation(&s.values) < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded_are_distinct() {
        let mut lp = LinearProgram::new(1);
        lp.objective[0] = 1.0;
        lp.add_row(vec![(0, 1.0)], Sense::Ge, 2.0);
        lp.add_row(vec![(0, 1.0)], Sense::Le, 1.0);
        assert!(matches!(simplex_solve(&lp), Err(Error::Infeasible)));

        let mut lp = LinearProgram::new(1);
        lp.objective[0] = -1.0;
        lp.add_row(vec![(0, 1.0)], Sense::Ge, 1.0);
        assert!(matches!(simplex_solve(&lp), Err(Error::Unbounded)));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0);
        lp.add_row(vec![(0, 2.0), (1, 2.0)], Sense::Eq, 2.0);
        let s = simplex_solve(&lp).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-9);
    }
}
