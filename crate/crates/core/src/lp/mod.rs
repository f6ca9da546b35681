//! Time-indexed covering LP: model, solution type and the cutting-plane driver.

pub mod kc;
pub mod simplex;

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::{Instance, ProblemMode};
pub use kc::{kc_separate, tightest_residual, KcCut};
pub use simplex::{simplex_solve, LinearProgram, Row, Sense, SimplexSolution};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintMode {
    /// `u + Σ x_{<t} >= 1` per edge and slot.
    Basic,
    /// Only the `S = ∅` knapsack-cover rows; the rest arrive by separation.
    KcSeed,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RowKind {
    Packing { t: usize },
    Assignment { v: usize },
    Cover { edge: usize, t: usize, subset: Vec<usize> },
}

/// Weight of the slot-`t` residual under the `ℓp` objective.
pub fn slot_weight(t: usize, p: f64) -> f64 {
    if p == 1.0 {
        1.0
    } else {
        (t as f64).powf(p) - (t as f64 - 1.0).powf(p)
    }
}

#[derive(Clone, Debug)]
pub struct LpModel {
    pub n_vertices: usize,
    pub n_edges: usize,
    pub horizon: usize,
    pub p: f64,
    pub program: LinearProgram,
    pub kinds: Vec<RowKind>,
}

impl LpModel {
    pub fn x_var(&self, v: usize, t: usize) -> usize {
        v * self.horizon + (t - 1)
    }

    pub fn u_var(&self, e: usize, t: usize) -> usize {
        (self.n_vertices + e) * self.horizon + (t - 1)
    }

    pub fn var_name(&self, j: usize) -> String {
        let t = j % self.horizon + 1;
        let owner = j / self.horizon;
        if owner < self.n_vertices {
            format!("x[{owner},{t}]")
        } else {
            format!("u[{},{t}]", owner - self.n_vertices)
        }
    }

    /// Adds the knapsack-cover row of `(edge, t, S)`.
    pub fn add_cover_row(&mut self, instance: &Instance, edge: usize, t: usize, subset: &[usize]) {
        let e = &instance.edges[edge];
        let r = (e.k - subset.len()) as f64;
        let mut coeffs = vec![(self.u_var(edge, t), r)];
        for &v in &e.vertices {
            if subset.contains(&v) {
                continue;
            }
            for s in 1..t {
                coeffs.push((self.x_var(v, s), 1.0));
            }
        }
        self.program.add_row(coeffs, Sense::Ge, r);
        self.kinds.push(RowKind::Cover { edge, t, subset: subset.to_vec() });
    }

    pub fn row_name(&self, i: usize) -> String {
        match &self.kinds[i] {
            RowKind::Packing { t } => format!("pack[{t}]"),
            RowKind::Assignment { v } => format!("assign[{v}]"),
            RowKind::Cover { edge, t, subset } => format!("cover[{edge},{t},{subset:?}]"),
        }
    }

    pub fn model_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "min");
        for (j, &c) in self.program.objective.iter().enumerate() {
            if c != 0.0 {
                let _ = writeln!(out, "  {c} {}", self.var_name(j));
            }
        }
        let _ = writeln!(out, "subject to");
        for (i, row) in self.program.rows.iter().enumerate() {
            let lhs: Vec<String> = row
                .coeffs
                .iter()
                .map(|&(j, a)| format!("{a} {}", self.var_name(j)))
                .collect();
            let sense = match row.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, "  {}: {} {sense} {}", self.row_name(i), lhs.join(" + "), row.rhs);
        }
        out
    }

    pub fn solution_text(&self, values: &[f64]) -> String {
        let mut out = String::new();
        for (j, v) in values.iter().enumerate() {
            let _ = writeln!(out, "{} = {v}", self.var_name(j));
        }
        out
    }
}

/// Packing rows per slot, one assignment row per vertex (every vertex is
/// fully scheduled by the horizon), and one covering row per edge and slot.
pub fn build_lp(instance: &Instance, p: f64, mode: ConstraintMode) -> Result<LpModel> {
    instance.check(ProblemMode::Gmssc)?;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("p = {p} must be finite and >= 1")));
    }
    let n = instance.n;
    let m = instance.m();
    let horizon = n;
    let mut model = LpModel {
        n_vertices: n,
        n_edges: m,
        horizon,
        p,
        program: LinearProgram::new((n + m) * horizon),
        kinds: Vec::new(),
    };
    for (ei, e) in instance.edges.iter().enumerate() {
        for t in 1..=horizon {
            let j = model.u_var(ei, t);
            model.program.objective[j] = e.weight() * slot_weight(t, p);
        }
    }
    for t in 1..=horizon {
        let coeffs = (0..n).map(|v| (model.x_var(v, t), 1.0)).collect();
        model.program.add_row(coeffs, Sense::Le, 1.0);
        model.kinds.push(RowKind::Packing { t });
    }
    for v in 0..n {
        let coeffs = (1..=horizon).map(|t| (model.x_var(v, t), 1.0)).collect();
        model.program.add_row(coeffs, Sense::Eq, 1.0);
        model.kinds.push(RowKind::Assignment { v });
    }
    for (ei, e) in instance.edges.iter().enumerate() {
        for t in 1..=horizon {
            match mode {
                ConstraintMode::KcSeed => model.add_cover_row(instance, ei, t, &[]),
                ConstraintMode::Basic => {
                    let mut coeffs = vec![(model.u_var(ei, t), 1.0)];
                    for &v in &e.vertices {
                        for s in 1..t {
                            coeffs.push((model.x_var(v, s), 1.0));
                        }
                    }
                    model.program.add_row(coeffs, Sense::Ge, 1.0);
                    model.kinds.push(RowKind::Cover { edge: ei, t, subset: Vec::new() });
                }
            }
        }
    }
    Ok(model)
}

#[derive(Clone, Debug, Serialize)]
pub struct FractionalSolution {
    pub horizon: usize,
    pub p: f64,
    /// `x[v][t-1]`: mass of vertex `v` in slot `t`.
    pub x: Vec<Vec<f64>>,
    /// `u[e][t-1]`: uncovered residual of edge `e` at slot `t`.
    pub u: Vec<Vec<f64>>,
    pub objective: f64,
    /// Objective after each cutting-plane round.
    pub round_objectives: Vec<f64>,
    pub cuts_added: usize,
}

impl FractionalSolution {
    pub fn from_values(model: &LpModel, values: &[f64], objective: f64) -> Self {
        let clamp = |v: f64| v.clamp(0.0, 1.0);
        let x = (0..model.n_vertices)
            .map(|v| (1..=model.horizon).map(|t| clamp(values[model.x_var(v, t)])).collect())
            .collect();
        let u = (0..model.n_edges)
            .map(|e| (1..=model.horizon).map(|t| clamp(values[model.u_var(e, t)])).collect())
            .collect();
        FractionalSolution {
            horizon: model.horizon,
            p: model.p,
            x,
            u,
            objective,
            round_objectives: vec![objective],
            cuts_added: 0,
        }
    }

    /// `Σ_{t' < t} x_{v,t'}`.
    pub fn prefix_before(&self, v: usize, t: usize) -> f64 {
        self.x[v][..(t - 1).min(self.horizon)].iter().sum()
    }

    /// Per-slot completion `x_{e,t} = u_{e,t} - u_{e,t+1}` with `u_{e,T+1} = 0`.
    pub fn edge_completion(&self, e: usize) -> Result<Vec<f64>> {
        let u = &self.u[e];
        let mut out = Vec::with_capacity(self.horizon);
        for t in 0..self.horizon {
            let next = if t + 1 < self.horizon { u[t + 1] } else { 0.0 };
            let d = u[t] - next;
            if d < -1e-9 {
                return Err(Error::Numerical(format!(
                    "residual of edge {e} increases at slot {} by {}",
                    t + 1,
                    -d
                )));
            }
            out.push(d.max(0.0));
        }
        Ok(out)
    }

    /// Residual left at the horizon; nonzero means the telescope puts that
    /// mass on the last slot.
    pub fn residual_at_horizon(&self, e: usize) -> f64 {
        self.u[e][self.horizon - 1]
    }

    pub fn max_packing_load(&self) -> f64 {
        (0..self.horizon)
            .map(|t| self.x.iter().map(|row| row[t]).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// `Σ_t (t^p - (t-1)^p)·u_{e,t}` for one copy of edge `e`.
pub fn lp_edge_cost(sol: &FractionalSolution, e: usize, p: f64) -> f64 {
    sol.u[e]
        .iter()
        .enumerate()
        .map(|(i, &u)| slot_weight(i + 1, p) * u)
        .sum()
}

pub fn weighted_lp_cost(instance: &Instance, sol: &FractionalSolution, p: f64) -> f64 {
    instance
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| e.weight() * lp_edge_cost(sol, i, p))
        .sum()
}

pub const DEFAULT_MAX_ROUNDS: usize = 200;

pub fn solve_relaxation(instance: &Instance, p: f64, mode: ProblemMode) -> Result<FractionalSolution> {
    solve_relaxation_capped(instance, p, mode, DEFAULT_MAX_ROUNDS)
}

pub fn solve_relaxation_capped(
    instance: &Instance,
    p: f64,
    mode: ProblemMode,
    max_rounds: usize,
) -> Result<FractionalSolution> {
    instance.check(mode)?;
    let basic = instance.all_unit();
    let mut model = build_lp(
        instance,
        p,
        if basic { ConstraintMode::Basic } else { ConstraintMode::KcSeed },
    )?;
    let mut seen: HashSet<(usize, usize, Vec<usize>)> = HashSet::new();
    let mut history = Vec::new();
    let mut cuts_added = 0;
    let mut round = 0;
    loop {
        let raw = simplex_solve(&model.program)?;
        history.push(raw.objective);
        let mut sol = FractionalSolution::from_values(&model, &raw.values, raw.objective);
        sol.round_objectives = history.clone();
        sol.cuts_added = cuts_added;
        if basic {
            return Ok(sol);
        }
        let cuts: Vec<KcCut> = kc_separate(instance, &sol)
            .into_iter()
            .filter(|c| !seen.contains(&(c.edge, c.t, c.subset.clone())))
            .collect();
        if cuts.is_empty() {
            return Ok(sol);
        }
        round += 1;
        if round > max_rounds {
            return Err(Error::RoundCap { rounds: max_rounds, last: Box::new(sol) });
        }
        for c in cuts {
            model.add_cover_row(instance, c.edge, c.t, &c.subset);
            seen.insert((c.edge, c.t, c.subset));
            cuts_added += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::Edge;

    #[test]
    fn objective_weights() {
        let inst = Instance::new(3, vec![Edge::weighted(vec![0, 1], 1, 2)]);
        let m1 = build_lp(&inst, 1.0, ConstraintMode::Basic).unwrap();
        for t in 1..=3 {
            assert_eq!(m1.program.objective[m1.u_var(0, t)], 2.0);
        }
        let m2 = build_lp(&inst, 2.0, ConstraintMode::Basic).unwrap();
        assert_eq!(m2.program.objective[m2.u_var(0, 3)], 10.0);
    }

    #[test]
    fn single_vertex_model_and_value() {
        let inst = Instance::set_cover(1, &[&[0]]);
        let m = build_lp(&inst, 1.0, ConstraintMode::Basic).unwrap();
        assert_eq!(m.horizon, 1);
        assert_eq!(m.program.n_vars, 2);
        let s = solve_relaxation(&inst, 1.0, ProblemMode::Mssc).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pair_with_requirement_two() {
        let inst = Instance::new(2, vec![Edge::new(vec![0, 1], 2)]);
        let s = solve_relaxation(&inst, 1.0, ProblemMode::Gmssc).unwrap();
        assert!((s.objective - 1.5).abs() < 1e-9, "{}", s.objective);
        assert!(kc_separate(&inst, &s).is_empty());
    }

    #[test]
    fn triangle_relaxes_integral_optimum() {
        let inst = Instance::set_cover(3, &[&[0, 1], &[0, 2], &[1, 2]]);
        let s = solve_relaxation(&inst, 1.0, ProblemMode::Msvc).unwrap();
        assert!(s.objective <= 4.0 + 1e-9);
        assert!((weighted_lp_cost(&inst, &s, 1.0) - s.objective).abs() < 1e-9);
    }

    #[test]
    fn edge_cost_examples() {
        let sol = FractionalSolution {
            horizon: 3,
            p: 1.0,
            x: vec![],
            u: vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.5, 0.0]],
            objective: 0.0,
            round_objectives: vec![],
            cuts_added: 0,
        };
        assert_eq!(lp_edge_cost(&sol, 0, 1.0), 1.0);
        assert_eq!(lp_edge_cost(&sol, 1, 1.0), 1.5);
        assert_eq!(lp_edge_cost(&sol, 1, 2.0), 2.5);
    }

    #[test]
    fn basic_and_seed_builders_agree_on_unit_requirements() {
        let inst = Instance::set_cover(4, &[&[0, 1], &[1, 2, 3], &[3]]);
        let a = simplex_solve(&build_lp(&inst, 1.0, ConstraintMode::Basic).unwrap().program).unwrap();
        let b = simplex_solve(&build_lp(&inst, 1.0, ConstraintMode::KcSeed).unwrap().program).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-9);
    }
}
