//! Per-edge analytic quantities: the uncovered-probability sequence, the
//! bound `c_z(e)` on the tentative cover time, and the exact expectation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::{Instance, ProblemMode};
use crate::kernels::{harmonic, transform, Kernel, KernelizedMass, EULER_GAMMA};
use crate::lp::{lp_edge_cost, FractionalSolution};
use crate::rounding::edge_uncovered_prob;
use crate::tail_bounds::{p_bound, TailVariant};

/// Which probability sequence `c_z` sums.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum CzForm {
    /// `exp(-Σ_{v∈e} z_{v,<t})`.
    Mssc,
    /// `1` up to `t_e` (all vertices of `e` surely placed), then `0`.
    MinLatency,
    /// `P(z_{e,<t})` with `z_e = K x_e`.
    Gmssc(TailVariant),
    /// `(1 - z_{e,<t}/2)_+^2` with `z_e = K x_e`.
    Msvc,
}

impl CzForm {
    pub fn for_mode(mode: ProblemMode, variant: TailVariant) -> CzForm {
        match mode {
            ProblemMode::Mssc => CzForm::Mssc,
            ProblemMode::Msvc => CzForm::Msvc,
            ProblemMode::MinLatency => CzForm::MinLatency,
            ProblemMode::Gmssc => CzForm::Gmssc(variant),
        }
    }
}

/// Terms of the sequence kept in a report.
pub const P_SEQ_CAP: usize = 2048;
const SERIES_CAP: u64 = 20_000_000;
const SERIES_TOL: f64 = 1e-11;

#[derive(Clone, Debug, Serialize)]
pub struct EdgeAnalysis {
    pub edge: usize,
    pub form: CzForm,
    pub c_x: f64,
    pub t_e: Option<u64>,
    /// Best estimate of the full series.
    pub c_z: f64,
    /// Rigorous upper bound on the full series.
    pub c_z_upper: f64,
    pub truncation_error: f64,
    /// Leading terms of the summed sequence, at most `P_SEQ_CAP` of them.
    pub p_seq: Vec<f64>,
    /// Exact `E[cov_τ(e)] = Σ_t Pr[e uncovered at t]`.
    pub expected_tentative: f64,
    pub residual_at_horizon: f64,
}

struct Series {
    partial: f64,
    terms: Vec<f64>,
}

impl Series {
    fn new() -> Self {
        Series { partial: 0.0, terms: Vec::new() }
    }

    fn push(&mut self, v: f64) {
        self.partial += v;
        if self.terms.len() < P_SEQ_CAP {
            self.terms.push(v);
        }
    }
}

/// Bounds on `Σ_{n ≥ n0} K n^{-q} e^{-q/(2n)·s}` for the harmonic tails,
/// where the upper constant drops the correction and the lower keeps it.
fn power_tail(k_hi: f64, k_lo: f64, q: f64, n0: u64) -> (f64, f64) {
    let n = n0 as f64;
    let hi = k_hi * (n - 1.0).powf(1.0 - q) / (q - 1.0);
    let lo = k_lo * (-q / (2.0 * n)).exp() * n.powf(1.0 - q) / (q - 1.0);
    (lo, hi)
}

pub struct EdgeAnalyzer<'a> {
    instance: &'a Instance,
    solution: &'a FractionalSolution,
    kernel: Kernel,
    masses: Vec<KernelizedMass>,
}

impl<'a> EdgeAnalyzer<'a> {
    pub fn new(instance: &'a Instance, solution: &'a FractionalSolution, kernel: Kernel) -> Result<Self> {
        if solution.x.len() != instance.n || solution.u.len() != instance.m() {
            return Err(Error::InvalidArgument("solution does not match instance".into()));
        }
        let masses = solution
            .x
            .iter()
            .map(|col| transform(kernel, col))
            .collect::<Result<Vec<_>>>()?;
        Ok(EdgeAnalyzer { instance, solution, kernel, masses })
    }

    pub fn masses(&self) -> &[KernelizedMass] {
        &self.masses
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    fn harmonic_beta(&self) -> Result<f64> {
        match self.kernel {
            Kernel::Harmonic { beta } => Ok(beta),
            Kernel::Msvc => Err(Error::InvalidArgument("form needs the harmonic kernel".into())),
        }
    }

    /// `z_e = K x_e` from the residual telescope.
    pub fn edge_mass(&self, e: usize) -> Result<KernelizedMass> {
        transform(self.kernel, &self.solution.edge_completion(e)?)
    }

    pub fn analyze(&self, e: usize, form: CzForm) -> Result<EdgeAnalysis> {
        let (t_e, series, lo, hi) = match form {
            CzForm::Mssc => self.mssc(e)?,
            CzForm::MinLatency => self.latency(e)?,
            CzForm::Gmssc(variant) => self.gmssc(e, variant)?,
            CzForm::Msvc => self.msvc(e)?,
        };
        Ok(EdgeAnalysis {
            edge: e,
            form,
            c_x: lp_edge_cost(self.solution, e, 1.0),
            t_e,
            c_z: series.partial + 0.5 * (lo + hi),
            c_z_upper: series.partial + hi,
            truncation_error: 0.5 * (hi - lo),
            p_seq: series.terms,
            expected_tentative: self.expected_tentative(e),
            residual_at_horizon: self.solution.residual_at_horizon(e),
        })
    }

    fn mssc(&self, e: usize) -> Result<(Option<u64>, Series, f64, f64)> {
        let beta = self.harmonic_beta()?;
        let edge = &self.instance.edges[e];
        let horizon = self.solution.horizon as u64;
        let mut s = Series::new();
        for t in 1..=horizon {
            let w: f64 = edge.vertices.iter().map(|&v| self.masses[v].strict_prefix(t)).sum();
            s.push((-w).exp());
        }
        let total: f64 = edge.vertices.iter().map(|&v| self.masses[v].total_mass()).sum();
        let moment: f64 = edge.vertices.iter().map(|&v| self.masses[v].moment()).sum();
        let q = beta * total;
        if !(q > 1.0) {
            return Err(Error::Numerical(format!("series for edge {e} does not converge (q = {q})")));
        }
        let k0 = (beta * moment - q * EULER_GAMMA).exp();
        let (lo, hi) = self.harmonic_tail(&mut s, horizon, q, |n_h| (-(q * n_h - beta * moment)).exp(), |_| (k0, k0));
        Ok((None, s, lo, hi))
    }

    fn gmssc(&self, e: usize, variant: TailVariant) -> Result<(Option<u64>, Series, f64, f64)> {
        let beta = self.harmonic_beta()?;
        let z = self.edge_mass(e)?;
        let t_e = z
            .first_reaching(1.0)
            .ok_or_else(|| Error::Numerical(format!("edge {e} never reaches unit kernel mass")))?;
        let horizon = self.solution.horizon as u64;
        let mut s = Series::new();
        for t in 1..=horizon {
            s.push(p_bound(variant, z.strict_prefix(t)));
        }
        let total = z.total_mass();
        let moment = z.moment();
        let q = beta * total;
        if !(q > 1.0) {
            return Err(Error::Numerical(format!("series for edge {e} does not converge (q = {q})")));
        }
        let base = (beta * moment - q * EULER_GAMMA).exp();
        let (lo, hi) = self.harmonic_tail(
            &mut s,
            horizon,
            q,
            |n_h| p_bound(variant, q * n_h - beta * moment),
            |h| {
                let gamma_lo = q * h - beta * moment;
                if gamma_lo >= 1.0 {
                    (base * variant.envelope_upper(gamma_lo), base * variant.envelope_lower())
                } else {
                    (f64::INFINITY, 0.0)
                }
            },
        );
        Ok((Some(t_e), s, lo, hi))
    }

    /// Sums terms for `n = t - 1 ≥ horizon` (closed form in `H_n`) until the
    /// power-law remainder is negligible. `term(H_n)` evaluates one term;
    /// `consts(H_n0)` gives the remainder constants for all `n ≥ n0`.
    fn harmonic_tail(
        &self,
        s: &mut Series,
        horizon: u64,
        q: f64,
        term: impl Fn(f64) -> f64,
        consts: impl Fn(f64) -> (f64, f64),
    ) -> (f64, f64) {
        let mut n = horizon;
        let mut h = harmonic(n);
        loop {
            s.push(term(h));
            n += 1;
            h += 1.0 / n as f64;
            if n.is_multiple_of(32) || n >= SERIES_CAP {
                let (k_hi, k_lo) = consts(h);
                let (lo, hi) = power_tail(k_hi, k_lo, q, n);
                if hi.is_finite() && (0.5 * (hi - lo) <= SERIES_TOL || hi <= 1e-14) {
                    return (lo.min(hi), hi);
                }
                if n >= SERIES_CAP {
                    return (lo.min(hi), hi);
                }
            }
        }
    }

    fn msvc(&self, e: usize) -> Result<(Option<u64>, Series, f64, f64)> {
        if self.kernel != Kernel::Msvc {
            return Err(Error::InvalidArgument("form needs the msvc kernel".into()));
        }
        let z = self.edge_mass(e)?;
        let horizon = self.solution.horizon as u64;
        let mut s = Series::new();
        let term = |w: f64| {
            let r = (1.0 - w / 2.0).max(0.0);
            r * r
        };
        for t in 1..=horizon + 1 {
            s.push(term(z.strict_prefix(t)));
        }
        let total = z.total_mass();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Numerical(format!("edge {e} completes mass {total}, expected 1")));
        }
        let d = z.moment();
        let mut t = horizon + 2;
        loop {
            let tf = t as f64;
            let r = d / (tf * (tf + 1.0));
            s.push(r * r);
            t += 1;
            let tf = t as f64;
            let hi = d * d / (3.0 * (tf - 1.0).powi(3));
            let lo = d * d / (3.0 * (tf + 1.0).powi(3));
            if 0.5 * (hi - lo) <= SERIES_TOL || t >= SERIES_CAP {
                return Ok((None, s, lo, hi));
            }
        }
    }

    fn latency(&self, e: usize) -> Result<(Option<u64>, Series, f64, f64)> {
        let edge = &self.instance.edges[e];
        let mut t_e = 0;
        for &v in &edge.vertices {
            let t = self.masses[v].first_reaching(1.0).ok_or_else(|| {
                Error::Numerical(format!("vertex {v} never reaches unit kernel mass"))
            })?;
            t_e = t_e.max(t);
        }
        let mut s = Series::new();
        for _ in 0..t_e {
            s.push(1.0);
        }
        Ok((Some(t_e), s, 0.0, 0.0))
    }

    /// `Σ_t Pr[e uncovered at t]`; infinite if fewer than `k_e` vertices
    /// ever reach unit mass.
    pub fn expected_tentative(&self, e: usize) -> f64 {
        let edge = &self.instance.edges[e];
        let mut reach: Vec<u64> = edge
            .vertices
            .iter()
            .map(|&v| self.masses[v].first_reaching(1.0).unwrap_or(u64::MAX))
            .collect();
        reach.sort_unstable();
        let stop = reach[edge.k - 1];
        if stop == u64::MAX {
            return f64::INFINITY;
        }
        (1..=stop).map(|t| edge_uncovered_prob(&self.masses, edge, t)).sum()
    }

    /// Smallest slack of the partial-sum conditioning inequality over the
    /// first `upto` slots, for the exponential or squared-linear profile.
    pub fn conditioning_margin(&self, e: usize, form: CzForm, upto: u64) -> Result<f64> {
        let z = self.edge_mass(e)?;
        let (p, integral): (Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>) = match form {
            CzForm::Mssc => (Box::new(|w: f64| (-w).exp()), Box::new(|w: f64| 2.0 * (1.0 - (-w).exp()))),
            CzForm::Msvc => (
                Box::new(|w: f64| {
                    let r = (1.0 - w / 2.0).max(0.0);
                    r * r
                }),
                Box::new(|w: f64| {
                    let r = (1.0 - w.min(2.0) / 2.0).max(0.0);
                    4.0 / 3.0 * (1.0 - r * r * r)
                }),
            ),
            _ => return Err(Error::InvalidArgument("conditioning applies to mssc and msvc forms".into())),
        };
        let mut partial = 0.0;
        let mut worst = f64::INFINITY;
        for t in 1..=upto {
            let lo = z.strict_prefix(t);
            let hi = z.strict_prefix(t + 1);
            partial += (hi - lo) * (p(lo) + p(hi));
            worst = worst.min(partial - integral(hi));
        }
        Ok(worst)
    }

    /// Smallest slack of `Σ_{v∈B_e(t)} z_{v,<t} ≥ k_e(t) z_{e,<t}` over `t ≤ upto`.
    pub fn kc_consequence_margin(&self, e: usize, upto: u64) -> Result<f64> {
        let edge = &self.instance.edges[e];
        let z = self.edge_mass(e)?;
        let mut worst = f64::INFINITY;
        for t in 1..=upto {
            let mut lower = 0.0;
            let mut surely = 0;
            for &v in &edge.vertices {
                let w = self.masses[v].strict_prefix(t);
                if w >= 1.0 {
                    surely += 1;
                } else {
                    lower += w;
                }
            }
            if surely >= edge.k {
                continue;
            }
            let need = (edge.k - surely) as f64 * z.strict_prefix(t);
            worst = worst.min(lower - need);
        }
        Ok(worst)
    }
}

pub fn c_z_edge(
    solution: &FractionalSolution,
    instance: &Instance,
    e: usize,
    mode: ProblemMode,
    kernel: Kernel,
    variant: TailVariant,
) -> Result<EdgeAnalysis> {
    if e >= instance.m() {
        return Err(Error::InvalidArgument(format!("edge {e} out of range")));
    }
    EdgeAnalyzer::new(instance, solution, kernel)?.analyze(e, CzForm::for_mode(mode, variant))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::Edge;
    use crate::lp::solve_relaxation;

    fn manual(x: Vec<Vec<f64>>, u: Vec<Vec<f64>>) -> FractionalSolution {
        FractionalSolution {
            horizon: x[0].len(),
            p: 1.0,
            x,
            u,
            objective: 0.0,
            round_objectives: vec![],
            cuts_added: 0,
        }
    }

    #[test]
    fn mssc_single_vertex_constant() {
        let inst = Instance::set_cover(1, &[&[0]]);
        let sol = manual(vec![vec![1.0]], vec![vec![1.0]]);
        let a = c_z_edge(&sol, &inst, 0, ProblemMode::Mssc, Kernel::Harmonic { beta: 2.0 }, TailVariant::Strong)
            .unwrap();
        assert!(a.truncation_error < 1e-10, "{}", a.truncation_error);
        assert!(a.c_z > 1.0 && a.c_z <= 2.0 * a.c_x);
        assert!((a.c_z - 1.288_959_429_554_9).abs() < 1e-9, "{}", a.c_z);
        assert!(a.c_z_upper >= a.c_z);
        assert!(a.p_seq.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn latency_first_reaching() {
        // harmonic β=1 on a = (0.25, 0.75): z_{≤t} = H_t - 0.75, first ≥ 1 at t = 3
        let inst = Instance::set_cover(2, &[&[0]]);
        let sol = manual(vec![vec![0.25, 0.75], vec![0.75, 0.25]], vec![vec![1.0, 0.75]]);
        let a = c_z_edge(&sol, &inst, 0, ProblemMode::MinLatency, Kernel::Harmonic { beta: 1.0 }, TailVariant::Weak)
            .unwrap();
        assert_eq!(a.t_e, Some(3));
        assert_eq!(a.c_z, 3.0);
    }

    #[test]
    fn msvc_terms_vanish_at_two() {
        let inst = Instance::set_cover(2, &[&[0, 1]]);
        let sol = manual(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![1.0, 0.0]]);
        let an = EdgeAnalyzer::new(&inst, &sol, Kernel::Msvc).unwrap();
        let a = an.analyze(0, CzForm::Msvc).unwrap();
        let z = an.edge_mass(0).unwrap();
        for (i, &p) in a.p_seq.iter().enumerate() {
            if z.strict_prefix(i as u64 + 1) >= 2.0 {
                assert_eq!(p, 0.0);
            }
        }
        assert!(a.p_seq.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(a.c_z <= 4.0 / 3.0 * a.c_x + 1e-9, "{} {}", a.c_z, a.c_x);
    }

    #[test]
    fn per_edge_bounds_on_triangle() {
        let tri = Instance::set_cover(3, &[&[0, 1], &[0, 2], &[1, 2]]);
        let sol = solve_relaxation(&tri, 1.0, ProblemMode::Mssc).unwrap();
        for beta in [1.5, 2.0, 3.0] {
            let an = EdgeAnalyzer::new(&tri, &sol, Kernel::Harmonic { beta }).unwrap();
            for e in 0..3 {
                let a = an.analyze(e, CzForm::Mssc).unwrap();
                assert!(a.c_z_upper <= beta / (beta - 1.0) * a.c_x + 1e-6);
                assert!(a.expected_tentative <= a.c_z + 1e-9);
                assert!(an.conditioning_margin(e, CzForm::Mssc, 40).unwrap() >= -1e-9);
            }
        }
        let an = EdgeAnalyzer::new(&tri, &sol, Kernel::Msvc).unwrap();
        for e in 0..3 {
            let a = an.analyze(e, CzForm::Msvc).unwrap();
            assert!(a.c_z_upper <= 4.0 / 3.0 * a.c_x + 1e-6);
            assert!(an.conditioning_margin(e, CzForm::Msvc, 40).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn gmssc_on_requirement_two() {
        let inst = Instance::new(4, vec![Edge::new(vec![0, 1, 2], 2), Edge::new(vec![1, 2, 3], 1)]);
        let sol = solve_relaxation(&inst, 1.0, ProblemMode::Gmssc).unwrap();
        let beta = 2.0;
        let an = EdgeAnalyzer::new(&inst, &sol, Kernel::Harmonic { beta }).unwrap();
        for e in 0..2 {
            let a = an.analyze(e, CzForm::Gmssc(TailVariant::Strong)).unwrap();
            assert!(a.t_e.is_some());
            assert!(a.truncation_error < 1e-9);
            assert!(an.kc_consequence_margin(e, 20).unwrap() >= -1e-6);
            assert!(a.expected_tentative.is_finite());
        }
    }
}
