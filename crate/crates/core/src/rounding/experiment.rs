use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::{Instance, ProblemMode};
use crate::kernels::Kernel;
use crate::lp::{lp_edge_cost, solve_relaxation, weighted_lp_cost, FractionalSolution};
use crate::rounding::analysis::{CzForm, EdgeAnalyzer};
use crate::rounding::{alpha_point_round, evaluate_schedule, finalize_schedule, tentative_cover_time, trial_rng};
use crate::stats::{Estimate, RunningStats};
use crate::tail_bounds::TailVariant;

const CHUNK: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub mode: ProblemMode,
    /// Ignored for msvc, which uses its own kernel.
    pub beta: f64,
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
    pub variant: TailVariant,
}

impl ExperimentConfig {
    pub fn new(mode: ProblemMode, beta: f64, trials: u64, seed: u64) -> Self {
        ExperimentConfig { mode, beta, p: 1.0, trials, seed, variant: TailVariant::Strong }
    }

    pub fn kernel(&self) -> Result<Kernel> {
        match self.mode {
            ProblemMode::Msvc => Ok(Kernel::Msvc),
            _ => Kernel::harmonic(self.beta),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeStats {
    pub edge: usize,
    pub c_x: f64,
    /// `None` when the analytic series could not be evaluated.
    pub c_z: Option<f64>,
    pub expected_tentative: f64,
    pub cov_sigma: Estimate,
    pub cov_tau: Estimate,
    /// `cov_σ - (4/3) cov_τ` per trial, msvc only.
    pub msvc_excess: Option<Estimate>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundingReport {
    pub digest: String,
    pub mode: ProblemMode,
    pub beta: f64,
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
    pub lp_cost: f64,
    pub mean_cost: f64,
    pub ci99: f64,
    pub ratio: f64,
    pub ratio_ci99: f64,
    pub max_cz_over_cx: f64,
    pub max_cov_sigma_over_cz: f64,
    pub per_edge: Vec<EdgeStats>,
}

#[derive(Clone)]
struct Accumulator {
    cost: RunningStats,
    sigma: Vec<RunningStats>,
    tau: Vec<RunningStats>,
    excess: Vec<RunningStats>,
}

impl Accumulator {
    fn new(m: usize) -> Self {
        Accumulator {
            cost: RunningStats::default(),
            sigma: vec![RunningStats::default(); m],
            tau: vec![RunningStats::default(); m],
            excess: vec![RunningStats::default(); m],
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        self.cost.merge(&other.cost);
        for (a, b) in self.sigma.iter_mut().zip(&other.sigma) {
            a.merge(b);
        }
        for (a, b) in self.tau.iter_mut().zip(&other.tau) {
            a.merge(b);
        }
        for (a, b) in self.excess.iter_mut().zip(&other.excess) {
            a.merge(b);
        }
    }
}

pub fn run_rounding_experiment(instance: &Instance, cfg: &ExperimentConfig) -> Result<RoundingReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let solution = solve_relaxation(instance, cfg.p, cfg.mode)?;
    run_on_solution(instance, &solution, cfg)
}

/// Same as [`run_rounding_experiment`] with a relaxation solved beforehand.
pub fn run_on_solution(
    instance: &Instance,
    solution: &FractionalSolution,
    cfg: &ExperimentConfig,
) -> Result<RoundingReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let analyzer = EdgeAnalyzer::new(instance, solution, cfg.kernel()?)?;
    let masses = analyzer.masses();
    let m = instance.m();
    let msvc = cfg.mode == ProblemMode::Msvc;
    let chunks = cfg.trials.div_ceil(CHUNK);
    let parts: Vec<Result<Accumulator>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new(m);
            for trial in c * CHUNK..((c + 1) * CHUNK).min(cfg.trials) {
                let mut rng = trial_rng(cfg.seed, trial);
                let tentative = alpha_point_round(masses, &mut rng);
                let ordering = finalize_schedule(&tentative, &mut rng);
                let cost = evaluate_schedule(&ordering, instance, cfg.p)?;
                acc.cost.push(cost.total);
                for (e, edge) in instance.edges.iter().enumerate() {
                    let tau = tentative_cover_time(&tentative, edge)
                        .ok_or_else(|| Error::Numerical(format!("edge {e} never covered by the tentative schedule")))?
                        as f64;
                    let sigma = cost.cover_times[e] as f64;
                    acc.sigma[e].push(sigma);
                    acc.tau[e].push(tau);
                    if msvc {
                        acc.excess[e].push(sigma - 4.0 / 3.0 * tau);
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = Accumulator::new(m);
    for part in parts {
        total.merge(&part?);
    }

    let form = CzForm::for_mode(cfg.mode, cfg.variant);
    let mut per_edge = Vec::with_capacity(m);
    let mut max_cz_over_cx = 0.0f64;
    let mut max_sigma_over_cz = 0.0f64;
    for e in 0..m {
        let c_x = lp_edge_cost(solution, e, 1.0);
        let c_z = analyzer.analyze(e, form).ok().map(|a| a.c_z);
        if let Some(cz) = c_z {
            max_cz_over_cx = max_cz_over_cx.max(cz / c_x);
            max_sigma_over_cz = max_sigma_over_cz.max(total.sigma[e].mean / cz);
        }
        per_edge.push(EdgeStats {
            edge: e,
            c_x,
            c_z,
            expected_tentative: analyzer.expected_tentative(e),
            cov_sigma: total.sigma[e].estimate(),
            cov_tau: total.tau[e].estimate(),
            msvc_excess: msvc.then(|| total.excess[e].estimate()),
        });
    }
    let lp_cost = weighted_lp_cost(instance, solution, cfg.p);
    let ci99 = total.cost.ci99();
    Ok(RoundingReport {
        digest: instance.digest(),
        mode: cfg.mode,
        beta: cfg.beta,
        p: cfg.p,
        trials: cfg.trials,
        seed: cfg.seed,
        lp_cost,
        mean_cost: total.cost.mean,
        ci99,
        ratio: total.cost.mean / lp_cost,
        ratio_ci99: ci99 / lp_cost,
        max_cz_over_cx,
        max_cov_sigma_over_cz: max_sigma_over_cz,
        per_edge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_random, RequirementMode};

    #[test]
    fn single_vertex_is_exact() {
        let inst = Instance::set_cover(1, &[&[0]]);
        let r = run_rounding_experiment(&inst, &ExperimentConfig::new(ProblemMode::Mssc, 2.0, 100, 3)).unwrap();
        assert_eq!(r.mean_cost, 1.0);
        assert!((r.lp_cost - 1.0).abs() < 1e-9);
    }

    #[test]
    fn triangle_msvc_within_sixteen_ninths() {
        let tri = Instance::set_cover(3, &[&[0, 1], &[0, 2], &[1, 2]]);
        let r = run_rounding_experiment(&tri, &ExperimentConfig::new(ProblemMode::Msvc, 1.0, 100_000, 5)).unwrap();
        assert!(r.ratio <= 16.0 / 9.0 + 3.0 * r.ratio_ci99, "{}", r.ratio);
        for e in &r.per_edge {
            let ex = e.msvc_excess.unwrap();
            assert!(ex.mean <= 3.0 * ex.ci99 + 1e-12);
            assert!((e.cov_tau.mean - e.expected_tentative).abs() <= 3.0 * e.cov_tau.ci99 + 1e-12);
        }
    }

    #[test]
    fn random_mssc_within_four() {
        let inst = gen_random(6, 6, 3, RequirementMode::AllOne, 17).unwrap();
        let cfg = ExperimentConfig::new(ProblemMode::Mssc, 2.0, 20_000, 9);
        let r = run_rounding_experiment(&inst, &cfg).unwrap();
        assert!(r.ratio <= 4.0 + 3.0 * r.ratio_ci99);
        for e in &r.per_edge {
            let cz = e.c_z.unwrap();
            assert!(e.cov_sigma.mean <= 2.0 * cz + 3.0 * e.cov_sigma.ci99);
            assert!((e.cov_tau.mean - e.expected_tentative).abs() <= 3.0 * e.cov_tau.ci99 + 1e-12);
        }
        let again = run_rounding_experiment(&inst, &cfg).unwrap();
        assert_eq!(r.mean_cost, again.mean_cost);
    }
}
