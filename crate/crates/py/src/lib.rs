//! Python bindings. Instances cross the boundary as JSON text; reports come
//! back as plain dicts.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use coverlab_core::greedy::{build_dual_certificate, greedy_run, verify_certificate, TieBreak};
use coverlab_core::instances::{gen_random, Instance, ProblemMode, RequirementMode};
use coverlab_core::lp::solve_relaxation as core_solve;
use coverlab_core::oracles::{brute_force_opt as core_brute, gap_report as core_gap};
use coverlab_core::rounding::{run_rounding_experiment, ExperimentConfig};
use coverlab_core::tail_bounds::{self, TailVariant};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn load(instance_json: &str) -> PyResult<Instance> {
    Instance::from_json(instance_json).map_err(err)
}

/// Random hypergraph as instance JSON.
#[pyfunction]
#[pyo3(signature = (n, m, max_size, seed, req = "all-one"))]
fn generate_random(n: usize, m: usize, max_size: usize, seed: u64, req: &str) -> PyResult<String> {
    let req: RequirementMode = req.parse().map_err(err)?;
    Ok(gen_random(n, m, max_size, req, seed).map_err(err)?.to_json_pretty())
}

#[pyfunction]
fn instance_digest(instance_json: &str) -> PyResult<String> {
    Ok(load(instance_json)?.digest())
}

#[pyfunction]
#[pyo3(signature = (instance_json, mode = "mssc", p = 1.0))]
fn solve_relaxation(py: Python<'_>, instance_json: &str, mode: &str, p: f64) -> PyResult<Py<PyAny>> {
    let instance = load(instance_json)?;
    let mode: ProblemMode = mode.parse().map_err(err)?;
    let sol = py.detach(|| core_solve(&instance, p, mode)).map_err(err)?;
    to_py(py, &sol)
}

#[pyfunction]
#[pyo3(signature = (instance_json, mode = "mssc", beta = 2.0, trials = 10_000, seed = 0, p = 1.0, variant = "strong"))]
#[allow(clippy::too_many_arguments)]
fn rounding_experiment(
    py: Python<'_>,
    instance_json: &str,
    mode: &str,
    beta: f64,
    trials: u64,
    seed: u64,
    p: f64,
    variant: &str,
) -> PyResult<Py<PyAny>> {
    let instance = load(instance_json)?;
    let cfg = ExperimentConfig {
        mode: mode.parse().map_err(err)?,
        beta,
        p,
        trials,
        seed,
        variant: variant.parse().map_err(err)?,
    };
    let report = py.detach(|| run_rounding_experiment(&instance, &cfg)).map_err(err)?;
    to_py(py, &report)
}

/// Greedy ordering, its cost and whether the dual certificate checks out.
#[pyfunction]
#[pyo3(signature = (instance_json, p = 1.0, seed = None))]
fn greedy(py: Python<'_>, instance_json: &str, p: f64, seed: Option<u64>) -> PyResult<Py<PyAny>> {
    let instance = load(instance_json)?;
    let tie = seed.map_or(TieBreak::LowestId, TieBreak::SeededRandom);
    let trace = greedy_run(&instance, p, tie).map_err(err)?;
    let cert = build_dual_certificate(&instance, &trace);
    let check = verify_certificate(&cert, &instance, &trace);
    to_py(
        py,
        &serde_json::json!({
            "ordering": trace.ordering,
            "cover_times": trace.cover_times,
            "g": trace.g,
            "g_pow": trace.g_pow,
            "certificate_objective": cert.objective,
            "certificate_error": check.err().map(|e| e.to_string()),
        }),
    )
}

#[pyfunction]
#[pyo3(signature = (instance_json, p = 1.0))]
fn brute_force_opt(py: Python<'_>, instance_json: &str, p: f64) -> PyResult<Py<PyAny>> {
    let instance = load(instance_json)?;
    let res = py.detach(|| core_brute(&instance, p)).map_err(err)?;
    to_py(py, &res)
}

#[pyfunction]
#[pyo3(signature = (beta, variant = "strong"))]
fn r_beta(py: Python<'_>, beta: f64, variant: &str) -> PyResult<Py<PyAny>> {
    let variant: TailVariant = variant.parse().map_err(err)?;
    to_py(py, &tail_bounds::r_beta(beta, variant).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (variant, gamma))]
fn p_bound(variant: &str, gamma: f64) -> PyResult<f64> {
    Ok(tail_bounds::p_bound(variant.parse().map_err(err)?, gamma))
}

#[pyfunction]
fn exact_left_tail(probs: Vec<f64>, k: usize) -> f64 {
    tail_bounds::exact_left_tail(&probs, k)
}

#[pyfunction]
fn poisson_left_tail(k: usize, lambda: f64) -> f64 {
    tail_bounds::poisson_left_tail(k, lambda)
}

#[pyfunction]
fn gap_report(py: Python<'_>, big_n: usize, epsilon: f64, k: usize) -> PyResult<Py<PyAny>> {
    to_py(py, &core_gap(big_n, epsilon, k).map_err(err)?)
}

/// Runs the command-line driver in-process; returns `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> (i32, String, String) {
    let argv: Vec<String> = std::iter::once("coverlab".to_string()).chain(args).collect();
    let out = py.detach(|| coverlab_core::cli::run(argv));
    (out.code, out.stdout, out.stderr)
}

#[pymodule]
fn coverlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(generate_random, m)?)?;
    m.add_function(wrap_pyfunction!(instance_digest, m)?)?;
    m.add_function(wrap_pyfunction!(solve_relaxation, m)?)?;
    m.add_function(wrap_pyfunction!(rounding_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(greedy, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_opt, m)?)?;
    m.add_function(wrap_pyfunction!(r_beta, m)?)?;
    m.add_function(wrap_pyfunction!(p_bound, m)?)?;
    m.add_function(wrap_pyfunction!(exact_left_tail, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_left_tail, m)?)?;
    m.add_function(wrap_pyfunction!(gap_report, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
