//! Command-line driver. Every subcommand emits one report on stdout; diagnostics
//! go to stderr.

use std::path::PathBuf;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::greedy::{build_dual_certificate, greedy_run, verify_certificate, TieBreak};
use crate::instances::{
    gen_complete_uniform, gen_msvc_gap, gen_random, gen_random_graph, gen_scaled_copies, Instance, ProblemMode,
    RequirementMode,
};
use crate::lp::{solve_relaxation, weighted_lp_cost};
use crate::oracles::{block_closed_form, gap_sweep, preemptive_cost, uniform_block_schedule};
use crate::rounding::{run_rounding_experiment, ExperimentConfig};
use crate::tail_bounds::{minimize_ratio, r_beta, verify_analysis_grids, GridConfig, TailVariant};
use crate::verify::{run_all, VerifyConfig, GMSSC_BETA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "coverlab", version, about = "Min sum set cover experiments")]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads; 1 gives bit-for-bit reproducible runs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an instance.
    Gen(GenArgs),
    /// Solve the LP relaxation.
    Solve(SolveArgs),
    /// Monte-Carlo rounding experiment.
    Round(RoundArgs),
    /// Greedy ordering plus dual certificate.
    Greedy(GreedyArgs),
    /// Tail-bound constants and grid checks.
    Tail(TailArgs),
    /// Integrality-gap sweep over clique families.
    Gap(GapArgs),
    /// Block schedule on scaled copies.
    Preempt(PreemptArgs),
    /// Full acceptance suite on the built-in corpus.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Random,
    Graph,
    Complete,
    Gap,
    Scaled,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = Family::Random)]
    pub family: Family,
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, default_value_t = 6)]
    pub m: usize,
    #[arg(long, default_value_t = 3)]
    pub max_size: usize,
    /// all-one, all-size, all-but-one or uniform.
    #[arg(long, default_value = "all-one")]
    pub req: RequirementMode,
    /// Edge size for complete uniform hypergraphs.
    #[arg(long, default_value_t = 2)]
    pub size: usize,
    #[arg(long, default_value_t = 1000)]
    pub big_n: usize,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    /// Number of cliques or scaled copies.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 2.0)]
    pub exponent: f64,
    /// Base instance for scaled copies; complete uniform on `--n`, `--size` otherwise.
    #[arg(long)]
    pub base: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the instance here instead of embedding it in the report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value = "mssc")]
    pub mode: ProblemMode,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Print every nonzero variable to stderr.
    #[arg(long)]
    pub dump_lp: bool,
}

#[derive(Args, Debug)]
pub struct RoundArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value = "mssc")]
    pub mode: ProblemMode,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "strong")]
    pub variant: TailVariant,
}

#[derive(Args, Debug)]
pub struct GreedyArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Break ties at random with this seed instead of by lowest id.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the certificate as text to this path.
    #[arg(long)]
    pub certificate: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TailArgs {
    /// Evaluate r at this beta; the variant's minimizer is reported as well.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value = "strong")]
    pub variant: TailVariant,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct GapArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub big_n: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.02])]
    pub epsilon: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 50, 100, 200, 500, 1000])]
    pub k: Vec<usize>,
}

#[derive(Args, Debug)]
pub struct PreemptArgs {
    /// Base instance; complete uniform on `--n`, `--size` otherwise.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub size: usize,
    #[arg(long, default_value_t = 3)]
    pub copies: usize,
    #[arg(long, default_value_t = 2.0)]
    pub exponent: f64,
    /// Vertices per block; `n / size` by default.
    #[arg(long)]
    pub r: Option<usize>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Smaller corpus and trial counts, same thresholds.
    #[arg(long)]
    pub quick: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub command: Vec<String>,
    pub subcommand: &'static str,
    pub version: &'static str,
    pub digest: Option<String>,
    pub seed: Option<u64>,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub result: Value,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliOutcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// What a subcommand hands back before the report is wrapped.
struct Produced {
    digest: Option<String>,
    seed: Option<u64>,
    result: Value,
    failure: Option<String>,
    notes: String,
}

impl Produced {
    fn new(result: Value) -> Self {
        Produced { digest: None, seed: None, result, failure: None, notes: String::new() }
    }
}

pub fn run<I, T>(argv: I) -> CliOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    CliOutcome { code: EXIT_OK, stdout: text, stderr: String::new() }
                }
                _ => CliOutcome { code: EXIT_USAGE, stdout: String::new(), stderr: text },
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => return usage(format!("thread pool: {e}")),
    };
    let start = Instant::now();
    let produced = match pool.install(|| dispatch(&cli.command)) {
        Ok(p) => p,
        Err(e) => return usage(format!("error: {e}\n")),
    };
    let report = ExperimentReport {
        command: argv.iter().skip(1).cloned().collect(),
        subcommand: name(&cli.command),
        version: env!("CARGO_PKG_VERSION"),
        digest: produced.digest,
        seed: produced.seed,
        threads: pool.current_num_threads(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        result: produced.result,
    };
    let stdout = match render(&report, cli.format) {
        Ok(s) => s,
        Err(e) => return usage(format!("error: {e}\n")),
    };
    let mut stderr = produced.notes;
    let code = match produced.failure {
        Some(w) => {
            stderr.push_str(&format!("verification failed: {w}\n"));
            EXIT_VERIFY_FAILED
        }
        None => EXIT_OK,
    };
    CliOutcome { code, stdout, stderr }
}

fn usage(stderr: String) -> CliOutcome {
    CliOutcome { code: EXIT_USAGE, stdout: String::new(), stderr }
}

fn name(c: &Command) -> &'static str {
    match c {
        Command::Gen(_) => "gen",
        Command::Solve(_) => "solve",
        Command::Round(_) => "round",
        Command::Greedy(_) => "greedy",
        Command::Tail(_) => "tail",
        Command::Gap(_) => "gap",
        Command::Preempt(_) => "preempt",
        Command::Verify(_) => "verify",
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn dispatch(c: &Command) -> Result<Produced> {
    match c {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Round(a) => cmd_round(a),
        Command::Greedy(a) => cmd_greedy(a),
        Command::Tail(a) => cmd_tail(a),
        Command::Gap(a) => cmd_gap(a),
        Command::Preempt(a) => cmd_preempt(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn cmd_gen(a: &GenArgs) -> Result<Produced> {
    let mut meta = serde_json::Map::new();
    let instance = match a.family {
        Family::Random => gen_random(a.n, a.m, a.max_size, a.req, a.seed)?,
        Family::Graph => gen_random_graph(a.n, a.m, a.seed)?,
        Family::Complete => gen_complete_uniform(a.n, a.size)?,
        Family::Gap => {
            let fam = gen_msvc_gap(a.big_n, a.epsilon, a.k)?;
            meta.insert("sizes".into(), json!(fam.sizes));
            meta.insert("offsets".into(), json!(fam.offsets));
            fam.instance
        }
        Family::Scaled => {
            let base = match &a.base {
                Some(path) => Instance::load(path)?,
                None => gen_complete_uniform(a.n, a.size)?,
            };
            let sc = gen_scaled_copies(&base, a.k, a.exponent)?;
            meta.insert("a".into(), json!(sc.a));
            meta.insert("factors".into(), json!(sc.factors));
            sc.instance
        }
    };
    let mut result = json!({
        "n": instance.n,
        "m": instance.m(),
        "max_requirement": instance.max_requirement(),
    });
    result["metadata"] = Value::Object(meta);
    match &a.out {
        Some(path) => {
            instance.save(path)?;
            result["path"] = json!(path.display().to_string());
        }
        None => result["instance"] = to_value(&instance)?,
    }
    let mut p = Produced::new(result);
    p.digest = Some(instance.digest());
    p.seed = matches!(a.family, Family::Random | Family::Graph).then_some(a.seed);
    Ok(p)
}

fn cmd_solve(a: &SolveArgs) -> Result<Produced> {
    let instance = Instance::load(&a.instance)?;
    let sol = solve_relaxation(&instance, a.p, a.mode)?;
    let mut result = to_value(&sol)?;
    result["mode"] = json!(a.mode);
    result["weighted_cost"] = json!(weighted_lp_cost(&instance, &sol, a.p));
    let mut p = Produced::new(result);
    if a.dump_lp {
        for (v, row) in sol.x.iter().enumerate() {
            for (t, val) in row.iter().enumerate().filter(|(_, v)| **v != 0.0) {
                p.notes.push_str(&format!("x[{v},{}] = {val}\n", t + 1));
            }
        }
        for (e, row) in sol.u.iter().enumerate() {
            for (t, val) in row.iter().enumerate().filter(|(_, v)| **v != 0.0) {
                p.notes.push_str(&format!("u[{e},{}] = {val}\n", t + 1));
            }
        }
    }
    p.digest = Some(instance.digest());
    Ok(p)
}

fn cmd_round(a: &RoundArgs) -> Result<Produced> {
    let instance = Instance::load(&a.instance)?;
    let cfg = ExperimentConfig { mode: a.mode, beta: a.beta, p: a.p, trials: a.trials, seed: a.seed, variant: a.variant };
    let report = run_rounding_experiment(&instance, &cfg)?;
    let mut p = Produced::new(to_value(&report)?);
    p.digest = Some(report.digest);
    p.seed = Some(a.seed);
    Ok(p)
}

fn cmd_greedy(a: &GreedyArgs) -> Result<Produced> {
    let instance = Instance::load(&a.instance)?;
    let tie = a.seed.map_or(TieBreak::LowestId, TieBreak::SeededRandom);
    let trace = greedy_run(&instance, a.p, tie)?;
    let cert = build_dual_certificate(&instance, &trace);
    let check = verify_certificate(&cert, &instance, &trace);
    if let Some(path) = &a.certificate {
        std::fs::write(path, cert.to_text())?;
    }
    let mut p = Produced::new(json!({
        "p": a.p,
        "tie_break": tie,
        "g": trace.g,
        "g_pow": trace.g_pow,
        "ordering": trace.ordering,
        "cover_times": trace.cover_times,
        "certificate_objective": cert.objective,
        "certificate_lower_bound": trace.g_pow / (a.p + 1.0),
        "certificate_feasible": check.is_ok(),
        "alpha": cert.alpha,
    }));
    p.failure = check.err().map(|e| e.to_string());
    p.digest = Some(instance.digest());
    p.seed = a.seed;
    Ok(p)
}

fn cmd_tail(a: &TailArgs) -> Result<Produced> {
    let constants = [
        r_beta(2.191, TailVariant::Weak)?,
        r_beta(GMSSC_BETA, TailVariant::Strong)?,
        minimize_ratio(TailVariant::Conjectured { c: 13.3 }, 1.2, 6.0)?,
    ];
    let requested = a.beta.map(|b| r_beta(b, a.variant)).transpose()?;
    let best = minimize_ratio(a.variant, 1.2, 6.0)?;
    let grids = verify_analysis_grids(&GridConfig { seed: a.seed, ..GridConfig::default() });
    let failure = grids
        .checks
        .iter()
        .find(|c| c.gated && !c.passed)
        .map(|c| format!("{}: {}", c.name, c.witness.as_deref().unwrap_or("no witness")));
    let mut p = Produced::new(json!({
        "passed": grids.passed,
        "variant": a.variant.to_string(),
        "best_beta": best.beta,
        "best_ratio": best.ratio,
        "requested": requested,
        "constants": constants,
        "grids": grids.checks,
    }));
    p.failure = failure;
    p.seed = Some(a.seed);
    Ok(p)
}

fn cmd_gap(a: &GapArgs) -> Result<Produced> {
    let sweep = gap_sweep(a.big_n, &a.epsilon, &a.k)?;
    Ok(Produced::new(to_value(&sweep)?))
}

fn cmd_preempt(a: &PreemptArgs) -> Result<Produced> {
    let base = match &a.instance {
        Some(path) => Instance::load(path)?,
        None => gen_complete_uniform(a.n, a.size)?,
    };
    let r = match a.r {
        Some(r) => r,
        None if a.size > 0 && a.n.is_multiple_of(a.size) => a.n / a.size,
        None => return Err(Error::InvalidArgument("pass --r when size does not divide n".into())),
    };
    let copies = gen_scaled_copies(&base, a.copies, a.exponent)?;
    let block = uniform_block_schedule(&copies, r)?;
    let cost = preemptive_cost(&block.schedule, &copies.instance)?;
    let closed = block_closed_form(&copies, r);
    let greedy = greedy_run(&copies.instance, 1.0, TieBreak::LowestId)?;
    let mut p = Produced::new(json!({
        "r": r,
        "copies": a.copies,
        "exponent": a.exponent,
        "a": copies.a,
        "preemptive_cost": cost.total,
        "closed_form": closed,
        "difference": cost.total - closed,
        "greedy_cost": greedy.g_pow,
        "greedy_over_preemptive": greedy.g_pow / cost.total,
        "warning": block.warning,
    }));
    if (cost.total - closed).abs() > 1e-9 * closed.abs().max(1.0) {
        p.failure = Some(format!("block cost {} differs from closed form {}", cost.total, closed));
    }
    if let Some(w) = &block.warning {
        p.notes.push_str(&format!("warning: {w}\n"));
    }
    p.digest = Some(copies.instance.digest());
    Ok(p)
}

fn cmd_verify(a: &VerifyArgs) -> Result<Produced> {
    let cfg = if a.quick { VerifyConfig::quick(a.seed) } else { VerifyConfig { seed: a.seed, ..VerifyConfig::default() } };
    let report = run_all(&cfg)?;
    let mut p = Produced::new(to_value(&report)?);
    for o in &report.outcomes {
        p.notes.push_str(&o.line());
        p.notes.push('\n');
    }
    p.failure = report
        .outcomes
        .iter()
        .find(|o| !o.passed)
        .map(|o| format!("criterion {}: {}", o.id, o.witness.as_deref().unwrap_or(&o.summary)));
    p.seed = Some(a.seed);
    Ok(p)
}

fn render(report: &ExperimentReport, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        Format::Csv => {
            let mut header = Vec::new();
            let mut row = Vec::new();
            let top = to_value(report)?;
            for (k, v) in top.as_object().into_iter().flatten() {
                if k == "result" {
                    for (rk, rv) in v.as_object().into_iter().flatten() {
                        if let Some(s) = scalar(rv) {
                            header.push(format!("result.{rk}"));
                            row.push(s);
                        }
                    }
                } else if let Some(s) = scalar(v) {
                    header.push(k.clone());
                    row.push(s);
                }
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header).map_err(csv_err)?;
            w.write_record(&row).map_err(csv_err)?;
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            String::from_utf8(bytes).map_err(|e| Error::Numerical(e.to_string()))
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some(String::new()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["coverlab", "bogus"]).code, EXIT_USAGE);
        assert_eq!(run(["coverlab", "round", "--mode", "mssc"]).code, EXIT_USAGE);
        assert_eq!(run(["coverlab", "round", "--instance", "/nonexistent/x.json"]).code, EXIT_USAGE);
        assert_eq!(run(["coverlab", "tail", "--variant", "medium"]).code, EXIT_USAGE);
    }

    #[test]
    fn gap_csv_has_scalars_only() {
        let out = run(["coverlab", "--format", "csv", "gap", "--big-n", "1000", "--k", "3,4"]);
        assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
        let mut lines = out.stdout.lines();
        let header = lines.next().unwrap();
        assert!(header.contains("result.best_ratio"));
        assert!(!header.contains("reports"));
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn preempt_matches_closed_form() {
        let out = run(["coverlab", "--threads", "1", "preempt", "--n", "6", "--size", "3", "--copies", "3"]);
        assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
        let v: Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v["subcommand"], "preempt");
        assert!(v["result"]["difference"].as_f64().unwrap().abs() < 1e-9);
    }
}
