//! The acceptance suite: nine numbered checks over a seeded corpus of small
//! instances and the structured families.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::greedy::{build_dual_certificate, greedy_run, verify_certificate, TieBreak};
use crate::instances::{
    gen_complete_uniform, gen_msvc_gap, gen_random, gen_random_graph, gen_scaled_copies, Edge, Instance,
    ProblemMode, RequirementMode,
};
use crate::kernels::Kernel;
use crate::lp::kc::{brute_force_violation, most_violated, KC_TOL};
use crate::lp::{solve_relaxation, FractionalSolution};
use crate::oracles::{block_closed_form, brute_force_opt, gap_sweep, preemptive_cost, uniform_block_schedule};
use crate::rounding::{run_on_solution, CzForm, EdgeAnalyzer, ExperimentConfig};
use crate::tail_bounds::{auxiliary_grids, minimize_ratio, r_beta, tail_grids, GridConfig, GridReport, TailVariant};

/// `β` at which the strong-variant ratio is evaluated.
pub const GMSSC_BETA: f64 = 2.0715;
pub const GMSSC_RATIO: f64 = 4.642;
const EDGE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub random_instances: usize,
    pub max_n: usize,
    pub trials: u64,
    pub gap_n: usize,
    pub gap_epsilons: Vec<f64>,
    pub gap_ks: Vec<usize>,
    pub gap_threshold: f64,
    pub kc_candidates: usize,
    pub kc_max_size: usize,
    pub grids: GridConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 7,
            random_instances: 200,
            max_n: 8,
            trials: 100_000,
            gap_n: 1_000_000,
            gap_epsilons: vec![0.05, 0.02],
            gap_ks: vec![10, 20, 50, 100, 200, 500, 1000],
            gap_threshold: 1.70,
            kc_candidates: 10_000,
            kc_max_size: 12,
            grids: GridConfig::default(),
        }
    }
}

impl VerifyConfig {
    /// Reduced sizes for smoke runs; the thresholds are unchanged.
    pub fn quick(seed: u64) -> Self {
        VerifyConfig {
            seed,
            random_instances: 12,
            max_n: 6,
            trials: 2_000,
            gap_n: 100_000,
            gap_ks: vec![10, 20, 50, 100],
            kc_candidates: 500,
            ..VerifyConfig::default()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub summary: String,
    pub witness: Option<String>,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        let mut s = format!(
            "[{}] {} {}: {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.summary,
            self.seconds
        );
        if let Some(w) = &self.witness {
            s.push_str(&format!(" witness: {w}"));
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub outcomes: Vec<CriterionOutcome>,
    pub passed: bool,
}

/// Counts checks and keeps the first failure.
#[derive(Default)]
struct Tally {
    checks: usize,
    failures: usize,
    witness: Option<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.witness.is_none() {
                self.witness = Some(what());
            }
        }
    }

    fn absorb(&mut self, other: Tally) {
        self.checks += other.checks;
        self.failures += other.failures;
        if self.witness.is_none() {
            self.witness = other.witness;
        }
    }

    fn ok(&self) -> bool {
        self.failures == 0
    }
}

fn outcome(id: u8, title: &'static str, start: Instant, passed: bool, summary: String, witness: Option<String>) -> CriterionOutcome {
    CriterionOutcome { id, title, passed, summary, witness, seconds: start.elapsed().as_secs_f64() }
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: String,
    pub mode: ProblemMode,
    pub instance: Instance,
    pub solution: FractionalSolution,
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
}

fn random_instance(i: usize, rng: &mut ChaCha8Rng, max_n: usize) -> Result<(String, ProblemMode, Instance)> {
    let modes = [ProblemMode::Mssc, ProblemMode::Msvc, ProblemMode::MinLatency, ProblemMode::Gmssc];
    let mode = modes[i % 4];
    let n = rng.gen_range(3..=max_n);
    let m = rng.gen_range(2..=max_n);
    let seed = rng.gen::<u64>();
    let inst = match mode {
        ProblemMode::Mssc => gen_random(n, m, n.min(4), RequirementMode::AllOne, seed)?,
        ProblemMode::Msvc => gen_random_graph(n, m.min(n * (n - 1) / 2), seed)?,
        ProblemMode::MinLatency => gen_random(n, m, n.min(3), RequirementMode::AllSize, seed)?,
        ProblemMode::Gmssc => gen_random(n, m, n.min(5), RequirementMode::Uniform, seed)?,
    };
    Ok((format!("random-{i}-{}", mode.name()), mode, inst))
}

fn family_instances() -> Result<Vec<(String, ProblemMode, Instance)>> {
    let triangle = Instance::set_cover(3, &[&[0, 1], &[0, 2], &[1, 2]]);
    let star = Instance::set_cover(4, &[&[0, 1], &[0, 2], &[0, 3]]);
    let mut pick_two = gen_complete_uniform(5, 3)?;
    for e in &mut pick_two.edges {
        e.k = 2;
    }
    let chain = Instance::new(5, vec![Edge::new(vec![0, 1, 2], 3), Edge::new(vec![2, 3], 2), Edge::new(vec![3, 4, 0], 3)]);
    Ok(vec![
        ("triangle".into(), ProblemMode::Msvc, triangle.clone()),
        ("star".into(), ProblemMode::Mssc, star),
        ("cliques-5-3".into(), ProblemMode::Msvc, gen_msvc_gap(5, 0.1, 2)?.instance),
        ("clique-6".into(), ProblemMode::Msvc, gen_msvc_gap(6, 0.05, 1)?.instance),
        ("scaled-triangles".into(), ProblemMode::Mssc, gen_scaled_copies(&triangle, 2, 2.0)?.instance),
        ("triples-6".into(), ProblemMode::Mssc, gen_complete_uniform(6, 3)?),
        ("two-of-three-5".into(), ProblemMode::Gmssc, pick_two),
        ("latency-chain".into(), ProblemMode::MinLatency, chain),
    ])
}

impl Corpus {
    pub fn build(cfg: &VerifyConfig) -> Result<Corpus> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut raw = family_instances()?;
        for i in 0..cfg.random_instances {
            raw.push(random_instance(i, &mut rng, cfg.max_n)?);
        }
        let entries = raw
            .into_par_iter()
            .map(|(name, mode, instance)| {
                let solution = solve_relaxation(&instance, 1.0, mode)?;
                Ok(CorpusEntry { name, mode, instance, solution })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Corpus { entries })
    }
}

pub fn criterion_1() -> CriterionOutcome {
    let start = Instant::now();
    let run = || -> Result<(f64, f64, f64, f64)> {
        let weak = r_beta(2.191, TailVariant::Weak)?.ratio;
        let strong = r_beta(GMSSC_BETA, TailVariant::Strong)?.ratio;
        let conj = minimize_ratio(TailVariant::Conjectured { c: 13.3 }, 1.5, 3.0)?;
        Ok((weak, strong, conj.ratio, conj.beta))
    };
    match run() {
        Ok((weak, strong, conj, conj_beta)) => {
            let elapsed = start.elapsed().as_secs_f64();
            let passed = (weak - 4.9102).abs() <= 5e-4
                && (strong - 4.642).abs() <= 5e-4
                && (conj - 4.5232).abs() <= 1e-3
                && elapsed < 1.0;
            outcome(
                1,
                "r(beta) constants",
                start,
                passed,
                format!("weak {weak:.5}, strong {strong:.5}, conjectured {conj:.5} at beta {conj_beta:.4}"),
                None,
            )
        }
        Err(e) => outcome(1, "r(beta) constants", start, false, "evaluation failed".into(), Some(e.to_string())),
    }
}

fn edge_bounds(entry: &CorpusEntry, r_strong: f64) -> Result<Tally> {
    let inst = &entry.instance;
    let sol = &entry.solution;
    let mut t = Tally::default();
    let upto = 4 * sol.horizon as u64 + 20;
    let name = &entry.name;
    if inst.all_unit() {
        let an = EdgeAnalyzer::new(inst, sol, Kernel::Harmonic { beta: 2.0 })?;
        for e in 0..inst.m() {
            let a = an.analyze(e, CzForm::Mssc)?;
            t.check(a.c_z_upper <= 2.0 * a.c_x + EDGE_TOL, || {
                format!("{name} edge {e}: mssc c_z {} > 2 c_x {}", a.c_z_upper, 2.0 * a.c_x)
            });
            let margin = an.conditioning_margin(e, CzForm::Mssc, upto)?;
            t.check(margin >= -1e-9, || format!("{name} edge {e}: mssc conditioning margin {margin}"));
        }
    }
    if entry.mode == ProblemMode::Msvc {
        let an = EdgeAnalyzer::new(inst, sol, Kernel::Msvc)?;
        for e in 0..inst.m() {
            let a = an.analyze(e, CzForm::Msvc)?;
            t.check(a.c_z_upper <= 4.0 / 3.0 * a.c_x + EDGE_TOL, || {
                format!("{name} edge {e}: msvc sum {} > 4/3 c_x {}", a.c_z_upper, 4.0 / 3.0 * a.c_x)
            });
            let margin = an.conditioning_margin(e, CzForm::Msvc, upto)?;
            t.check(margin >= -1e-9, || format!("{name} edge {e}: msvc conditioning margin {margin}"));
        }
    }
    if entry.mode == ProblemMode::MinLatency {
        let an = EdgeAnalyzer::new(inst, sol, Kernel::Harmonic { beta: 1.0 })?;
        for e in 0..inst.m() {
            let a = an.analyze(e, CzForm::MinLatency)?;
            t.check(a.c_z <= std::f64::consts::E * a.c_x + EDGE_TOL, || {
                format!("{name} edge {e}: t_e {} > e c_x {}", a.c_z, std::f64::consts::E * a.c_x)
            });
        }
    }
    let an = EdgeAnalyzer::new(inst, sol, Kernel::Harmonic { beta: GMSSC_BETA })?;
    for e in 0..inst.m() {
        let a = an.analyze(e, CzForm::Gmssc(TailVariant::Strong))?;
        t.check(a.c_z_upper <= r_strong * a.c_x + EDGE_TOL, || {
            format!("{name} edge {e}: gmssc c_z {} > r c_x {}", a.c_z_upper, r_strong * a.c_x)
        });
        let margin = an.kc_consequence_margin(e, upto)?;
        t.check(margin >= -1e-6, || format!("{name} edge {e}: kernelized knapsack-cover margin {margin}"));
    }
    Ok(t)
}

pub fn criterion_2(corpus: &Corpus) -> CriterionOutcome {
    let start = Instant::now();
    let title = "per-edge deterministic bounds";
    let r_strong = match r_beta(GMSSC_BETA, TailVariant::Strong) {
        Ok(r) => r.value,
        Err(e) => return outcome(2, title, start, false, "r(beta) failed".into(), Some(e.to_string())),
    };
    let mut tally = Tally::default();
    for entry in &corpus.entries {
        match edge_bounds(entry, r_strong) {
            Ok(t) => tally.absorb(t),
            Err(e) => tally.check(false, || format!("{}: {e}", entry.name)),
        }
    }
    outcome(
        2,
        title,
        start,
        tally.ok(),
        format!("{} instances, {} checks, {} violations", corpus.entries.len(), tally.checks, tally.failures),
        tally.witness,
    )
}

fn mode_bound(mode: ProblemMode) -> (f64, f64) {
    match mode {
        ProblemMode::Mssc => (2.0, 4.0),
        ProblemMode::Msvc => (1.0, 16.0 / 9.0),
        ProblemMode::MinLatency => (1.0, std::f64::consts::E),
        ProblemMode::Gmssc => (GMSSC_BETA, GMSSC_RATIO),
    }
}

fn monte_carlo(entry: &CorpusEntry, trials: u64, seed: u64) -> Result<(Tally, f64)> {
    let (beta, bound) = mode_bound(entry.mode);
    let mut cfg = ExperimentConfig::new(entry.mode, beta, trials, seed);
    cfg.variant = TailVariant::Strong;
    let r = run_on_solution(&entry.instance, &entry.solution, &cfg)?;
    let name = &entry.name;
    let mut t = Tally::default();
    t.check(r.ratio <= bound + 3.0 * r.ratio_ci99, || {
        format!("{name}: ratio {} > {bound} + 3·{}", r.ratio, r.ratio_ci99)
    });
    for s in &r.per_edge {
        let e = s.edge;
        let sigma = s.cov_sigma;
        match entry.mode {
            ProblemMode::Msvc => {
                let ex = s.msvc_excess.expect("msvc runs record the paired excess");
                t.check(ex.mean <= 3.0 * ex.ci99, || {
                    format!("{name} edge {e}: cov_sigma - 4/3 cov_tau = {} ± {}", ex.mean, ex.ci99)
                });
            }
            _ => match s.c_z {
                Some(cz) => t.check(sigma.mean <= beta * cz + 3.0 * sigma.ci99, || {
                    format!("{name} edge {e}: cov_sigma {} > beta c_z {}", sigma.mean, beta * cz)
                }),
                None => t.check(false, || format!("{name} edge {e}: c_z unavailable")),
            },
        }
        let tau = s.cov_tau;
        t.check((tau.mean - s.expected_tentative).abs() <= 3.0 * tau.ci99 + 1e-9, || {
            format!("{name} edge {e}: cov_tau {} vs exact {}", tau.mean, s.expected_tentative)
        });
    }
    Ok((t, r.ratio))
}

pub fn criterion_3(corpus: &Corpus, trials: u64, seed: u64) -> CriterionOutcome {
    let start = Instant::now();
    let results: Vec<(String, ProblemMode, Result<(Tally, f64)>)> = corpus
        .entries
        .par_iter()
        .map(|e| (e.name.clone(), e.mode, monte_carlo(e, trials, seed)))
        .collect();
    let mut tally = Tally::default();
    let mut worst = [0.0f64; 4];
    for (name, mode, res) in results {
        match res {
            Ok((t, ratio)) => {
                tally.absorb(t);
                let slot = &mut worst[mode as usize];
                *slot = slot.max(ratio);
            }
            Err(e) => tally.check(false, || format!("{name}: {e}")),
        }
    }
    outcome(
        3,
        "Monte-Carlo ratios",
        start,
        tally.ok(),
        format!(
            "{} trials each; max ratio mssc {:.4}, msvc {:.4}, latency {:.4}, gmssc {:.4}; {} checks, {} violations",
            trials,
            worst[ProblemMode::Mssc as usize],
            worst[ProblemMode::Msvc as usize],
            worst[ProblemMode::MinLatency as usize],
            worst[ProblemMode::Gmssc as usize],
            tally.checks,
            tally.failures
        ),
        tally.witness,
    )
}

fn grid_outcome(id: u8, title: &'static str, start: Instant, report: &GridReport, limit: Option<f64>) -> CriterionOutcome {
    let elapsed = start.elapsed().as_secs_f64();
    let in_time = limit.is_none_or(|l| elapsed < l);
    let summary = report
        .checks
        .iter()
        .map(|c| format!("{} {}{}", c.name, if c.passed { "ok" } else { "FAILED" }, if c.gated { "" } else { " (info)" }))
        .collect::<Vec<_>>()
        .join(", ");
    let witness = report
        .checks
        .iter()
        .find(|c| c.gated && !c.passed)
        .map(|c| format!("{}: {}", c.name, c.witness.clone().unwrap_or_default()));
    outcome(id, title, start, report.passed && in_time, summary, witness)
}

pub fn criterion_4(grids: &GridConfig) -> CriterionOutcome {
    let start = Instant::now();
    let report = tail_grids(grids);
    grid_outcome(4, "tail-bound fuzz", start, &report, Some(30.0))
}

pub fn criterion_5(grids: &GridConfig) -> CriterionOutcome {
    let start = Instant::now();
    let report = auxiliary_grids(grids);
    grid_outcome(5, "analysis grids", start, &report, None)
}

fn greedy_chain(entry: &CorpusEntry) -> Result<Tally> {
    let inst = &entry.instance;
    let name = &entry.name;
    let mut t = Tally::default();
    for p in [1.0f64, 2.0, 3.0] {
        let trace = greedy_run(inst, p, TieBreak::LowestId)?;
        let opt = brute_force_opt(inst, p)?;
        let delta = (p + 1.0).powf(1.0 + 1.0 / p);
        let opt_norm = opt.cost.powf(1.0 / p);
        t.check(trace.g <= delta * opt_norm + 1e-6, || {
            format!("{name} p={p}: greedy {} > delta_p·opt {}", trace.g, delta * opt_norm)
        });
        let cert = build_dual_certificate(inst, &trace);
        let feasible = verify_certificate(&cert, inst, &trace);
        t.check(feasible.is_ok(), || format!("{name} p={p}: {}", feasible.unwrap_err()));
        let upper = (p + 1.0).powf(p) * opt.cost;
        t.check(cert.objective <= upper + 1e-6, || {
            format!("{name} p={p}: certificate {} > (p+1)^p opt {}", cert.objective, upper)
        });
    }
    Ok(t)
}

pub fn criterion_6(corpus: &Corpus) -> CriterionOutcome {
    let start = Instant::now();
    let eligible: Vec<&CorpusEntry> = corpus.entries.iter().filter(|e| e.instance.all_unit()).collect();
    let results: Vec<(String, Result<Tally>)> = eligible.par_iter().map(|e| (e.name.clone(), greedy_chain(e))).collect();
    let mut tally = Tally::default();
    for (name, r) in results {
        match r {
            Ok(t) => tally.absorb(t),
            Err(e) => tally.check(false, || format!("{name}: {e}")),
        }
    }
    outcome(
        6,
        "greedy and dual certificate",
        start,
        tally.ok(),
        format!("{} instances with k_e = 1, p in {{1,2,3}}; {} checks, {} violations", eligible.len(), tally.checks, tally.failures),
        tally.witness,
    )
}

pub fn criterion_7(cfg: &VerifyConfig) -> CriterionOutcome {
    let start = Instant::now();
    let title = "integrality-gap sweep";
    let sweep = match gap_sweep(cfg.gap_n, &cfg.gap_epsilons, &cfg.gap_ks) {
        Ok(s) => s,
        Err(e) => return outcome(7, title, start, false, "sweep failed".into(), Some(e.to_string())),
    };
    let k_max = cfg.gap_ks.iter().copied().max().unwrap_or(0);
    let extreme = sweep.reports.iter().filter(|r| r.k == k_max).map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let monotone = sweep.worst_decrease <= 1e-3;
    let elapsed = start.elapsed().as_secs_f64();
    let passed = extreme >= cfg.gap_threshold && monotone && elapsed < 60.0;
    let table = sweep
        .reports
        .iter()
        .map(|r| format!("eps={} k={}: {:.4}", r.epsilon, r.k, r.ratio))
        .collect::<Vec<_>>()
        .join("; ");
    let witness = (!passed).then(|| {
        format!(
            "ratio {extreme:.4} at k={k_max} vs threshold {}; worst decrease {:.2e}",
            cfg.gap_threshold, sweep.worst_decrease
        )
    });
    outcome(7, title, start, passed, format!("N={}: {table}", cfg.gap_n), witness)
}

pub fn criterion_8() -> CriterionOutcome {
    let start = Instant::now();
    let mut tally = Tally::default();
    let mut ratios = Vec::new();
    let run = |tally: &mut Tally, ratios: &mut Vec<f64>| -> Result<()> {
        for (n, size) in [(4usize, 2usize), (6, 3), (6, 2), (8, 4)] {
            let base = gen_complete_uniform(n, size)?;
            let r = n / size;
            for k in 1..=4 {
                let copies = gen_scaled_copies(&base, k, 2.0)?;
                let block = uniform_block_schedule(&copies, r)?;
                let cost = preemptive_cost(&block.schedule, &copies.instance)?;
                let closed = block_closed_form(&copies, r);
                tally.check((cost.total - closed).abs() <= 1e-9, || {
                    format!("base C({n},{size}) k={k}: {} vs {}", cost.total, closed)
                });
                let greedy = greedy_run(&copies.instance, 1.0, TieBreak::LowestId)?;
                ratios.push(greedy.g_pow / cost.total);
            }
        }
        Ok(())
    };
    if let Err(e) = run(&mut tally, &mut ratios) {
        tally.check(false, || e.to_string());
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
    outcome(
        8,
        "preemptive block schedules",
        start,
        tally.ok(),
        format!(
            "{} schedules match the closed form; non-preemptive/preemptive ratio in [{lo:.4}, {hi:.4}] (informational)",
            tally.checks - tally.failures
        ),
        tally.witness,
    )
}

pub fn criterion_9(corpus: &Corpus, cfg: &VerifyConfig) -> CriterionOutcome {
    let start = Instant::now();
    let results: Vec<(String, Result<(f64, f64)>)> = corpus
        .entries
        .par_iter()
        .map(|e| (e.name.clone(), brute_force_opt(&e.instance, 1.0).map(|o| (e.solution.objective, o.cost))))
        .collect();
    let mut tally = Tally::default();
    for (name, r) in results {
        match r {
            Ok((lp, opt)) => tally.check(lp <= opt + EDGE_TOL, || format!("{name}: lp {lp} > opt {opt}")),
            Err(e) => tally.check(false, || format!("{name}: {e}")),
        }
    }
    let lp_checks = tally.checks;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6b63);
    for i in 0..cfg.kc_candidates {
        let size = rng.gen_range(1..=cfg.kc_max_size);
        let k = rng.gen_range(1..=size);
        let ys: Vec<f64> = (0..size).map(|_| rng.gen::<f64>()).collect();
        let u = rng.gen::<f64>();
        let pairs: Vec<(usize, f64)> = ys.iter().copied().enumerate().collect();
        let (_, fast) = most_violated(k, &pairs, u);
        let exact = brute_force_violation(k, &ys, u);
        tally.check((fast - exact).abs() <= 1e-12 && (fast > KC_TOL) == (exact > KC_TOL), || {
            format!("candidate {i}: exchange rule {fast} vs enumeration {exact}")
        });
    }
    outcome(
        9,
        "oracle consistency",
        start,
        tally.ok(),
        format!(
            "lp <= opt on {lp_checks} instances; {} separation candidates; {} violations",
            cfg.kc_candidates, tally.failures
        ),
        tally.witness,
    )
}

pub fn run_all(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let corpus = Corpus::build(cfg)?;
    let outcomes = vec![
        criterion_1(),
        criterion_2(&corpus),
        criterion_3(&corpus, cfg.trials, cfg.seed),
        criterion_4(&cfg.grids),
        criterion_5(&cfg.grids),
        criterion_6(&corpus),
        criterion_7(cfg),
        criterion_8(),
        criterion_9(&corpus, cfg),
    ];
    let passed = outcomes.iter().all(|o| o.passed);
    Ok(VerifyReport { outcomes, passed })
}
