//! Ground truth: exhaustive optima, preemptive schedules, and the exact
//! costs of the clique-family gap construction.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::{clique_sizes, CliqueFamily, Instance, ScaledCopies};
use crate::lp::{build_lp, ConstraintMode, FractionalSolution, LpModel};

pub const BRUTE_FORCE_CAP: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BruteForceResult {
    pub cost: f64,
    pub ordering: Vec<usize>,
}

fn power(t: usize, p: f64) -> f64 {
    if p == 1.0 {
        t as f64
    } else {
        (t as f64).powf(p)
    }
}

struct Search<'a> {
    instance: &'a Instance,
    incident: Vec<Vec<usize>>,
    p: f64,
    placed_in: Vec<usize>,
    used: Vec<bool>,
    prefix: Vec<usize>,
    open_weight: f64,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn descend(&mut self, cost: f64) {
        let n = self.instance.n;
        let depth = self.prefix.len();
        if self.open_weight == 0.0 || depth == n {
            if self.open_weight > 0.0 {
                return;
            }
            if self.best.as_ref().is_none_or(|(b, _)| cost < *b) {
                let mut order = self.prefix.clone();
                order.extend((0..n).filter(|&v| !self.used[v]));
                self.best = Some((cost, order));
            }
            return;
        }
        // Every open edge finishes no earlier than the next slot.
        let bound = cost + self.open_weight * power(depth + 1, self.p);
        if let Some((b, _)) = &self.best {
            if bound >= *b {
                return;
            }
        }
        for v in 0..n {
            if self.used[v] {
                continue;
            }
            self.place(v, cost);
        }
    }

    fn place(&mut self, v: usize, cost: f64) {
        let slot = self.prefix.len() + 1;
        self.used[v] = true;
        self.prefix.push(v);
        let mut added = 0.0;
        let mut closed = 0.0;
        for i in 0..self.incident[v].len() {
            let e = self.incident[v][i];
            self.placed_in[e] += 1;
            let edge = &self.instance.edges[e];
            if self.placed_in[e] == edge.k {
                added += edge.weight() * power(slot, self.p);
                closed += edge.weight();
            }
        }
        self.open_weight -= closed;
        self.descend(cost + added);
        self.open_weight += closed;
        for i in 0..self.incident[v].len() {
            self.placed_in[self.incident[v][i]] -= 1;
        }
        self.prefix.pop();
        self.used[v] = false;
    }
}

/// Exact minimum of `Σ_e mult(e)·cover_time(e)^p`; among optimal orderings
/// the lexicographically smallest is returned.
pub fn brute_force_opt(instance: &Instance, p: f64) -> Result<BruteForceResult> {
    let n = instance.n;
    if n > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge { n, cap: BRUTE_FORCE_CAP });
    }
    instance.check(crate::instances::ProblemMode::Gmssc)?;
    let mut incident = vec![Vec::new(); n];
    for (ei, e) in instance.edges.iter().enumerate() {
        for &v in &e.vertices {
            incident[v].push(ei);
        }
    }
    let total_weight: f64 = instance.edges.iter().map(|e| e.weight()).sum();
    if n == 0 || total_weight == 0.0 {
        return Ok(BruteForceResult { cost: 0.0, ordering: (0..n).collect() });
    }
    let results: Vec<Option<(f64, Vec<usize>)>> = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut s = Search {
                instance,
                incident: incident.clone(),
                p,
                placed_in: vec![0; instance.m()],
                used: vec![false; n],
                prefix: Vec::with_capacity(n),
                open_weight: total_weight,
                best: None,
            };
            s.place(first, 0.0);
            s.best
        })
        .collect();
    let (cost, ordering) = results
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        .expect("some ordering covers every edge");
    Ok(BruteForceResult { cost, ordering })
}

/// Piecewise-constant rates: on `[breakpoints[j], breakpoints[j+1])` vertex
/// `v` is processed at `rates[j][v]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreemptiveSchedule {
    pub breakpoints: Vec<f64>,
    pub rates: Vec<Vec<f64>>,
}

const SCHEDULE_TOL: f64 = 1e-9;

impl PreemptiveSchedule {
    pub fn n_vertices(&self) -> usize {
        self.rates.first().map_or(0, |r| r.len())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSchedule(m));
        if self.breakpoints.len() != self.rates.len() + 1 || self.breakpoints[0] != 0.0 {
            return bad("need breakpoints 0 = b0 < b1 < ... with one rate vector per interval".into());
        }
        if self.breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("breakpoints must increase".into());
        }
        let n = self.n_vertices();
        let mut totals = vec![0.0; n];
        for (j, r) in self.rates.iter().enumerate() {
            if r.len() != n || r.iter().any(|&x| !(x >= 0.0)) {
                return bad(format!("interval {j} has a malformed rate vector"));
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > SCHEDULE_TOL {
                return bad(format!("rates on interval {j} sum to {sum}"));
            }
            let len = self.breakpoints[j + 1] - self.breakpoints[j];
            for (t, &x) in totals.iter_mut().zip(r) {
                *t += x * len;
            }
        }
        if let Some(v) = totals.iter().position(|&t| (t - 1.0).abs() > SCHEDULE_TOL) {
            return bad(format!("vertex {v} receives total {}", totals[v]));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreemptiveCost {
    pub cover_times: Vec<f64>,
    pub total: f64,
}

/// Real-valued cover time: where the edge's integrated mass reaches `k_e`.
pub fn preemptive_cost(schedule: &PreemptiveSchedule, instance: &Instance) -> Result<PreemptiveCost> {
    schedule.validate()?;
    if schedule.n_vertices() != instance.n {
        return Err(Error::InvalidSchedule(format!(
            "schedule covers {} vertices, instance has {}",
            schedule.n_vertices(),
            instance.n
        )));
    }
    let mut cover_times = Vec::with_capacity(instance.m());
    for (ei, e) in instance.edges.iter().enumerate() {
        let need = e.k as f64;
        let mut mass = 0.0;
        let mut time = None;
        for (j, r) in schedule.rates.iter().enumerate() {
            let (lo, hi) = (schedule.breakpoints[j], schedule.breakpoints[j + 1]);
            let rate: f64 = e.vertices.iter().map(|&v| r[v]).sum();
            let next = mass + rate * (hi - lo);
            if next >= need - SCHEDULE_TOL && rate > 0.0 {
                time = Some((lo + (need - mass) / rate).clamp(lo, hi));
                break;
            }
            mass = next;
        }
        cover_times.push(time.ok_or(Error::ScheduleIncomplete { edge: ei })?);
    }
    let total = instance.edges.iter().zip(&cover_times).map(|(e, &t)| e.weight() * t).sum();
    Ok(PreemptiveCost { cover_times, total })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockSchedule {
    pub schedule: PreemptiveSchedule,
    /// Set when some base edge does not have `n/r` vertices, so copy-`i`
    /// cover times need not equal `r·i`.
    pub warning: Option<String>,
}

/// Copy `i` runs uniformly over `[r(i-1), ri]`; the leftover mass of every
/// vertex follows uniformly over `[rk, rk + k(n-r)]`.
pub fn uniform_block_schedule(copies: &ScaledCopies, r: usize) -> Result<BlockSchedule> {
    let n = copies.base.n;
    let k = copies.copies();
    if r == 0 || r > n {
        return Err(Error::InvalidArgument(format!("block length {r} must lie in 1..={n}")));
    }
    let total = n * k;
    let mut breakpoints = vec![0.0];
    let mut rates = Vec::new();
    for i in 0..k {
        let mut rate = vec![0.0; total];
        for v in copies.copy_vertices(i) {
            rate[v] = 1.0 / n as f64;
        }
        rates.push(rate);
        breakpoints.push((r * (i + 1)) as f64);
    }
    if r < n {
        rates.push(vec![1.0 / total as f64; total]);
        breakpoints.push((r * k + k * (n - r)) as f64);
    }
    let warning = copies
        .base
        .edges
        .iter()
        .position(|e| e.vertices.len() * r != n)
        .map(|e| format!("base edge {e} has {} vertices, not n/r", copies.base.edges[e].vertices.len()));
    Ok(BlockSchedule { schedule: PreemptiveSchedule { breakpoints, rates }, warning })
}

/// `Σ_i mult_i·m·r·i` summed over copies, for base edges of unit weight.
pub fn block_closed_form(copies: &ScaledCopies, r: usize) -> f64 {
    let base_weight: f64 = copies.base.edges.iter().map(|e| e.weight()).sum();
    copies
        .factors
        .iter()
        .enumerate()
        .map(|(i, &f)| f as f64 * base_weight * (r * (i + 1)) as f64)
        .sum()
}

/// Neumaier-compensated sum.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn pairs(n: usize) -> u128 {
    n as u128 * (n as u128 - 1) / 2
}

/// `Σ_{τ ≥ 0} f(τ)` where `f = 1` up to `start`, then falls linearly to 0
/// over `len`.
fn ramp_sum(start: f64, len: f64) -> f64 {
    let flat = start.floor();
    let mut acc = flat + 1.0;
    let lo = flat + 1.0;
    let hi = (start + len).ceil() - 1.0;
    if hi >= lo {
        let cnt = hi - lo + 1.0;
        let tau_sum = (lo + hi) * cnt / 2.0;
        acc += cnt - (tau_sum - start * cnt) / len;
    }
    acc
}

/// Cost of the half-block fractional schedule: clique `i` is processed at
/// rate `1/n_i` per vertex during `[S_i, S_i + n_i/2)` with
/// `S_i = Σ_{j<i} n_j/2`, which covers each of its edges by the block's end.
pub fn gap_lp_cost(sizes: &[usize]) -> f64 {
    let mut total = CompensatedSum::default();
    let mut start = 0.0;
    for &n in sizes {
        let len = n as f64 / 2.0;
        total.add(pairs(n) as f64 * ramp_sum(start, len));
        start += len;
    }
    total.value()
}

/// Cost of the greedy schedule, which always picks from a largest
/// remaining clique. Level by level: at level `x` every clique with at least
/// `x` vertices loses one vertex, each covering `x - 1` edges.
pub fn gap_integral_cost(sizes: &[usize]) -> u128 {
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut total = 0u128;
    let mut time = 0u128;
    let mut active = 0u128;
    let mut j = 0;
    for x in (1..=sorted.first().copied().unwrap_or(0)).rev() {
        while j < sorted.len() && sorted[j] >= x {
            active += 1;
            j += 1;
        }
        total += (x as u128 - 1) * (active * time + active * (active + 1) / 2);
        time += active;
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub big_n: usize,
    pub epsilon: f64,
    pub k: usize,
    pub vertices: usize,
    pub smallest_clique: usize,
    pub lp_feasible_cost: f64,
    pub integral_cost: f64,
    pub ratio: f64,
    /// `Σ_i C(n_i,2)·(n_1+…+n_i)/2`, the coarser bound on the same schedule.
    pub lp_block_bound: f64,
    /// Uncovered-edge count over `[t_i, t_{i+1})`, ignoring the tail after `t_k`.
    pub integral_interval_bound: f64,
}

pub fn gap_report(big_n: usize, epsilon: f64, k: usize) -> Result<GapReport> {
    let sizes = clique_sizes(big_n, epsilon, k)?;
    Ok(gap_report_for_sizes(big_n, epsilon, &sizes))
}

fn gap_report_for_sizes(big_n: usize, epsilon: f64, sizes: &[usize]) -> GapReport {
    let lp = gap_lp_cost(sizes);
    let integral = gap_integral_cost(sizes) as f64;
    let mut block = CompensatedSum::default();
    let mut prefix = 0u128;
    for &n in sizes {
        prefix += n as u128;
        block.add(pairs(n) as f64 * prefix as f64 / 2.0);
    }
    let k = sizes.len();
    let mut suffix = vec![0u128; k + 1];
    for j in (0..k).rev() {
        suffix[j] = suffix[j + 1] + pairs(sizes[j]);
    }
    let mut interval = CompensatedSum::default();
    for i in 1..k {
        let len = i as u128 * (sizes[i - 1] - sizes[i]) as u128;
        interval.add((len * (i as u128 * pairs(sizes[i]) + suffix[i])) as f64);
    }
    GapReport {
        big_n,
        epsilon,
        k,
        vertices: sizes.iter().sum(),
        smallest_clique: *sizes.last().unwrap_or(&0),
        lp_feasible_cost: lp,
        integral_cost: integral,
        ratio: integral / lp,
        lp_block_bound: block.value(),
        integral_interval_bound: interval.value(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GapSweep {
    pub reports: Vec<GapReport>,
    /// Largest drop of the ratio between consecutive `k` at fixed `ε`.
    pub worst_decrease: f64,
    pub best_ratio: f64,
}

pub fn gap_sweep(big_n: usize, epsilons: &[f64], ks: &[usize]) -> Result<GapSweep> {
    let mut reports = Vec::new();
    let mut worst_decrease = 0.0f64;
    for &eps in epsilons {
        let row: Vec<GapReport> = ks.par_iter().map(|&k| gap_report(big_n, eps, k)).collect::<Result<_>>()?;
        for w in row.windows(2) {
            worst_decrease = worst_decrease.max(w[0].ratio - w[1].ratio);
        }
        reports.extend(row);
    }
    let best_ratio = reports.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(GapSweep { reports, worst_decrease, best_ratio })
}

/// The half-block schedule as a solution of the time-indexed LP, with the
/// second half of every vertex spread uniformly over `[n/2, n]` so each
/// vertex is fully scheduled. Returns the model so feasibility can be
/// checked row by row.
pub fn gap_fractional_solution(family: &CliqueFamily) -> Result<(LpModel, Vec<f64>, FractionalSolution)> {
    let inst = &family.instance;
    let model = build_lp(inst, 1.0, ConstraintMode::Basic)?;
    let horizon = model.horizon;
    let overlap = |t: usize, lo: f64, hi: f64| ((t as f64).min(hi) - (t as f64 - 1.0).max(lo)).max(0.0);
    let mut values = vec![0.0; model.program.n_vars];
    let pad_lo = inst.n as f64 / 2.0;
    let mut start = 0.0;
    for (c, &size) in family.sizes.iter().enumerate() {
        let len = size as f64 / 2.0;
        for v in family.offsets[c]..family.offsets[c] + size {
            for t in 1..=horizon {
                values[model.x_var(v, t)] =
                    overlap(t, start, start + len) / size as f64 + overlap(t, pad_lo, inst.n as f64) / inst.n as f64;
            }
        }
        start += len;
    }
    for (ei, e) in inst.edges.iter().enumerate() {
        let mut covered = 0.0f64;
        for t in 1..=horizon {
            values[model.u_var(ei, t)] = (1.0 - covered).max(0.0);
            covered += e.vertices.iter().map(|&v| values[model.x_var(v, t)]).sum::<f64>();
        }
    }
    let objective = model.program.objective_value(&values);
    let sol = FractionalSolution::from_values(&model, &values, objective);
    Ok((model, values, sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::{greedy_run, TieBreak};
    use crate::instances::{gen_complete_uniform, gen_msvc_gap, gen_scaled_copies, Edge};
    use crate::lp::solve_relaxation;
    use crate::instances::ProblemMode;

    #[test]
    fn brute_force_examples() {
        let tri = Instance::set_cover(3, &[&[0, 1], &[0, 2], &[1, 2]]);
        let r = brute_force_opt(&tri, 1.0).unwrap();
        assert_eq!(r.cost, 4.0);
        assert_eq!(r.ordering, vec![0, 1, 2]);
        let pair = Instance::new(2, vec![Edge::new(vec![0, 1], 2)]);
        assert_eq!(brute_force_opt(&pair, 1.0).unwrap().cost, 2.0);
        let star = Instance::set_cover(4, &[&[0, 1], &[0, 2], &[0, 3]]);
        let r = brute_force_opt(&star, 2.0).unwrap();
        assert_eq!(r.cost, 3.0);
        assert_eq!(r.ordering[0], 0);
        assert!(matches!(
            brute_force_opt(&Instance::new(11, vec![]), 1.0),
            Err(Error::TooLarge { n: 11, cap: 10 })
        ));
    }

    #[test]
    fn brute_force_matches_plain_enumeration() {
        use crate::rounding::{evaluate_schedule, Ordering};
        let inst = crate::instances::gen_random(6, 7, 4, crate::instances::RequirementMode::Uniform, 3).unwrap();
        let mut best = f64::INFINITY;
        let mut perm: Vec<usize> = (0..6).collect();
        fn heap(k: usize, a: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
            if k == 1 {
                f(a);
                return;
            }
            for i in 0..k {
                heap(k - 1, a, f);
                let j = if k.is_multiple_of(2) { i } else { 0 };
                a.swap(j, k - 1);
            }
        }
        heap(6, &mut perm, &mut |o| {
            let c = evaluate_schedule(&Ordering::new(o.to_vec()), &inst, 2.0).unwrap().total;
            best = best.min(c);
        });
        assert_eq!(brute_force_opt(&inst, 2.0).unwrap().cost, best);
    }

    #[test]
    fn preemptive_examples() {
        let s = PreemptiveSchedule { breakpoints: vec![0.0, 2.0], rates: vec![vec![0.5, 0.5]] };
        let one = Instance::new(2, vec![Edge::new(vec![0, 1], 1)]);
        assert_eq!(preemptive_cost(&s, &one).unwrap().cover_times, vec![1.0]);
        let two = Instance::new(2, vec![Edge::new(vec![0, 1], 2)]);
        assert_eq!(preemptive_cost(&s, &two).unwrap().cover_times, vec![2.0]);
        let bad = PreemptiveSchedule { breakpoints: vec![0.0, 1.0], rates: vec![vec![0.5, 0.5]] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn block_schedule_closed_form() {
        let base = gen_complete_uniform(4, 2).unwrap();
        let copies = gen_scaled_copies(&base, 2, 2.0).unwrap();
        let b = uniform_block_schedule(&copies, 2).unwrap();
        assert!(b.warning.is_none());
        let c = preemptive_cost(&b.schedule, &copies.instance).unwrap();
        let m = base.m() as f64;
        assert!((c.total - 6.0 * m * 2.0).abs() < 1e-9);
        assert!((c.total - block_closed_form(&copies, 2)).abs() < 1e-9);
        let single = gen_scaled_copies(&base, 1, 2.0).unwrap();
        let b = uniform_block_schedule(&single, 2).unwrap();
        let c = preemptive_cost(&b.schedule, &single.instance).unwrap();
        assert!(c.cover_times.iter().all(|&t| (t - 2.0).abs() < 1e-12));
        let g = greedy_run(&copies.instance, 1.0, TieBreak::LowestId).unwrap();
        assert!(g.g_pow / c.total > 0.0);
    }

    #[test]
    fn gap_costs_match_direct_constructions() {
        for sizes in [vec![5, 3], vec![9, 6, 4, 3], vec![100, 62, 46, 38], vec![7]] {
            let direct: f64 = {
                let total: usize = sizes.iter().sum();
                let mut s = 0.0;
                let mut acc = 0.0;
                for &n in &sizes {
                    let len = n as f64 / 2.0;
                    for t in 1..4 * total {
                        let m = ((t - 1) as f64 - s).clamp(0.0, len) / n as f64;
                        acc += pairs(n) as f64 * (1.0 - 2.0 * m).max(0.0);
                    }
                    s += len;
                }
                acc
            };
            assert!((gap_lp_cost(&sizes) - direct).abs() < 1e-6 * direct);
        }
        assert_eq!(gap_lp_cost(&[5, 3]), 29.0);
        assert_eq!(gap_integral_cost(&[5, 3]), 35);
        assert_eq!(gap_integral_cost(&[100, 62, 46, 38]), 635_151);
        assert_eq!(gap_lp_cost(&[7]), 48.0);
        assert_eq!(gap_integral_cost(&[7]), 56);
    }

    #[test]
    fn gap_small_family_cross_checks() {
        let fam = gen_msvc_gap(5, 0.1, 2).unwrap();
        assert_eq!(fam.sizes, vec![5, 3]);
        let (model, values, sol) = gap_fractional_solution(&fam).unwrap();
        assert!(model.program.max_violation(&values) < 1e-9);
        assert!((sol.objective - gap_lp_cost(&fam.sizes)).abs() < 1e-9);
        let lp = solve_relaxation(&fam.instance, 1.0, ProblemMode::Msvc).unwrap();
        assert!(lp.objective <= sol.objective + 1e-7);
        let opt = brute_force_opt(&fam.instance, 1.0).unwrap();
        assert_eq!(opt.cost, gap_integral_cost(&fam.sizes) as f64);
        let g = greedy_run(&fam.instance, 1.0, TieBreak::LowestId).unwrap();
        assert_eq!(g.g_pow, opt.cost);
    }

    #[test]
    fn gap_trend_and_threshold() {
        let r = gap_report(10_000, 0.05, 200).unwrap();
        assert!(r.ratio >= 1.6, "{}", r.ratio);
        let sweep = gap_sweep(100_000, &[0.05], &[10, 20, 50, 100]).unwrap();
        assert!(sweep.worst_decrease <= 1e-3);
    }
}
