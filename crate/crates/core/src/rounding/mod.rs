//! α-point rounding of kernelized masses, tie resolution into an ordering,
//! and evaluation of orderings.

mod analysis;
mod experiment;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::{Edge, Instance};
use crate::kernels::KernelizedMass;
use crate::tail_bounds::exact_left_tail;
pub use analysis::{c_z_edge, CzForm, EdgeAnalysis, EdgeAnalyzer};
pub use experiment::{run_on_solution, run_rounding_experiment, EdgeStats, ExperimentConfig, RoundingReport};

/// Per-trial generator: stream `trial` of the ChaCha8 family keyed by `seed`.
/// Vertex `v` consumes the `v`-th draw, so runs do not depend on thread count.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TentativeSchedule {
    /// `None` when the vertex's mass never reaches its threshold.
    pub slots: Vec<Option<u64>>,
    pub alphas: Vec<f64>,
}

pub fn round_with_alphas(masses: &[KernelizedMass], alphas: &[f64]) -> TentativeSchedule {
    let slots = masses
        .iter()
        .zip(alphas)
        .map(|(m, &a)| m.first_reaching(a))
        .collect();
    TentativeSchedule { slots, alphas: alphas.to_vec() }
}

pub fn alpha_point_round<R: Rng>(masses: &[KernelizedMass], rng: &mut R) -> TentativeSchedule {
    let alphas: Vec<f64> = masses.iter().map(|_| rng.gen::<f64>()).collect();
    round_with_alphas(masses, &alphas)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Ordering {
    pub order: Vec<usize>,
}

impl Ordering {
    pub fn new(order: Vec<usize>) -> Self {
        Ordering { order }
    }

    /// `positions[v]` is the 1-based slot of vertex `v`.
    pub fn positions(&self) -> Result<Vec<usize>> {
        let n = self.order.len();
        let mut pos = vec![0usize; n];
        for (i, &v) in self.order.iter().enumerate() {
            if v >= n || pos[v] != 0 {
                return Err(Error::InvalidArgument("ordering is not a permutation".into()));
            }
            pos[v] = i + 1;
        }
        Ok(pos)
    }
}

/// Sorts by slot with uniform random tie keys; unreached vertices go last in
/// random order.
pub fn finalize_schedule<R: Rng>(tentative: &TentativeSchedule, rng: &mut R) -> Ordering {
    let mut keyed: Vec<(u64, u64, usize)> = tentative
        .slots
        .iter()
        .enumerate()
        .map(|(v, s)| (s.unwrap_or(u64::MAX), rng.gen::<u64>(), v))
        .collect();
    keyed.sort_unstable();
    Ordering { order: keyed.into_iter().map(|k| k.2).collect() }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleCost {
    pub cover_times: Vec<usize>,
    pub total: f64,
}

/// Position at which the `k`-th member of `edge` appears.
pub fn cover_time(positions: &[usize], edge: &Edge) -> usize {
    let mut times: Vec<usize> = edge.vertices.iter().map(|&v| positions[v]).collect();
    let (_, kth, _) = times.select_nth_unstable(edge.k - 1);
    *kth
}

pub fn cost_of_times(instance: &Instance, times: &[usize], p: f64) -> f64 {
    instance
        .edges
        .iter()
        .zip(times)
        .map(|(e, &t)| e.weight() * if p == 1.0 { t as f64 } else { (t as f64).powf(p) })
        .sum()
}

pub fn evaluate_schedule(ordering: &Ordering, instance: &Instance, p: f64) -> Result<ScheduleCost> {
    if ordering.order.len() != instance.n {
        return Err(Error::InvalidArgument(format!(
            "ordering has {} vertices, instance has {}",
            ordering.order.len(),
            instance.n
        )));
    }
    let pos = ordering.positions()?;
    let cover_times: Vec<usize> = instance.edges.iter().map(|e| cover_time(&pos, e)).collect();
    let total = cost_of_times(instance, &cover_times, p);
    Ok(ScheduleCost { cover_times, total })
}

/// Tentative cover time: the `k`-th smallest slot among the edge's vertices.
pub fn tentative_cover_time(tentative: &TentativeSchedule, edge: &Edge) -> Option<u64> {
    let mut slots: Vec<u64> = edge
        .vertices
        .iter()
        .map(|&v| tentative.slots[v].unwrap_or(u64::MAX))
        .collect();
    let (_, kth, _) = slots.select_nth_unstable(edge.k - 1);
    (*kth != u64::MAX).then_some(*kth)
}

/// Probability that `edge` is still uncovered in the tentative schedule at
/// the start of slot `t`.
pub fn edge_uncovered_prob(masses: &[KernelizedMass], edge: &Edge, t: u64) -> f64 {
    let probs: Vec<f64> = edge
        .vertices
        .iter()
        .map(|&v| masses[v].strict_prefix(t).min(1.0))
        .collect();
    if edge.k == 1 {
        probs.iter().map(|p| 1.0 - p).product()
    } else {
        exact_left_tail(&probs, edge.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{transform, Kernel};

    fn masses(prefix_cols: &[&[f64]]) -> Vec<KernelizedMass> {
        prefix_cols
            .iter()
            .map(|c| transform(Kernel::Harmonic { beta: 1.0 }, c).unwrap())
            .collect()
    }

    #[test]
    fn alpha_points() {
        // harmonic β=1 on a = (0.5, 0.5): prefix 0.5, 0.75, ...
        let m = masses(&[&[0.5, 0.5]]);
        assert_eq!(round_with_alphas(&m, &[0.4]).slots, vec![Some(1)]);
        assert_eq!(round_with_alphas(&m, &[0.7]).slots, vec![Some(2)]);
        let capped = transform(Kernel::Msvc, &[0.4]).unwrap();
        assert_eq!(round_with_alphas(&[capped], &[0.9]).slots, vec![None]);
    }

    #[test]
    fn finalize_orders_by_slot() {
        let mut rng = trial_rng(1, 0);
        let t = TentativeSchedule { slots: vec![Some(1), Some(2), Some(3)], alphas: vec![] };
        assert_eq!(finalize_schedule(&t, &mut rng).order, vec![0, 1, 2]);
        let t = TentativeSchedule { slots: vec![Some(2), None, Some(1)], alphas: vec![] };
        assert_eq!(finalize_schedule(&t, &mut rng).order, vec![2, 0, 1]);
    }

    #[test]
    fn ties_split_evenly() {
        let t = TentativeSchedule { slots: vec![Some(1), Some(1)], alphas: vec![] };
        let trials = 100_000;
        let first_zero = (0..trials)
            .filter(|&s| finalize_schedule(&t, &mut trial_rng(s, 0)).order[0] == 0)
            .count();
        let freq = first_zero as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.01, "{freq}");
    }

    #[test]
    fn evaluation_examples() {
        let tri = Instance::set_cover(3, &[&[0, 1], &[0, 2], &[1, 2]]);
        let c = evaluate_schedule(&Ordering::new(vec![0, 1, 2]), &tri, 1.0).unwrap();
        assert_eq!(c.cover_times, vec![1, 1, 2]);
        assert_eq!(c.total, 4.0);
        let pair = Instance::new(3, vec![Edge::new(vec![0, 2], 2)]);
        let c = evaluate_schedule(&Ordering::new(vec![0, 1, 2]), &pair, 1.0).unwrap();
        assert_eq!(c.cover_times, vec![3]);
        let two = Instance::set_cover(2, &[&[0], &[1]]);
        let c = evaluate_schedule(&Ordering::new(vec![0, 1]), &two, 2.0).unwrap();
        assert_eq!(c.total, 5.0);
        assert!(evaluate_schedule(&Ordering::new(vec![0, 0]), &two, 1.0).is_err());
    }

    #[test]
    fn uncovered_probabilities() {
        // harmonic β=1, a = (0.5): z_{<2} = 0.5
        let m = masses(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let e = Edge::new(vec![0, 1], 1);
        assert!((edge_uncovered_prob(&m, &e, 2) - 0.25).abs() < 1e-15);
        let e2 = Edge::new(vec![0, 1], 2);
        assert!((edge_uncovered_prob(&m, &e2, 2) - 0.75).abs() < 1e-15);
        let full = masses(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert_eq!(edge_uncovered_prob(&full, &e2, 2), 0.0);
    }
}
