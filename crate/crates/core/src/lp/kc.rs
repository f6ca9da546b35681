//! Knapsack-cover row separation.
//!
//! For an edge with requirement `k`, prefixes `y_v = x_{v,<t}` and residual
//! `u`, the row indexed by `S` (with `|S| < k`) has slack
//! `k(u-1) + Σ_v y_v + Σ_{v∈S} ((1-u) - y_v)`. Moving `v` into `S` changes the
//! slack by `(1-u) - y_v`, so the tightest row takes the vertices with
//! `y_v > 1-u`, largest first, at most `k-1` of them.

use crate::instances::Instance;
use crate::lp::FractionalSolution;

pub const KC_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct KcCut {
    pub edge: usize,
    pub t: usize,
    pub subset: Vec<usize>,
    /// Amount by which the row's right-hand side exceeds its left-hand side.
    pub violation: f64,
}

/// Exchange-rule subset for one `(edge, t)`: returns `(S, violation)`.
/// `prefixes` pairs each vertex id with its prefix mass.
pub fn most_violated(k: usize, prefixes: &[(usize, f64)], u: f64) -> (Vec<usize>, f64) {
    let mut cand: Vec<(usize, f64)> = prefixes
        .iter()
        .copied()
        .filter(|&(_, y)| y > 1.0 - u)
        .collect();
    cand.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    cand.truncate(k.saturating_sub(1));
    let total: f64 = prefixes.iter().map(|p| p.1).sum();
    let mut slack = k as f64 * (u - 1.0) + total;
    for &(_, y) in &cand {
        slack += (1.0 - u) - y;
    }
    let mut subset: Vec<usize> = cand.into_iter().map(|c| c.0).collect();
    subset.sort_unstable();
    (subset, -slack)
}

/// Smallest `u` satisfying every knapsack-cover row for these prefixes.
pub fn tightest_residual(k: usize, prefixes: &[f64]) -> f64 {
    let mut ys = prefixes.to_vec();
    ys.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = ys.iter().sum();
    let mut top = 0.0;
    let mut best = 0.0f64;
    for s in 0..k.min(ys.len() + 1) {
        let r = (k - s) as f64;
        best = best.max((r - (total - top)) / r);
        if s < ys.len() {
            top += ys[s];
        }
    }
    best.max(0.0)
}

pub fn kc_separate(instance: &Instance, sol: &FractionalSolution) -> Vec<KcCut> {
    let mut cuts = Vec::new();
    for (ei, e) in instance.edges.iter().enumerate() {
        let mut prefixes: Vec<(usize, f64)> = e.vertices.iter().map(|&v| (v, 0.0)).collect();
        for t in 1..=sol.horizon {
            if t > 1 {
                for p in prefixes.iter_mut() {
                    p.1 += sol.x[p.0][t - 2];
                }
            }
            let (subset, violation) = most_violated(e.k, &prefixes, sol.u[ei][t - 1]);
            if violation > KC_TOL {
                cuts.push(KcCut { edge: ei, t, subset, violation });
            }
        }
    }
    cuts
}

/// Exhaustive maximum violation over all subsets with `|S| < k`.
pub fn brute_force_violation(k: usize, prefixes: &[f64], u: f64) -> f64 {
    let n = prefixes.len();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << n) {
        let s = mask.count_ones() as usize;
        if s >= k {
            continue;
        }
        let r = (k - s) as f64;
        let outside: f64 = (0..n).filter(|&i| mask & (1 << i) == 0).map(|i| prefixes[i]).sum();
        best = best.max(r - r * u - outside);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_schedule_has_no_violation() {
        let (_, v) = most_violated(3, &[(0, 0.0), (1, 0.0), (2, 0.0)], 1.0);
        assert!(v <= 0.0);
    }

    #[test]
    fn single_full_vertex_violates() {
        // y_a = 1 - u sits on the boundary, so S = {a} and S = ∅ tie.
        let (s, v) = most_violated(2, &[(0, 1.0), (1, 0.0)], 0.0);
        assert!(s.is_empty());
        assert!((v - 1.0).abs() < 1e-12);
        assert!((brute_force_violation(2, &[1.0, 0.0], 0.0) - 1.0).abs() < 1e-12);
        let (s, v) = most_violated(2, &[(0, 1.0), (1, 0.0)], 0.1);
        assert_eq!(s, vec![0]);
        assert!((v - 0.9).abs() < 1e-12);
    }

    #[test]
    fn boundary_vertex_is_excluded() {
        let (s, _) = most_violated(2, &[(0, 0.5), (1, 0.0)], 0.5);
        assert!(s.is_empty());
    }

    #[test]
    fn exchange_rule_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let n = rng.gen_range(1..=10);
            let k = rng.gen_range(1..=n);
            let ys: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let u = rng.gen::<f64>();
            let pairs: Vec<(usize, f64)> = ys.iter().copied().enumerate().collect();
            let (_, v) = most_violated(k, &pairs, u);
            assert!((v - brute_force_violation(k, &ys, u)).abs() < 1e-12);
            let r = tightest_residual(k, &ys);
            assert!(brute_force_violation(k, &ys, r) <= 1e-12);
            if r > 1e-9 {
                assert!(brute_force_violation(k, &ys, r - 1e-6) > 0.0);
            }
        }
    }
}
