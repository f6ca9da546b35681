//! Greedy ordering for set cover with cover-time norms, and the dual-fitting
//! certificate that bounds its cost.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::Instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "tie_break", content = "seed", rename_all = "kebab-case")]
pub enum TieBreak {
    LowestId,
    SeededRandom(u64),
}

#[derive(Clone, Debug, Serialize)]
pub struct GreedyTrace {
    pub ordering: Vec<usize>,
    /// `covered[i]`: edges first covered in slot `i + 1`.
    pub covered: Vec<Vec<usize>>,
    /// `uncovered[i]`: edges still open at the start of slot `i + 1`.
    pub uncovered: Vec<Vec<usize>>,
    pub cover_times: Vec<usize>,
    pub p: f64,
    /// `Σ_e mult(e) · cover_time(e)^p`.
    pub g_pow: f64,
    /// `g_pow^{1/p}`.
    pub g: f64,
}

impl GreedyTrace {
    /// Multiplicity-weighted `|X_i|` for every slot.
    pub fn covered_weights(&self, instance: &Instance) -> Vec<u64> {
        self.covered
            .iter()
            .map(|x| x.iter().map(|&e| instance.edges[e].multiplicity).sum())
            .collect()
    }
}

fn power(t: f64, p: f64) -> f64 {
    if p == 1.0 {
        t
    } else {
        t.powf(p)
    }
}

pub fn greedy_run(instance: &Instance, p: f64, tie_break: TieBreak) -> Result<GreedyTrace> {
    if let Some(e) = instance.edges.iter().position(|e| e.k != 1) {
        return Err(Error::InvalidArgument(format!("greedy needs k_e = 1, edge {e} has k = {}", instance.edges[e].k)));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} must be >= 1")));
    }
    let n = instance.n;
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ei, e) in instance.edges.iter().enumerate() {
        for &v in &e.vertices {
            incident[v].push(ei);
        }
    }
    let mut count: Vec<u64> = incident
        .iter()
        .map(|es| es.iter().map(|&e| instance.edges[e].multiplicity).sum())
        .collect();
    let mut open = vec![true; instance.m()];
    let mut placed = vec![false; n];
    let mut remaining = instance.m();
    let mut heap: BinaryHeap<(u64, Reverse<usize>)> = match tie_break {
        TieBreak::LowestId => (0..n).map(|v| (count[v], Reverse(v))).collect(),
        TieBreak::SeededRandom(_) => BinaryHeap::new(),
    };
    let mut rng = match tie_break {
        TieBreak::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        TieBreak::LowestId => None,
    };

    let mut ordering = Vec::with_capacity(n);
    let mut covered = Vec::new();
    let mut uncovered = Vec::new();
    let mut cover_times = vec![0usize; instance.m()];
    while remaining > 0 {
        let v = match rng.as_mut() {
            None => loop {
                let (c, Reverse(v)) = heap.pop().expect("an unplaced vertex covers an open edge");
                if !placed[v] && c == count[v] {
                    break v;
                }
            },
            Some(rng) => {
                let best = (0..n).filter(|&v| !placed[v]).map(|v| count[v]).max().unwrap_or(0);
                let ties: Vec<usize> = (0..n).filter(|&v| !placed[v] && count[v] == best).collect();
                *ties.choose(rng).expect("an unplaced vertex exists")
            }
        };
        uncovered.push((0..instance.m()).filter(|&e| open[e]).collect::<Vec<_>>());
        placed[v] = true;
        ordering.push(v);
        let slot = ordering.len();
        let mut newly = Vec::new();
        for &e in &incident[v] {
            if !open[e] {
                continue;
            }
            open[e] = false;
            remaining -= 1;
            cover_times[e] = slot;
            newly.push(e);
            let w = instance.edges[e].multiplicity;
            for &u in &instance.edges[e].vertices {
                count[u] -= w;
                if !placed[u] && rng.is_none() {
                    heap.push((count[u], Reverse(u)));
                }
            }
        }
        newly.sort_unstable();
        covered.push(newly);
    }
    ordering.extend((0..n).filter(|&v| !placed[v]));
    let g_pow: f64 = instance
        .edges
        .iter()
        .zip(&cover_times)
        .map(|(e, &t)| e.weight() * power(t as f64, p))
        .sum();
    Ok(GreedyTrace { ordering, covered, uncovered, cover_times, p, g_pow, g: g_pow.powf(1.0 / p) })
}

/// Piecewise dual solution: on slot `(i-1, i]`, `α_t = p t^{p-1} alpha[i]`
/// and `β_{e,t} = p t^{p-1}` exactly for the edges open at the slot's start.
#[derive(Clone, Debug, Serialize)]
pub struct DualCertificate {
    pub p: f64,
    pub alpha: Vec<f64>,
    pub open: Vec<Vec<usize>>,
    /// `g^p - (1/(p+1)) ∫ t α_t dt`.
    pub objective: f64,
    pub g_pow: f64,
}

impl DualCertificate {
    pub fn to_text(&self) -> String {
        let mut s = format!("p {}\nobjective {}\ng_pow {}\n", self.p, self.objective, self.g_pow);
        for (i, (a, r)) in self.alpha.iter().zip(&self.open).enumerate() {
            let _ = writeln!(s, "slot {} alpha {} open {:?}", i + 1, a, r);
        }
        s
    }
}

pub fn build_dual_certificate(instance: &Instance, trace: &GreedyTrace) -> DualCertificate {
    let p = trace.p;
    let alpha: Vec<f64> = trace.covered_weights(instance).into_iter().map(|w| w as f64).collect();
    let moment: f64 = alpha
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let (hi, lo) = ((i + 1) as f64, i as f64);
            a * p * (hi.powf(p + 1.0) - lo.powf(p + 1.0)) / (p + 1.0)
        })
        .sum();
    DualCertificate {
        p,
        alpha,
        open: trace.uncovered.clone(),
        objective: trace.g_pow - moment / (p + 1.0),
        g_pow: trace.g_pow,
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CertificateViolation {
    #[error("vertex {vertex} in slot {slot}: open load {load} exceeds alpha {alpha}")]
    Vertex { vertex: usize, slot: usize, load: f64, alpha: f64 },
    #[error("objective {objective} below g^p/(p+1) = {bound}")]
    Objective { objective: f64, bound: f64 },
    #[error("certificate has {got} slots, trace has {want}")]
    Shape { got: usize, want: usize },
}

pub fn verify_certificate(
    cert: &DualCertificate,
    instance: &Instance,
    trace: &GreedyTrace,
) -> std::result::Result<(), CertificateViolation> {
    if cert.alpha.len() != trace.covered.len() || cert.open.len() != trace.covered.len() {
        return Err(CertificateViolation::Shape { got: cert.alpha.len(), want: trace.covered.len() });
    }
    let mut load = vec![0u64; instance.n];
    for (i, open) in cert.open.iter().enumerate() {
        load.iter_mut().for_each(|l| *l = 0);
        for &e in open {
            let edge = &instance.edges[e];
            for &v in &edge.vertices {
                load[v] += edge.multiplicity;
            }
        }
        if let Some(v) = (0..instance.n).find(|&v| load[v] as f64 > cert.alpha[i]) {
            return Err(CertificateViolation::Vertex { vertex: v, slot: i + 1, load: load[v] as f64, alpha: cert.alpha[i] });
        }
    }
    let bound = trace.g_pow / (trace.p + 1.0);
    if cert.objective < bound - 1e-9 {
        return Err(CertificateViolation::Objective { objective: cert.objective, bound });
    }
    Ok(())
}
