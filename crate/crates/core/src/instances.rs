//! Hypergraph instances with per-edge covering requirements and weights.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    #[serde(rename = "v")]
    pub vertices: Vec<usize>,
    pub k: usize,
    #[serde(rename = "mult", default = "one")]
    pub multiplicity: u64,
}

fn one() -> u64 {
    1
}

impl Edge {
    pub fn new(vertices: Vec<usize>, k: usize) -> Self {
        Edge { vertices, k, multiplicity: 1 }
    }

    pub fn weighted(vertices: Vec<usize>, k: usize, multiplicity: u64) -> Self {
        Edge { vertices, k, multiplicity }
    }

    pub fn weight(&self) -> f64 {
        self.multiplicity as f64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub n: usize,
    pub edges: Vec<Edge>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemMode {
    Mssc,
    Msvc,
    #[serde(rename = "latency")]
    MinLatency,
    Gmssc,
}

impl ProblemMode {
    pub fn name(self) -> &'static str {
        match self {
            ProblemMode::Mssc => "mssc",
            ProblemMode::Msvc => "msvc",
            ProblemMode::MinLatency => "latency",
            ProblemMode::Gmssc => "gmssc",
        }
    }
}

impl fmt::Display for ProblemMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mssc" => Ok(ProblemMode::Mssc),
            "msvc" => Ok(ProblemMode::Msvc),
            "latency" | "min-latency" | "min_latency" => Ok(ProblemMode::MinLatency),
            "gmssc" => Ok(ProblemMode::Gmssc),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    NoVertices,
    EmptyEdge,
    VertexOutOfRange(usize),
    DuplicateVertex(usize),
    ZeroRequirement,
    RequirementExceedsSize,
    ZeroMultiplicity,
    NotAGraphEdge,
    RequirementNotOne,
    RequirementNotSize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub edge: Option<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(e) = self.edge {
            write!(f, "edge {e}: ")?;
        }
        match &self.kind {
            ViolationKind::NoVertices => write!(f, "instance has no vertices"),
            ViolationKind::EmptyEdge => write!(f, "empty vertex set"),
            ViolationKind::VertexOutOfRange(v) => write!(f, "vertex {v} out of range"),
            ViolationKind::DuplicateVertex(v) => write!(f, "duplicate vertex {v}"),
            ViolationKind::ZeroRequirement => write!(f, "k_e = 0"),
            ViolationKind::RequirementExceedsSize => write!(f, "k_e > |e|"),
            ViolationKind::ZeroMultiplicity => write!(f, "multiplicity 0"),
            ViolationKind::NotAGraphEdge => write!(f, "edge size ≠ 2"),
            ViolationKind::RequirementNotOne => write!(f, "k_e ≠ 1"),
            ViolationKind::RequirementNotSize => write!(f, "k_e ≠ |e|"),
        }
    }
}

impl Instance {
    pub fn new(n: usize, edges: Vec<Edge>) -> Self {
        Instance { n, edges }
    }

    /// Unit-requirement, unit-weight instance from plain vertex lists.
    pub fn set_cover(n: usize, sets: &[&[usize]]) -> Self {
        let edges = sets.iter().map(|s| Edge::new(s.to_vec(), 1)).collect();
        Instance { n, edges }
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn max_requirement(&self) -> usize {
        self.edges.iter().map(|e| e.k).max().unwrap_or(0)
    }

    pub fn all_unit(&self) -> bool {
        self.edges.iter().all(|e| e.k == 1)
    }

    /// Every invariant breach, tagged with its edge. Empty means valid.
    pub fn validate(&self, mode: ProblemMode) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n == 0 {
            out.push(Violation { edge: None, kind: ViolationKind::NoVertices });
        }
        for (i, e) in self.edges.iter().enumerate() {
            let mut push = |kind| out.push(Violation { edge: Some(i), kind });
            if e.vertices.is_empty() {
                push(ViolationKind::EmptyEdge);
            }
            let mut seen = HashSet::new();
            for &v in &e.vertices {
                if v >= self.n {
                    push(ViolationKind::VertexOutOfRange(v));
                }
                if !seen.insert(v) {
                    push(ViolationKind::DuplicateVertex(v));
                }
            }
            if e.k == 0 {
                push(ViolationKind::ZeroRequirement);
            }
            if e.k > e.vertices.len() {
                push(ViolationKind::RequirementExceedsSize);
            }
            if e.multiplicity == 0 {
                push(ViolationKind::ZeroMultiplicity);
            }
            match mode {
                ProblemMode::Mssc => {
                    if e.k != 1 {
                        push(ViolationKind::RequirementNotOne);
                    }
                }
                ProblemMode::Msvc => {
                    if e.vertices.len() != 2 {
                        push(ViolationKind::NotAGraphEdge);
                    }
                    if e.k != 1 {
                        push(ViolationKind::RequirementNotOne);
                    }
                }
                ProblemMode::MinLatency => {
                    if e.k != e.vertices.len() {
                        push(ViolationKind::RequirementNotSize);
                    }
                }
                ProblemMode::Gmssc => {}
            }
        }
        out
    }

    pub fn check(&self, mode: ProblemMode) -> Result<()> {
        let v = self.validate(mode);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(v))
        }
    }

    /// Compact JSON with fixed field order; the digest is taken over this text.
    pub fn canonical_text(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }

    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical_text().as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_pretty())?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RequirementMode {
    AllOne,
    AllSize,
    AllButOne,
    Uniform,
}

impl FromStr for RequirementMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-one" => Ok(RequirementMode::AllOne),
            "all-size" => Ok(RequirementMode::AllSize),
            "all-but-one" => Ok(RequirementMode::AllButOne),
            "uniform" => Ok(RequirementMode::Uniform),
            other => Err(Error::InvalidArgument(format!(
                "unknown requirement mode {other:?}"
            ))),
        }
    }
}

pub fn gen_random(
    n: usize,
    m: usize,
    max_edge_size: usize,
    req: RequirementMode,
    seed: u64,
) -> Result<Instance> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("n and m must be positive".into()));
    }
    if max_edge_size == 0 || max_edge_size > n {
        return Err(Error::InvalidArgument(format!(
            "max edge size {max_edge_size} must lie in 1..={n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = (0..m)
        .map(|_| {
            let size = rng.gen_range(1..=max_edge_size);
            let mut vertices = sample(&mut rng, n, size).into_vec();
            vertices.sort_unstable();
            let k = match req {
                RequirementMode::AllOne => 1,
                RequirementMode::AllSize => size,
                RequirementMode::AllButOne => size.saturating_sub(1).max(1),
                RequirementMode::Uniform => rng.gen_range(1..=size),
            };
            Edge::new(vertices, k)
        })
        .collect();
    Ok(Instance { n, edges })
}

/// Random simple graph with `m` distinct edges, for vertex cover runs.
pub fn gen_random_graph(n: usize, m: usize, seed: u64) -> Result<Instance> {
    let pairs = n * n.saturating_sub(1) / 2;
    if n < 2 || m == 0 || m > pairs {
        return Err(Error::InvalidArgument(format!(
            "need n >= 2 and 1 <= m <= {pairs}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, pairs, m).into_vec();
    picked.sort_unstable();
    let mut all = Vec::with_capacity(pairs);
    for a in 0..n {
        for b in a + 1..n {
            all.push((a, b));
        }
    }
    let edges = picked
        .into_iter()
        .map(|i| Edge::new(vec![all[i].0, all[i].1], 1))
        .collect();
    Ok(Instance { n, edges })
}

/// All `size`-subsets of `0..n` as unit-requirement edges.
pub fn gen_complete_uniform(n: usize, size: usize) -> Result<Instance> {
    if size == 0 || size > n {
        return Err(Error::InvalidArgument(format!(
            "edge size {size} must lie in 1..={n}"
        )));
    }
    let mut edges = Vec::new();
    let mut cur: Vec<usize> = (0..size).collect();
    loop {
        edges.push(Edge::new(cur.clone(), 1));
        let mut i = size;
        while i > 0 && cur[i - 1] == n - size + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        cur[i - 1] += 1;
        for j in i..size {
            cur[j] = cur[j - 1] + 1;
        }
    }
    Ok(Instance { n, edges })
}

/// Disjoint cliques whose sizes decay like `N·i^{-(2/3+ε)}`.
#[derive(Clone, Debug)]
pub struct CliqueFamily {
    pub instance: Instance,
    pub sizes: Vec<usize>,
    /// First vertex id of each clique.
    pub offsets: Vec<usize>,
}

pub fn clique_sizes(big_n: usize, epsilon: f64, k: usize) -> Result<Vec<usize>> {
    if k == 0 || big_n < 2 || big_n < k {
        return Err(Error::InvalidArgument(format!(
            "need N >= k >= 1 and N >= 2, got N={big_n}, k={k}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0 / 3.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {epsilon} outside (0, 1/3)"
        )));
    }
    let exponent = 2.0 / 3.0 + epsilon;
    let mut sizes = Vec::with_capacity(k);
    for i in 1..=k {
        let raw = (big_n as f64 * (i as f64).powf(-exponent)).round() as usize;
        let size = match sizes.last() {
            Some(&prev) => raw.min(prev - 1),
            None => raw,
        };
        if size < 2 {
            return Err(Error::InvalidArgument(format!(
                "clique {i} would have {size} vertices"
            )));
        }
        sizes.push(size);
    }
    Ok(sizes)
}

/// Edge-count guard for materializing clique families.
const MAX_CLIQUE_EDGES: u128 = 20_000_000;

pub fn gen_msvc_gap(big_n: usize, epsilon: f64, k: usize) -> Result<CliqueFamily> {
    let sizes = clique_sizes(big_n, epsilon, k)?;
    let total_edges: u128 = sizes.iter().map(|&s| (s as u128) * (s as u128 - 1) / 2).sum();
    if total_edges > MAX_CLIQUE_EDGES {
        return Err(Error::InvalidArgument(format!(
            "{total_edges} edges is too many to materialize; use the analytic gap report"
        )));
    }
    let mut offsets = Vec::with_capacity(k);
    let mut edges = Vec::new();
    let mut base = 0;
    for &s in &sizes {
        offsets.push(base);
        for a in 0..s {
            for b in a + 1..s {
                edges.push(Edge::new(vec![base + a, base + b], 1));
            }
        }
        base += s;
    }
    Ok(CliqueFamily {
        instance: Instance { n: base, edges },
        sizes,
        offsets,
    })
}

/// `k` disjoint copies of a base instance, copy `i` weighted by `a / i^exponent`.
#[derive(Clone, Debug)]
pub struct ScaledCopies {
    pub instance: Instance,
    pub base: Instance,
    pub a: u64,
    /// Weight factor applied to copy `i` (index `i - 1`).
    pub factors: Vec<u64>,
}

impl ScaledCopies {
    pub fn copies(&self) -> usize {
        self.factors.len()
    }

    pub fn copy_vertices(&self, copy: usize) -> std::ops::Range<usize> {
        copy * self.base.n..(copy + 1) * self.base.n
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn checked_lcm(a: u64, b: u64) -> Option<u64> {
    (a / gcd(a, b)).checked_mul(b)
}

fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

pub fn gen_scaled_copies(base: &Instance, k: usize, exponent: f64) -> Result<ScaledCopies> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if !(exponent >= 1.0) || !exponent.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "exponent {exponent} must be finite and >= 1"
        )));
    }
    base.check(ProblemMode::Gmssc)?;
    let overflow = || Error::Overflow("copy weights");
    let integral = exponent.fract() == 0.0 && exponent <= u32::MAX as f64;
    let (a, factors): (u64, Vec<u64>) = if integral {
        let e = exponent as u32;
        let mut a = 1u64;
        for i in 1..=k as u64 {
            a = checked_lcm(a, checked_pow(i, e).ok_or_else(overflow)?).ok_or_else(overflow)?;
        }
        let factors: Vec<u64> = (1..=k as u64).map(|i| a / i.pow(e)).collect();
        (a, factors)
    } else {
        let mut l = 1u64;
        for i in 1..=k as u64 {
            l = checked_lcm(l, i).ok_or_else(overflow)?;
        }
        let a = checked_pow(l, exponent.ceil() as u32).ok_or_else(overflow)?;
        let factors = (1..=k)
            .map(|i| (a as f64 / (i as f64).powf(exponent)).round() as u64)
            .collect();
        (a, factors)
    };
    let mut edges = Vec::with_capacity(base.m() * k);
    for (copy, &f) in factors.iter().enumerate() {
        let shift = copy * base.n;
        for e in &base.edges {
            let mult = e.multiplicity.checked_mul(f).ok_or_else(overflow)?;
            let vertices = e.vertices.iter().map(|v| v + shift).collect();
            edges.push(Edge::weighted(vertices, e.k, mult));
        }
    }
    Ok(ScaledCopies {
        instance: Instance { n: base.n * k, edges },
        base: base.clone(),
        a,
        factors,
    })
}
