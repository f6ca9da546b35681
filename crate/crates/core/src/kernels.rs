//! Lower-triangular kernels applied to fractional columns, with closed-form
//! prefix sums valid for any slot.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const HARMONIC_TABLE: usize = 1 << 16;

fn harmonic_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut h = Vec::with_capacity(HARMONIC_TABLE + 1);
        h.push(0.0);
        let mut acc = 0.0;
        for i in 1..=HARMONIC_TABLE {
            acc += 1.0 / i as f64;
            h.push(acc);
        }
        h
    })
}

/// `H_n = Σ_{i ≤ n} 1/i`; tabulated for small `n`, asymptotic series beyond.
pub fn harmonic(n: u64) -> f64 {
    if (n as usize) <= HARMONIC_TABLE {
        return harmonic_table()[n as usize];
    }
    let x = n as f64;
    let inv2 = 1.0 / (x * x);
    x.ln() + EULER_GAMMA + 0.5 / x - inv2 / 12.0 + inv2 * inv2 / 120.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Harmonic { beta: f64 },
    Msvc,
}

impl Kernel {
    pub fn harmonic(beta: f64) -> Result<Kernel> {
        if !(beta >= 1.0) || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!("beta = {beta} must be >= 1")));
        }
        Ok(Kernel::Harmonic { beta })
    }

    /// `K(t, t')`, zero above the diagonal.
    pub fn entry(&self, t: u64, t_src: u64) -> f64 {
        if t_src > t || t_src == 0 {
            return 0.0;
        }
        match *self {
            Kernel::Harmonic { beta } => beta / t as f64,
            Kernel::Msvc => {
                let (t, s) = (t as f64, t_src as f64);
                4.0 * s * (s + 1.0) / (t * (t + 1.0) * (t + 2.0))
            }
        }
    }

    /// Row sum `Σ_{t' ≤ t} K(t, t')`: the per-slot load bound.
    pub fn total_load(&self, t: u64) -> f64 {
        match *self {
            Kernel::Harmonic { beta } => {
                if t == 0 {
                    0.0
                } else {
                    beta
                }
            }
            Kernel::Msvc => {
                if t == 0 {
                    0.0
                } else {
                    4.0 / 3.0
                }
            }
        }
    }
}

/// `z = K a` for one column `a` supported on slots `1..=T`.
#[derive(Clone, Debug)]
pub struct KernelizedMass {
    pub kernel: Kernel,
    source: Vec<f64>,
    /// `Σ a`.
    total: f64,
    /// Harmonic: `Σ a_s H_{s-1}`. Msvc: `Σ a_s s(s+1)`.
    moment: f64,
    /// `prefix[t] = z_{≤t}` for `t = 0..=T`.
    prefix: Vec<f64>,
}

pub fn transform(kernel: Kernel, a: &[f64]) -> Result<KernelizedMass> {
    if let Some((i, &v)) = a.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "column entry {} at slot {} is negative or not finite",
            v,
            i + 1
        )));
    }
    let horizon = a.len();
    let total: f64 = a.iter().sum();
    let moment = match kernel {
        Kernel::Harmonic { .. } => a
            .iter()
            .enumerate()
            .map(|(i, &v)| v * harmonic(i as u64))
            .sum(),
        Kernel::Msvc => a
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let s = (i + 1) as f64;
                v * s * (s + 1.0)
            })
            .sum(),
    };
    let mut mass = KernelizedMass {
        kernel,
        source: a.to_vec(),
        total,
        moment,
        prefix: Vec::new(),
    };
    let mut prefix = Vec::with_capacity(horizon + 1);
    prefix.push(0.0);
    let mut running = 0.0;
    for t in 1..=horizon as u64 {
        running += mass.direct_at(t);
        prefix.push(running);
    }
    mass.prefix = prefix;
    Ok(mass)
}

impl KernelizedMass {
    pub fn horizon(&self) -> usize {
        self.source.len()
    }

    pub fn source(&self) -> &[f64] {
        &self.source
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    /// `Σ a_s H_{s-1}` (harmonic) or `Σ a_s s(s+1)` (msvc).
    pub fn moment(&self) -> f64 {
        self.moment
    }

    /// Partial mass `Σ_{s ≤ t} a_s` and weighted partial `Σ_{s ≤ t} a_s s(s+1)`.
    fn partials(&self, t: u64) -> (f64, f64) {
        let upto = (t as usize).min(self.source.len());
        let mut plain = 0.0;
        let mut weighted = 0.0;
        for (i, &v) in self.source[..upto].iter().enumerate() {
            let s = (i + 1) as f64;
            plain += v;
            weighted += v * s * (s + 1.0);
        }
        (plain, weighted)
    }

    fn direct_at(&self, t: u64) -> f64 {
        if t == 0 {
            return 0.0;
        }
        let (plain, weighted) = self.partials(t);
        match self.kernel {
            Kernel::Harmonic { beta } => beta * plain / t as f64,
            Kernel::Msvc => {
                let x = t as f64;
                4.0 * weighted / (x * (x + 1.0) * (x + 2.0))
            }
        }
    }

    /// `z_t`.
    pub fn at(&self, t: u64) -> f64 {
        if t as usize <= self.horizon() && t > 0 {
            self.prefix[t as usize] - self.prefix[t as usize - 1]
        } else {
            self.direct_at(t)
        }
    }

    /// `z_{≤t}`.
    pub fn prefix(&self, t: u64) -> f64 {
        let horizon = self.horizon() as u64;
        if t <= horizon {
            return self.prefix[t as usize];
        }
        match self.kernel {
            Kernel::Harmonic { beta } => beta * (self.total * harmonic(t) - self.moment),
            Kernel::Msvc => {
                let x = t as f64;
                2.0 * self.total - 2.0 * self.moment / ((x + 1.0) * (x + 2.0))
            }
        }
    }

    /// `z_{<t}`.
    pub fn strict_prefix(&self, t: u64) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.prefix(t - 1)
        }
    }

    /// Supremum of the prefix as `t → ∞`.
    pub fn limit(&self) -> f64 {
        match self.kernel {
            Kernel::Harmonic { .. } => {
                if self.total > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Kernel::Msvc => 2.0 * self.total,
        }
    }

    /// Smallest `t >= 1` with `z_{≤t} >= level`, or `None` if never reached.
    pub fn first_reaching(&self, level: f64) -> Option<u64> {
        let horizon = self.horizon();
        if horizon > 0 && self.prefix[horizon] >= level {
            let idx = self.prefix[1..].partition_point(|&z| z < level);
            return Some(idx as u64 + 1);
        }
        if level <= 0.0 {
            return Some(1);
        }
        let start = horizon as u64 + 1;
        // Closed-form guess, then settle on the exact boundary.
        let guess = match self.kernel {
            Kernel::Harmonic { beta } => {
                if self.total <= 0.0 {
                    return None;
                }
                let h = (level / beta + self.moment) / self.total;
                let est = (h - EULER_GAMMA).exp();
                if !(est < 1e15) {
                    return None;
                }
                est.floor() as u64
            }
            Kernel::Msvc => {
                let gap = 2.0 * self.total - level;
                if gap <= 0.0 {
                    return None;
                }
                // (t+1)(t+2) >= 2·moment / gap
                let need = 2.0 * self.moment / gap;
                let est = ((1.0 + 4.0 * need).sqrt() - 3.0) / 2.0;
                if !(est < 1e15) {
                    return None;
                }
                est.max(0.0).floor() as u64
            }
        };
        let mut t = guess.max(start);
        while t > start && self.prefix(t - 1) >= level {
            t -= 1;
        }
        let mut steps = 0;
        while self.prefix(t) < level {
            t += 1;
            steps += 1;
            if steps > 1_000_000 {
                return None;
            }
        }
        Some(t)
    }
}

/// `β Σ_{t' ≤ t} a_{t'} ln(t / t')`, a lower bound on `z_{<t}`.
pub fn log_lower_bound(kernel: Kernel, a: &[f64], t: u64) -> Result<f64> {
    let Kernel::Harmonic { beta } = kernel else {
        return Err(Error::InvalidArgument(
            "log lower bound is defined for the harmonic kernel only".into(),
        ));
    };
    let tf = t as f64;
    Ok(beta
        * a.iter()
            .enumerate()
            .take(t as usize)
            .map(|(i, &v)| v * (tf / (i + 1) as f64).ln())
            .sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_series_matches_table_at_switch() {
        let n = HARMONIC_TABLE as u64;
        let direct = harmonic(n);
        let x = n as f64;
        let inv2 = 1.0 / (x * x);
        let series = x.ln() + EULER_GAMMA + 0.5 / x - inv2 / 12.0 + inv2 * inv2 / 120.0;
        assert!((direct - series).abs() < 1e-12);
        assert!((harmonic(n + 1) - direct - 1.0 / (x + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn unit_mass_harmonic_column() {
        let z = transform(Kernel::Harmonic { beta: 2.0 }, &[1.0]).unwrap();
        for t in 1..50u64 {
            assert!((z.at(t) - 2.0 / t as f64).abs() < 1e-12);
        }
        assert!((z.prefix(1000) - 2.0 * harmonic(1000)).abs() < 1e-9);
    }

    #[test]
    fn zero_column() {
        let z = transform(Kernel::Msvc, &[0.0, 0.0]).unwrap();
        assert_eq!(z.prefix(100), 0.0);
        assert_eq!(z.first_reaching(0.5), None);
    }

    #[test]
    fn msvc_telescoping() {
        let z = transform(Kernel::Msvc, &[1.0]).unwrap();
        assert!((z.prefix(2) - 5.0 / 3.0).abs() < 1e-12);
        assert!((z.at(1) - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn msvc_closed_form_matches_summation() {
        let a = [0.3, 0.0, 0.5, 0.2];
        let z = transform(Kernel::Msvc, &a).unwrap();
        let mut direct = 0.0;
        for t in 1..=1000u64 {
            for (i, &v) in a.iter().enumerate() {
                direct += Kernel::Msvc.entry(t, i as u64 + 1) * v;
            }
            assert!((z.prefix(t) - direct).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn load_examples() {
        assert_eq!(Kernel::Harmonic { beta: 2.0 }.total_load(7), 2.0);
        assert_eq!(Kernel::Harmonic { beta: 1.0 }.total_load(5), 1.0);
        let s: f64 = (1..=9).map(|s| Kernel::Msvc.entry(9, s)).sum();
        assert!((s - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(Kernel::Msvc.total_load(9), 4.0 / 3.0);
    }

    #[test]
    fn log_bound_example() {
        let k = Kernel::Harmonic { beta: 2.0 };
        let lb = log_lower_bound(k, &[1.0], 4).unwrap();
        assert!((lb - 2.0 * 4f64.ln()).abs() < 1e-12);
        let z = transform(k, &[1.0]).unwrap();
        assert!((z.strict_prefix(4) - 2.0 * (1.0 + 0.5 + 1.0 / 3.0)).abs() < 1e-12);
        assert!(lb <= z.strict_prefix(4));
        assert_eq!(log_lower_bound(k, &[0.0, 1.0], 2).unwrap(), 0.0);
        assert!(log_lower_bound(Kernel::Msvc, &[1.0], 2).is_err());
    }

    #[test]
    fn first_reaching_beyond_horizon() {
        let z = transform(Kernel::Harmonic { beta: 1.0 }, &[0.5, 0.5]).unwrap();
        for level in [0.1, 0.7, 1.0, 2.5, 6.0] {
            let t = z.first_reaching(level).unwrap();
            assert!(z.prefix(t) >= level);
            assert!(t == 1 || z.prefix(t - 1) < level);
        }
        let m = transform(Kernel::Msvc, &[0.4]).unwrap();
        assert_eq!(m.first_reaching(0.9), None);
        let t = m.first_reaching(0.79).unwrap();
        assert!(m.prefix(t) >= 0.79 && m.prefix(t - 1) < 0.79);
    }

    #[test]
    fn rejects_negative_entries() {
        assert!(transform(Kernel::Msvc, &[0.5, -0.1]).is_err());
    }
}
