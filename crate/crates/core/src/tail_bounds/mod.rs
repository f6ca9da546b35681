//! Upper bounds `P(γ)` on the left tail of Bernoulli sums, exact tails for
//! comparison, and the per-edge distortion factor `r(β)`.

mod grids;
mod quad;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
pub use grids::{auxiliary_grids, tail_grids, verify_analysis_grids, GridCheck, GridConfig, GridReport};
pub use quad::adaptive_simpson;

/// `ln(e/2)`.
pub const THETA: f64 = 1.0 - std::f64::consts::LN_2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum TailVariant {
    /// `e^{1-γ}/2`.
    Weak,
    /// `e^{-γ}(e/2)^{e^{1-γ}}`.
    Strong,
    /// `e^{-γ}(e/2)^{e^{c(1-γ)}}`; unproven, never used in gates.
    Conjectured { c: f64 },
}

impl TailVariant {
    pub fn is_conjectured(&self) -> bool {
        matches!(self, TailVariant::Conjectured { .. })
    }

    /// Exponent scale inside the double exponential.
    fn inner_scale(&self) -> f64 {
        match *self {
            TailVariant::Weak => 0.0,
            TailVariant::Strong => 1.0,
            TailVariant::Conjectured { c } => c,
        }
    }

    /// `sup_{γ ≥ γ_lo} P(γ) e^γ` for `γ_lo ≥ 1`.
    pub fn envelope_upper(&self, gamma_lo: f64) -> f64 {
        let g = gamma_lo.max(1.0);
        match self {
            TailVariant::Weak => std::f64::consts::E / 2.0,
            _ => (THETA * (self.inner_scale() * (1.0 - g)).exp()).exp(),
        }
    }

    /// `inf_{γ ≥ γ_lo} P(γ) e^γ`.
    pub fn envelope_lower(&self) -> f64 {
        match self {
            TailVariant::Weak => std::f64::consts::E / 2.0,
            _ => 1.0,
        }
    }
}

impl fmt::Display for TailVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailVariant::Weak => f.write_str("weak"),
            TailVariant::Strong => f.write_str("strong"),
            TailVariant::Conjectured { c } => write!(f, "conjectured:{c}"),
        }
    }
}

impl FromStr for TailVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weak" => Ok(TailVariant::Weak),
            "strong" => Ok(TailVariant::Strong),
            "conjectured" => Ok(TailVariant::Conjectured { c: 13.3 }),
            other => {
                let c = other
                    .strip_prefix("conjectured:")
                    .and_then(|c| c.parse::<f64>().ok())
                    .filter(|c| c.is_finite() && *c > 0.0)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown tail variant {other:?}")))?;
                Ok(TailVariant::Conjectured { c })
            }
        }
    }
}

pub fn p_bound(variant: TailVariant, gamma: f64) -> f64 {
    if gamma < 1.0 {
        return 1.0;
    }
    match variant {
        TailVariant::Weak => (1.0 - gamma).exp() / 2.0,
        _ => (-gamma + THETA * (variant.inner_scale() * (1.0 - gamma)).exp()).exp(),
    }
}

/// `Pr[S ≤ k-1]` for `S` a sum of independent Bernoulli(`probs[i]`).
pub fn exact_left_tail(probs: &[f64], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if k > probs.len() {
        return 1.0;
    }
    let mut dp = vec![0.0; k];
    dp[0] = 1.0;
    for &p in probs {
        for j in (0..k).rev() {
            let stay = dp[j] * (1.0 - p);
            let arrive = if j > 0 { dp[j - 1] * p } else { 0.0 };
            dp[j] = stay + arrive;
        }
    }
    dp.iter().sum::<f64>().clamp(0.0, 1.0)
}

/// Full distribution of a Bernoulli sum: `out[j] = Pr[S = j]`.
pub fn bernoulli_sum_pmf(probs: &[f64]) -> Vec<f64> {
    let mut dp = vec![0.0; probs.len() + 1];
    dp[0] = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        for j in (0..=i + 1).rev() {
            let stay = dp[j] * (1.0 - p);
            let arrive = if j > 0 { dp[j - 1] * p } else { 0.0 };
            dp[j] = stay + arrive;
        }
    }
    dp
}

/// `e^{-λ} Σ_{i<k} λ^i / i!`, summed in the log domain.
pub fn poisson_left_tail(k: usize, lambda: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if lambda <= 0.0 {
        return 1.0;
    }
    let ln_lambda = lambda.ln();
    let mut log_terms = Vec::with_capacity(k);
    let mut log_fact = 0.0;
    for i in 0..k {
        if i > 0 {
            log_fact += (i as f64).ln();
        }
        log_terms.push(-lambda + i as f64 * ln_lambda - log_fact);
    }
    let top = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = log_terms.iter().map(|l| (l - top).exp()).sum();
    (top + s.ln()).exp().min(1.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct RBeta {
    pub beta: f64,
    pub variant: TailVariant,
    pub value: f64,
    /// `β·r(β)`: the per-edge factor times the scheduling delay.
    pub ratio: f64,
    pub integral: f64,
    pub error_bound: f64,
    pub closed_form: Option<f64>,
    pub conjectured: bool,
}

const TRUNCATION: f64 = 1e-14;
const QUAD_TOL: f64 = 1e-12;

/// `r(β) = e^{1/β}(1 + (1/β)∫₁^∞ P(x)e^{(x-1)/β}dx)`.
pub fn r_beta(beta: f64, variant: TailVariant) -> Result<RBeta> {
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta = {beta} must exceed 1")));
    }
    let decay = 1.0 - 1.0 / beta;
    let x_max = 1.0 + (beta / (beta - 1.0)) * (1.0 / TRUNCATION).ln();
    let f = |x: f64| p_bound(variant, x) * ((x - 1.0) / beta).exp();
    let (integral, quad_err) = adaptive_simpson(&f, 1.0, x_max, QUAD_TOL);
    // P(x) ≤ (e/2)e^{-x} on [1, ∞) for every variant.
    let tail = variant.envelope_upper(1.0) * (-1.0 / beta).exp() * (-x_max * decay).exp() / decay;
    let pre = (1.0 / beta).exp();
    let value = pre * (1.0 + integral / beta);
    let error_bound = pre * (quad_err + tail) / beta;
    let closed_form = match variant {
        TailVariant::Weak => {
            let ratio = beta * (2.0 * beta - 1.0) * pre / (2.0 * beta - 2.0);
            let diff = (ratio - beta * value).abs();
            if diff > 1e-9 {
                return Err(Error::Numerical(format!(
                    "quadrature and closed form disagree by {diff:e} at beta = {beta}"
                )));
            }
            Some(ratio / beta)
        }
        _ => None,
    };
    Ok(RBeta {
        beta,
        variant,
        value,
        ratio: beta * value,
        integral,
        error_bound,
        closed_form,
        conjectured: variant.is_conjectured(),
    })
}

/// Golden-section minimization of `β·r(β)` over `[lo, hi]`.
pub fn minimize_ratio(variant: TailVariant, lo: f64, hi: f64) -> Result<RBeta> {
    if !(lo > 1.0 && hi > lo) {
        return Err(Error::InvalidArgument("need 1 < lo < hi".into()));
    }
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = r_beta(c, variant)?.ratio;
    let mut fd = r_beta(d, variant)?.ratio;
    while b - a > 1e-7 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = r_beta(c, variant)?.ratio;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = r_beta(d, variant)?.ratio;
        }
    }
    r_beta((a + b) / 2.0, variant)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_values() {
        assert!((p_bound(TailVariant::Strong, 1.0) - 0.5).abs() < 1e-15);
        assert!((p_bound(TailVariant::Weak, 1.0) - 0.5).abs() < 1e-15);
        let expect = (-5f64).exp() * (std::f64::consts::E / 2.0).powf((-4f64).exp());
        assert!((p_bound(TailVariant::Strong, 5.0) - expect).abs() < 1e-12);
        assert_eq!(p_bound(TailVariant::Strong, 0.3), 1.0);
    }

    #[test]
    fn exact_tail_examples() {
        assert!((exact_left_tail(&[0.5, 0.5], 1) - 0.25).abs() < 1e-15);
        assert!((exact_left_tail(&[0.5, 0.5], 2) - 0.75).abs() < 1e-15);
        assert_eq!(exact_left_tail(&[1.0, 1.0, 1.0], 3), 0.0);
        assert!((exact_left_tail(&[0.5; 4], 2) - 0.3125).abs() < 1e-15);
        assert_eq!(exact_left_tail(&[0.3], 2), 1.0);
    }

    #[test]
    fn poisson_examples() {
        assert!((poisson_left_tail(1, 1.0) - (-1f64).exp()).abs() < 1e-12);
        assert!((poisson_left_tail(2, 2.0) - 3.0 * (-2f64).exp()).abs() < 1e-12);
        assert!(poisson_left_tail(20, 20.0) < 0.5);
        let x = poisson_left_tail(1000, 1000.0);
        assert!(x > 0.49 && x < 0.5);
    }

    #[test]
    fn ratio_constants() {
        let weak = r_beta(2.191, TailVariant::Weak).unwrap();
        assert!((weak.ratio - 4.9102).abs() < 5e-4, "{}", weak.ratio);
        let strong = r_beta(2.0715, TailVariant::Strong).unwrap();
        assert!((strong.ratio - 4.642).abs() < 5e-4, "{}", strong.ratio);
        assert!(r_beta(1.0, TailVariant::Weak).is_err());
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("strong".parse::<TailVariant>().unwrap(), TailVariant::Strong);
        assert_eq!(
            "conjectured:13.3".parse::<TailVariant>().unwrap(),
            TailVariant::Conjectured { c: 13.3 }
        );
        assert!("medium".parse::<TailVariant>().is_err());
    }
}
