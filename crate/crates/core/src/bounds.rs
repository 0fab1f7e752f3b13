//! Finite-sample constants and inequalities for the plug-in estimator.
//!
//! Replacing one of the `n` points behind a density estimate moves the
//! plug-in estimate by at most `C_V / n`, with
//! `C_V = 2 C_f max_j ‖K‖₁^{d_j}`. McDiarmid's inequality over the `k n`
//! independent points then gives
//!
//! ```text
//! P(|F̂ - E F̂| > ε) ≤ 2 exp(-2 ε² n / (k C_V²))
//! ```
//!
//! and the bias satisfies `|E F̂ - F| ≤ C_B (h^β + h^{2β} + 1/(n h^d))`.
//! `C_B` is not known in closed form and is supplied by the caller, so every
//! bias figure is "up to constants".

use crate::error::{invalid, Result};
use crate::math;

/// Smoothness class parameters `(β, L, r, d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct HolderParams {
    pub beta: f64,
    pub lipschitz: f64,
    pub norm_index: f64,
    pub dim: usize,
}

impl HolderParams {
    pub fn new(beta: f64, lipschitz: f64, norm_index: f64, dim: usize) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid("beta", "smoothness must be positive and finite"));
        }
        if lipschitz.is_nan() || lipschitz <= 0.0 {
            return Err(invalid("L", "Hölder constant must be positive"));
        }
        if norm_index.is_nan() || norm_index < 1.0 {
            return Err(invalid("r", "norm index must be at least 1"));
        }
        if dim == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        Ok(Self {
            beta,
            lipschitz,
            norm_index,
            dim,
        })
    }

    /// Smoothness `β` in dimension `d` with `L = 1`, `r = 2`.
    pub fn with_beta(beta: f64, dim: usize) -> Result<Self> {
        Self::new(beta, 1.0, 2.0, dim)
    }

    /// Greatest integer strictly less than `β`.
    pub fn ell(&self) -> usize {
        let c = math::ceil(self.beta);
        (c as usize).saturating_sub(1)
    }
}

/// `C_V = 2 C_f max_j l1^{d_j}`.
pub fn variance_constant(lipschitz: f64, dims: &[usize], l1: f64) -> f64 {
    let worst = dims.iter().map(|&d| math::powi(l1, d as i32)).fold(0.0, f64::max);
    2.0 * lipschitz * worst
}

/// `min(1, 2 exp(-2 ε² n / (k C_V²)))`.
pub fn deviation_probability(epsilon: f64, n: usize, k: usize, variance_constant: f64) -> f64 {
    let exponent = -2.0 * epsilon * epsilon * n as f64 / (k as f64 * variance_constant * variance_constant);
    (2.0 * math::exp(exponent)).min(1.0)
}

/// The `ε` at which [`deviation_probability`] equals `δ`:
/// `C_V sqrt(k ln(2/δ) / (2n))`.
pub fn ci_halfwidth(delta: f64, n: usize, k: usize, variance_constant: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", "confidence level must lie in (0, 1)"));
    }
    if n == 0 || k == 0 {
        return Err(invalid("n", "sample size and arity must be positive"));
    }
    Ok(variance_constant * math::sqrt(k as f64 * math::log(2.0 / delta) / (2.0 * n as f64)))
}

/// `C_B (h^β + h^{2β} + 1/(n h^d))`.
pub fn bias_bound(bandwidth: f64, params: &HolderParams, n: usize, bias_constant: f64) -> f64 {
    let hb = math::pow(bandwidth, params.beta);
    bias_constant * (hb + hb * hb + 1.0 / (n as f64 * math::powi(bandwidth, params.dim as i32)))
}

/// `C_V² / n`.
pub fn variance_bound(variance_constant: f64, n: usize) -> f64 {
    variance_constant * variance_constant / n as f64
}

/// Variance bound plus squared bias bound.
pub fn mse_bound(variance_constant: f64, bias_constant: f64, bandwidth: f64, params: &HolderParams, n: usize) -> f64 {
    let b = bias_bound(bandwidth, params, n, bias_constant);
    variance_bound(variance_constant, n) + b * b
}

/// Bandwidth rule `h = min(1, c n^{-1/(β+d)})`.
pub fn bandwidth(n: usize, beta: f64, dim: usize, scale: f64) -> f64 {
    (scale * math::pow(n as f64, -1.0 / (beta + dim as f64))).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ell_is_strictly_below_beta() {
        let cases = [(0.5, 0), (1.0, 0), (1.5, 1), (2.0, 1), (2.01, 2), (3.0, 2)];
        for (beta, ell) in cases {
            assert_eq!(HolderParams::with_beta(beta, 1).unwrap().ell(), ell, "β={beta}");
        }
        assert!(HolderParams::with_beta(0.0, 1).is_err());
        assert!(HolderParams::new(1.0, 1.0, 0.5, 1).is_err());
    }

    #[test]
    fn variance_constant_values() {
        assert_eq!(variance_constant(1.0, &[1], 1.0), 2.0);
        assert!((variance_constant(2.0, &[1, 2], 1.5) - 9.0).abs() < 1e-12);
        assert_eq!(variance_constant(3.5, &[1, 4, 2], 1.0), 7.0);
    }

    #[test]
    fn deviation_and_halfwidth() {
        assert_eq!(deviation_probability(0.0, 10, 1, 1.0), 1.0);
        let eps = ci_halfwidth(0.05, 1000, 1, 1.0).unwrap();
        let direct = libm::sqrt(libm::log(40.0) / 2000.0);
        assert_eq!(eps, direct);
        assert!((eps - 0.042955).abs() < 1e-5);
        assert!((deviation_probability(0.042955, 1000, 1, 1.0) - 0.05).abs() < 1e-4);
        assert!(ci_halfwidth(1.0, 10, 1, 1.0).is_err());
        assert!(ci_halfwidth(0.0, 10, 1, 1.0).is_err());
        assert!(ci_halfwidth(2.0, 10, 1, 1.0).is_err());
        let near_one = ci_halfwidth(1.0 - 1e-12, 50, 1, 1.0).unwrap();
        assert!((near_one - libm::sqrt(libm::log(2.0) / 100.0)).abs() < 1e-9);
        let a = ci_halfwidth(0.1, 100, 2, 3.0).unwrap();
        let b = ci_halfwidth(0.1, 400, 2, 3.0).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip() {
        for delta in [0.5, 0.1, 0.05, 0.01, 1e-6] {
            for (n, k, cv) in [(1000, 1, 1.0), (57, 4, 13.2)] {
                let eps = ci_halfwidth(delta, n, k, cv).unwrap();
                assert!((deviation_probability(eps, n, k, cv) - delta).abs() <= 1e-12 * delta.max(1e-3));
            }
        }
    }

    #[test]
    fn bias_bound_values() {
        let p = HolderParams::with_beta(2.0, 1).unwrap();
        assert_eq!(bias_bound(1.0, &p, 1, 1.0), 3.0);
        let n = 10_000;
        let h = bandwidth(n, 2.0, 1, 1.0);
        let b = bias_bound(h, &p, n, 1.0);
        let rate = libm::pow(n as f64, -2.0 / 3.0);
        assert!((b - (2.0 * rate + rate * rate)).abs() < 1e-12);
        assert!((b - 4.33e-3).abs() < 3e-5);
    }

    #[test]
    fn bandwidth_rule() {
        assert_eq!(bandwidth(1024, 1.0, 1, 1.0), 0.03125);
        assert_eq!(bandwidth(1, 3.0, 2, 1.0), 1.0);
        assert_eq!(bandwidth(10, 1.0, 1, 5.0), 1.0);
        let r = bandwidth(16 * 500, 2.0, 1, 1.0) / bandwidth(500, 2.0, 1, 1.0);
        assert!((r - libm::pow(16.0, -1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn variance_and_mse() {
        assert_eq!(variance_bound(2.0, 4), 1.0);
        let p = HolderParams::with_beta(2.0, 1).unwrap();
        let mse = |n: usize| mse_bound(1.0, 1.0, bandwidth(n, 2.0, 1, 1.0), &p, n);
        let n = 1usize << 40;
        let ratio = mse(4 * n) / mse(n);
        assert!((ratio - 0.25).abs() < 0.01, "{ratio}");
    }

    /// Golden-section search for the minimizer of `bias_bound` in `ln h`.
    fn argmin_bias(n: usize, p: &HolderParams) -> f64 {
        let f = |t: f64| bias_bound(libm::exp(t), p, n, 1.0);
        let (mut a, mut b) = (-40.0f64, 0.0f64);
        let r = (libm::sqrt(5.0) - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        libm::exp(0.5 * (a + b))
    }

    #[test]
    fn bias_minimizer_scales_like_the_rule() {
        // Stationarity of h^β + 1/(n h^d) gives h* = (d/β)^{1/(β+d)} n^{-1/(β+d)};
        // the h^{2β} term is lower order.
        let n = 1usize << 40;
        for (beta, d) in [(1.0, 1), (2.0, 1), (2.0, 2), (3.0, 2)] {
            let p = HolderParams::with_beta(beta, d).unwrap();
            let ratio = argmin_bias(n, &p) / bandwidth(n, beta, d, 1.0);
            let expected = libm::pow(d as f64 / beta, 1.0 / (beta + d as f64));
            assert!((ratio / expected - 1.0).abs() < 1e-3, "β={beta} d={d}: {ratio} vs {expected}");
        }
        for (beta, d) in [(1.0, 1), (2.0, 2)] {
            let p = HolderParams::with_beta(beta, d).unwrap();
            let ratio = argmin_bias(10_000, &p) / bandwidth(10_000, beta, d, 1.0);
            assert!((ratio - 1.0).abs() < 0.05, "β={beta} d={d}: {ratio}");
        }
    }

    proptest! {
        #[test]
        fn deviation_is_monotone(a in 0.0f64..2.0, b in 0.0f64..2.0, n in 1usize..5000, k in 1usize..5, cv in 0.1f64..10.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(deviation_probability(lo, n, k, cv) >= deviation_probability(hi, n, k, cv));
        }

        #[test]
        fn mse_dominates_variance(cv in 0.1f64..10.0, cb in 0.0f64..10.0, h in 0.01f64..1.0, n in 1usize..100_000) {
            let p = HolderParams::with_beta(1.5, 2).unwrap();
            prop_assert!(mse_bound(cv, cb, h, &p, n) >= variance_bound(cv, n));
        }
    }
}
