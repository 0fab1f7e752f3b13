//! Polynomial kernels on `[-1, 1]` with vanishing moments.
//!
//! A kernel of order `ℓ` integrates to one and has `∫ u^j K(u) du = 0` for
//! `j = 1..=ℓ`. For `ℓ ≤ 1` we use Epanechnikov. For larger `ℓ` the kernel
//! is an even combination of Legendre polynomials `P_0, P_2, …, P_{s-2}`,
//! where `s` is the smallest even integer above `ℓ`; the coefficients come
//! from solving the moment equations directly.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::quadrature::adaptive_simpson;

/// Largest supported number of vanishing moments.
pub const MAX_ORDER: usize = 10;

/// A kernel with support `[-1, 1]`, stored as monomial coefficients
/// (ascending powers).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Kernel {
    order: usize,
    coefficients: Vec<f64>,
    l1_norm: f64,
}

impl Kernel {
    /// Builds the kernel with vanishing moments `1..=order`.
    pub fn new(order: usize) -> Result<Kernel> {
        if order > MAX_ORDER {
            return Err(invalid(
                "kernel order",
                format!("at most {MAX_ORDER} vanishing moments are supported, got {order}"),
            ));
        }
        let coefficients = if order <= 1 {
            vec![0.75, 0.0, -0.75]
        } else {
            legendre_kernel_coefficients(order)?
        };
        let l1_norm = l1_norm_of(&coefficients);
        Ok(Kernel {
            order,
            coefficients,
            l1_norm,
        })
    }

    /// Epanechnikov kernel `0.75 (1 - u²)`.
    pub fn epanechnikov() -> Kernel {
        Kernel::new(1).expect("order 1 is always constructible")
    }

    /// Number of vanishing moments requested at construction.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `∫ |K|`, at least one; equal to one iff the kernel is nonnegative.
    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn is_nonnegative(&self) -> bool {
        self.order <= 1
    }

    /// Kernel value; exactly zero outside `[-1, 1]`.
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if !(-1.0..=1.0).contains(&u) {
            return 0.0;
        }
        horner(&self.coefficients, u)
    }
}

/// Same as [`Kernel::new`].
pub fn make_kernel(order: usize) -> Result<Kernel> {
    Kernel::new(order)
}

pub fn eval_kernel(kernel: &Kernel, u: f64) -> f64 {
    kernel.eval(u)
}

pub fn kernel_l1_norm(kernel: &Kernel) -> f64 {
    kernel.l1_norm()
}

#[inline]
fn horner(coefficients: &[f64], u: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * u + c)
}

/// Monomial coefficients of the Legendre polynomials `P_0..=P_max`.
fn legendre_monomials(max: usize) -> Vec<Vec<f64>> {
    let mut polys: Vec<Vec<f64>> = Vec::with_capacity(max + 1);
    polys.push(vec![1.0]);
    if max >= 1 {
        polys.push(vec![0.0, 1.0]);
    }
    for n in 1..max {
        // (n+1) P_{n+1} = (2n+1) u P_n - n P_{n-1}
        let mut next = vec![0.0; n + 2];
        for (t, &c) in polys[n].iter().enumerate() {
            next[t + 1] += (2 * n + 1) as f64 * c;
        }
        for (t, &c) in polys[n - 1].iter().enumerate() {
            next[t] -= n as f64 * c;
        }
        for c in &mut next {
            *c /= (n + 1) as f64;
        }
        polys.push(next);
    }
    polys
}

/// `∫_{-1}^{1} u^k du`.
fn monomial_moment(k: usize) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        2.0 / (k + 1) as f64
    }
}

fn legendre_kernel_coefficients(order: usize) -> Result<Vec<f64>> {
    let s = if order.is_multiple_of(2) { order + 2 } else { order + 1 };
    let unknowns = s / 2;
    let polys = legendre_monomials(s - 2);

    // Row i: ∫ u^{2i} K = δ_{i0}; column j: coefficient of P_{2j}.
    let mut a = vec![vec![0.0; unknowns + 1]; unknowns];
    for (i, row) in a.iter_mut().enumerate() {
        for j in 0..unknowns {
            row[j] = polys[2 * j]
                .iter()
                .enumerate()
                .map(|(t, &c)| c * monomial_moment(2 * i + t))
                .sum();
        }
        row[unknowns] = if i == 0 { 1.0 } else { 0.0 };
    }
    let weights = solve(a)?;

    let mut coefficients = vec![0.0; s - 1];
    for (j, w) in weights.iter().enumerate() {
        for (t, &c) in polys[2 * j].iter().enumerate() {
            coefficients[t] += w * c;
        }
    }
    Ok(coefficients)
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve(mut a: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| math::abs(a[r][col]).total_cmp(&math::abs(a[s][col])))
            .expect("non-empty pivot range");
        if math::abs(a[pivot][col]) < 1e-14 {
            return Err(Error::KernelConstruction(format!(
                "moment system is singular at column {col}"
            )));
        }
        a.swap(col, pivot);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            let (top, bottom) = a.split_at_mut(r);
            for (x, y) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                *x -= factor * y;
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][n] - tail) / a[r][r];
    }
    Ok(x)
}

/// `∫_{-1}^{1} |p(u)| du`: split at sign changes, then adaptive Simpson on
/// each polynomial piece.
fn l1_norm_of(coefficients: &[f64]) -> f64 {
    const SCAN: usize = 4096;
    let p = |u: f64| horner(coefficients, u);
    let mut breaks = vec![-1.0];
    let mut prev = p(-1.0);
    for i in 1..=SCAN {
        let u = -1.0 + 2.0 * i as f64 / SCAN as f64;
        let v = p(u);
        if prev * v < 0.0 {
            let (mut lo, mut hi) = (u - 2.0 / SCAN as f64, u);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if p(lo) * p(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            breaks.push(0.5 * (lo + hi));
        }
        prev = v;
    }
    breaks.push(1.0);
    breaks
        .windows(2)
        .map(|w| math::abs(adaptive_simpson(&p, w[0], w[1], 1e-14)))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Gauss–Legendre nodes/weights via Newton iteration on `P_n`.
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        let pi = core::f64::consts::PI;
        (0..n)
            .map(|i| {
                let mut x = math::cos(pi * (i as f64 + 0.75) / (n as f64 + 0.5));
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    }

    fn gl_moment(k: &Kernel, j: i32) -> f64 {
        gauss_legendre(64).iter().map(|&(x, w)| w * math::powi(x, j) * k.eval(x)).sum()
    }

    #[test]
    fn epanechnikov_values() {
        let k = Kernel::new(1).unwrap();
        assert_eq!(k.eval(0.0), 0.75);
        assert_eq!(k.eval(1.0), 0.0);
        assert_eq!(k.eval(2.0), 0.0);
        assert_eq!(k.eval(-1.5), 0.0);
        assert!(gl_moment(&k, 1).abs() < 1e-15);
        assert!((k.l1_norm() - 1.0).abs() < 1e-12);
        assert_eq!(Kernel::new(0).unwrap().coefficients(), k.coefficients());
    }

    #[test]
    fn fourth_order_closed_form() {
        // Orthogonality gives K = 9/8 - 15/8 u².
        let k = Kernel::new(2).unwrap();
        let c = k.coefficients();
        assert!((c[0] - 1.125).abs() < 1e-14);
        assert!(c[1].abs() < 1e-14);
        assert!((c[2] + 1.875).abs() < 1e-14);
        assert_eq!(Kernel::new(3).unwrap().coefficients(), c);
    }

    #[test]
    fn moments_vanish_under_gauss_legendre() {
        for order in 1..=MAX_ORDER {
            let k = Kernel::new(order).unwrap();
            assert!((gl_moment(&k, 0) - 1.0).abs() < 1e-9, "order {order} mass");
            for j in 1..=order as i32 {
                assert!(gl_moment(&k, j).abs() < 1e-9, "order {order} moment {j}");
            }
        }
    }

    #[test]
    fn higher_order_l1_exceeds_one() {
        for order in 2..=MAX_ORDER {
            let k = Kernel::new(order).unwrap();
            assert!(k.l1_norm() > 1.0, "order {order}");
        }
    }

    #[test]
    fn l1_matches_riemann_sum() {
        for order in [1, 3, 5, 10] {
            let k = Kernel::new(order).unwrap();
            let m = 1_000_000;
            let h = 2.0 / m as f64;
            let riemann: f64 = (0..m).map(|i| k.eval(-1.0 + (i as f64 + 0.5) * h).abs()).sum::<f64>() * h;
            assert!((riemann - k.l1_norm()).abs() < 1e-6, "order {order}: {riemann} vs {}", k.l1_norm());
        }
    }

    #[test]
    fn rejects_large_order() {
        assert!(Kernel::new(MAX_ORDER + 1).is_err());
    }

    proptest! {
        #[test]
        fn kernels_are_even(u in -1.5f64..1.5, order in 0usize..=MAX_ORDER) {
            let k = Kernel::new(order).unwrap();
            prop_assert!((k.eval(u) - k.eval(-u)).abs() <= 1e-12 * (1.0 + k.eval(u).abs()));
        }
    }
}
