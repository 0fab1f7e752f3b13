//! Deterministic integration over the unit cube.
//!
//! Integrals are approximated by equal-weight rules: either a tensor grid of
//! cell midpoints or a seeded Monte-Carlo point set. Sums use pairwise
//! reduction in a fixed order, so results do not depend on thread count.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::par;

/// Largest number of points a midpoint grid may have.
pub const MAX_GRID_POINTS: u128 = 100_000_000;

/// Default midpoint resolution per axis for a cube of dimension `dim`.
pub fn default_resolution(dim: usize) -> usize {
    match dim {
        1 => 256,
        2 => 64,
        3 => 24,
        _ => 8,
    }
}

/// Default Monte-Carlo point count.
pub const DEFAULT_MC_POINTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "scheme", rename_all = "kebab-case"))]
pub enum Scheme {
    Midpoint { per_axis: usize },
    MonteCarlo { count: usize, seed: u64 },
}

/// Equal-weight point set on `[0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    scheme: Scheme,
    len: usize,
    /// Midpoint coordinates along one axis (midpoint scheme only).
    axis: Vec<f64>,
    /// Flat row-major points (Monte-Carlo scheme only).
    points: Vec<f64>,
}

impl Grid {
    /// Tensor grid of cell midpoints `(2i+1)/(2m)` with weight `m^{-d}`.
    pub fn midpoint(dim: usize, per_axis: usize) -> Result<Grid> {
        if dim == 0 {
            return Err(invalid("dim", "grid dimension must be at least 1"));
        }
        if per_axis == 0 {
            return Err(invalid("per_axis", "need at least one point per axis"));
        }
        let requested = (per_axis as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
        if requested > MAX_GRID_POINTS {
            return Err(Error::GridTooLarge {
                requested,
                limit: MAX_GRID_POINTS,
            });
        }
        let m = per_axis as f64;
        let axis = (0..per_axis).map(|i| (2 * i + 1) as f64 / (2.0 * m)).collect();
        Ok(Grid {
            dim,
            scheme: Scheme::Midpoint { per_axis },
            len: requested as usize,
            axis,
            points: Vec::new(),
        })
    }

    /// `count` uniform points from a generator seeded with `seed`.
    pub fn monte_carlo(dim: usize, count: usize, seed: u64) -> Result<Grid> {
        if dim == 0 {
            return Err(invalid("dim", "grid dimension must be at least 1"));
        }
        if count == 0 {
            return Err(invalid("count", "need at least one Monte-Carlo point"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..count * dim).map(|_| rng.random::<f64>()).collect();
        Ok(Grid {
            dim,
            scheme: Scheme::MonteCarlo { count, seed },
            len: count,
            axis: Vec::new(),
            points,
        })
    }

    /// Same scheme and resolution, different dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Grid> {
        match self.scheme {
            Scheme::Midpoint { per_axis } => Grid::midpoint(dim, per_axis),
            Scheme::MonteCarlo { count, seed } => Grid::monte_carlo(dim, count, seed),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.len as f64
    }

    /// Axis coordinates of a midpoint grid; `None` for Monte-Carlo grids.
    pub fn axis(&self) -> Option<&[f64]> {
        match self.scheme {
            Scheme::Midpoint { .. } => Some(&self.axis),
            Scheme::MonteCarlo { .. } => None,
        }
    }

    /// Writes point `i` into `out` (length `dim`). Midpoint grids are
    /// enumerated row-major with the last axis varying fastest.
    pub fn point_into(&self, i: usize, out: &mut [f64]) {
        match self.scheme {
            Scheme::Midpoint { per_axis } => {
                let mut rest = i;
                for slot in out.iter_mut().rev() {
                    *slot = self.axis[rest % per_axis];
                    rest /= per_axis;
                }
            }
            Scheme::MonteCarlo { .. } => {
                out.copy_from_slice(&self.points[i * self.dim..(i + 1) * self.dim]);
            }
        }
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        self.point_into(i, &mut p);
        p
    }

    /// All points, materialized.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    /// `weight · Σ values` with pairwise summation.
    pub fn sum_values(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len);
        pairwise_sum(values) * self.weight()
    }
}

/// Convenience constructor matching the midpoint-grid operation.
pub fn midpoint_grid(dim: usize, per_axis: usize) -> Result<Grid> {
    Grid::midpoint(dim, per_axis)
}

/// Convenience constructor matching the Monte-Carlo-grid operation.
pub fn mc_grid(dim: usize, count: usize, seed: u64) -> Result<Grid> {
    Grid::monte_carlo(dim, count, seed)
}

/// `weight · Σ f(point_i)`; fails on the first non-finite value.
pub fn integrate<F>(f: F, grid: &Grid) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let values = par::map_range(grid.len(), |i| {
        let p = grid.point(i);
        f(&p)
    });
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            value: values[i],
            point: grid.point(i),
            densities: Vec::new(),
        });
    }
    Ok(grid.sum_values(&values))
}

/// Pairwise (cascade) summation with a fixed split order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for &v in values {
            acc += v;
        }
        acc
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || math::abs(delta) <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn midpoint_points_and_weight() {
        let g = Grid::midpoint(1, 4).unwrap();
        assert_eq!(g.points(), vec![vec![0.125], vec![0.375], vec![0.625], vec![0.875]]);
        assert_eq!(g.weight(), 0.25);
        let g2 = Grid::midpoint(2, 2).unwrap();
        assert_eq!(g2.len(), 4);
        assert_eq!(g2.weight(), 0.25);
        assert_eq!(g2.point(1), vec![0.25, 0.75]);
        assert_eq!(g2.point(2), vec![0.75, 0.25]);
    }

    #[test]
    fn size_guard() {
        assert!(matches!(Grid::midpoint(9, 10), Err(Error::GridTooLarge { .. })));
        assert!(Grid::midpoint(8, 10).is_ok());
        assert!(Grid::midpoint(1, 0).is_err());
    }

    #[test]
    fn constants_integrate_exactly() {
        for g in [
            Grid::midpoint(1, 7).unwrap(),
            Grid::midpoint(3, 5).unwrap(),
            Grid::monte_carlo(2, 1000, 3).unwrap(),
        ] {
            assert_eq!(integrate(|_| 1.0, &g).unwrap(), 1.0);
        }
        let g = Grid::monte_carlo(1, 333, 9).unwrap();
        assert_eq!(integrate(|_| 2.5, &g).unwrap(), 2.5);
    }

    #[test]
    fn midpoint_rule_values() {
        let g = Grid::midpoint(1, 100).unwrap();
        assert_eq!(integrate(|x| x[0], &g).unwrap(), 0.5);
        let sq = integrate(|x| x[0] * x[0], &g).unwrap();
        assert!((sq - 1.0 / 3.0).abs() < 1e-4);
        let s = integrate(|x| math::sin(2.0 * PI * x[0]), &g).unwrap();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn midpoint_error_quarters() {
        let err = |m| (integrate(|x| x[0] * x[0], &Grid::midpoint(1, m).unwrap()).unwrap() - 1.0 / 3.0).abs();
        for m in [10, 20, 40, 80] {
            let ratio = err(m) / err(2 * m);
            assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio} at m={m}");
        }
    }

    #[test]
    fn monte_carlo_reproducible_and_unbiased() {
        let a = Grid::monte_carlo(2, 50, 11).unwrap();
        let b = Grid::monte_carlo(2, 50, 11).unwrap();
        assert_eq!(a.points(), b.points());
        let g = Grid::monte_carlo(1, 100_000, 5).unwrap();
        let m = integrate(|x| x[0], &g).unwrap();
        assert!((m - 0.5).abs() < 0.01);
        let again = integrate(|x| x[0], &Grid::monte_carlo(1, 100_000, 5).unwrap()).unwrap();
        assert_eq!(m.to_bits(), again.to_bits());
    }

    #[test]
    fn non_finite_reports_point() {
        let g = Grid::midpoint(1, 4).unwrap();
        let err = integrate(|x| if x[0] > 0.5 { f64::NAN } else { 0.0 }, &g).unwrap_err();
        match err {
            Error::NonFinite { point, .. } => assert_eq!(point, vec![0.625]),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn simpson_polynomial() {
        let v = adaptive_simpson(&|x: f64| x * x * x * x, -1.0, 1.0, 1e-13);
        assert!((v - 0.4).abs() < 1e-12);
    }

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
    }
}
