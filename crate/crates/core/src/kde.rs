//! Boundary-mirrored kernel density estimation on `[0,1]^d`.
//!
//! Each sample coordinate `v` is reflected to `{v, -v, 2 - v}` and the
//! estimate is
//!
//! ```text
//! p̂(x) = (n h^d)^{-1} Σ_i Σ_{r ∈ images(X_i)} Π_j K((x_j - r_j) / h)
//! ```
//!
//! With support-`[-1,1]` kernels and `h ≤ 1` no other image can reach the
//! cube. The sum over the `3^d` images of a point factorizes into a product
//! of per-axis sums, which is what both evaluators below compute.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{invalid, Error, Result};
use crate::kernels::Kernel;
use crate::math;
use crate::par;
use crate::quadrature::Grid;
use crate::sample::Sample;

/// Anything that can be evaluated as a density on the unit cube.
pub trait DensitySource: Sync {
    fn dim(&self) -> usize;

    /// Density at `x`; `x` has length `dim()` and lies in the unit cube.
    fn density(&self, x: &[f64]) -> f64;

    /// Values on the tensor product of `axes` (row-major, last axis fastest).
    fn density_on_axes(&self, axes: &[&[f64]]) -> Vec<f64> {
        let len: usize = axes.iter().map(|a| a.len()).product();
        par::map_range(len, |i| {
            let mut p = vec![0.0; axes.len()];
            let mut rest = i;
            for (slot, axis) in p.iter_mut().zip(axes).rev() {
                *slot = axis[rest % axis.len()];
                rest /= axis.len();
            }
            self.density(&p)
        })
    }

    /// Values at every point of `grid`, in grid order.
    fn density_on_grid(&self, grid: &Grid) -> Vec<f64> {
        match grid.axis() {
            Some(axis) => {
                let axes = vec![axis; grid.dim()];
                self.density_on_axes(&axes)
            }
            None => par::map_range(grid.len(), |i| self.density(&grid.point(i))),
        }
    }
}

/// A closed-form density wrapped as a [`DensitySource`].
pub struct FnDensity<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnDensity<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> DensitySource for FnDensity<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn density(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Fitted mirrored KDE. Immutable; evaluation is safe from many threads.
#[derive(Debug, Clone)]
pub struct MirroredKde {
    sample: Sample,
    /// Sample rows sorted lexicographically, flat. Fixing the summation
    /// order this way makes the estimate independent of row order.
    sorted: Vec<f64>,
    kernel: Kernel,
    bandwidth: f64,
    scale: f64,
}

impl MirroredKde {
    pub fn fit(sample: Sample, kernel: Kernel, bandwidth: f64) -> Result<MirroredKde> {
        if !(bandwidth > 0.0 && bandwidth <= 1.0) {
            return Err(invalid("bandwidth", "bandwidth must lie in (0, 1]"));
        }
        let d = sample.dim();
        let mut rows: Vec<&[f64]> = sample.rows().collect();
        rows.sort_by(|a, b| lexicographic(a, b));
        let sorted: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        let scale = 1.0 / (sample.len() as f64 * math::powi(bandwidth, d as i32));
        Ok(MirroredKde {
            sample,
            sorted,
            kernel,
            bandwidth,
            scale,
        })
    }

    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn dim(&self) -> usize {
        self.sample.dim()
    }

    pub fn len(&self) -> usize {
        self.sample.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample.is_empty()
    }

    /// Sum of the kernel over the three images of `v`, seen from `x`.
    #[inline]
    fn mirrored(&self, x: f64, v: f64) -> f64 {
        let h = self.bandwidth;
        self.kernel.eval((x - v) / h) + self.kernel.eval((x + v) / h) + self.kernel.eval((x - 2.0 + v) / h)
    }

    #[inline]
    fn margin(&self) -> f64 {
        self.bandwidth * (1.0 + 1e-9)
    }

    /// Estimate at `x`, which must lie in the unit cube.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: x.len(),
                context: "query point",
            });
        }
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::QueryOutsideCube { point: x.to_vec() });
        }
        Ok(self.evaluate_unchecked(x))
    }

    fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let n = self.len();
        let r = self.margin();
        let x0 = x[0];
        // First-coordinate windows for the direct image and the two
        // reflections, merged in index space.
        let mut ranges = [
            self.first_coord_range(x0 - r, x0 + r),
            self.first_coord_range(f64::NEG_INFINITY, r - x0),
            self.first_coord_range(2.0 - x0 - r, f64::INFINITY),
        ];
        ranges.sort_by_key(|&(lo, _)| lo);
        let mut acc = 0.0;
        let mut next = 0;
        for (lo, hi) in ranges {
            let lo = lo.max(next);
            if lo >= hi {
                continue;
            }
            for i in lo..hi {
                let row = &self.sorted[i * d..(i + 1) * d];
                let mut prod = 1.0;
                for j in 0..d {
                    prod *= self.mirrored(x[j], row[j]);
                }
                acc += prod;
            }
            next = next.max(hi);
        }
        debug_assert!(next <= n);
        acc * self.scale
    }

    /// Index range of sorted rows whose first coordinate lies in `[lo, hi]`.
    fn first_coord_range(&self, lo: f64, hi: f64) -> (usize, usize) {
        let d = self.dim();
        let n = self.len();
        let first = |i: usize| self.sorted[i * d];
        let start = partition_point(n, |i| first(i) < lo);
        let end = partition_point(n, |i| first(i) <= hi);
        (start, end.max(start))
    }

    /// `min(κ₂, max(κ₁, p̂(x)))`.
    pub fn evaluate_clipped(&self, x: &[f64], kappa_min: f64, kappa_max: f64) -> Result<f64> {
        check_clip(kappa_min, kappa_max)?;
        Ok(self.evaluate(x)?.clamp(kappa_min, kappa_max))
    }

    /// Estimator with row `index` of the sample replaced by `point`.
    pub fn replace_point(&self, index: usize, point: &[f64]) -> Result<MirroredKde> {
        let sample = self.sample.with_row(index, point)?;
        MirroredKde::fit(sample, self.kernel.clone(), self.bandwidth)
    }

    /// Values on a tensor product of ascending coordinate lists. Bitwise
    /// equal to calling [`evaluate`](Self::evaluate) at every grid point,
    /// but each sample point only visits the cells it can reach.
    pub fn evaluate_on_axes(&self, axes: &[&[f64]]) -> Vec<f64> {
        let d = self.dim();
        assert_eq!(axes.len(), d, "one axis per dimension");
        let sizes: Vec<usize> = axes.iter().map(|a| a.len()).collect();
        let total: usize = sizes.iter().product();
        let mut strides = vec![1usize; d];
        for j in (0..d.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * sizes[j + 1];
        }
        let mut out = vec![0.0; total];
        let r = self.margin();
        let mut windows: Vec<(usize, Vec<f64>)> = vec![(0, Vec::new()); d];

        'points: for row in self.sorted.chunks_exact(d) {
            for j in 0..d {
                let axis = axes[j];
                let v = row[j];
                let lo = axis.partition_point(|&c| c < v - r);
                let hi = axis.partition_point(|&c| c <= v + r);
                if lo >= hi {
                    continue 'points;
                }
                let (start, vals) = &mut windows[j];
                *start = lo;
                vals.clear();
                vals.extend(axis[lo..hi].iter().map(|&c| self.mirrored(c, v)));
            }
            scatter(&windows, &strides, 0, 1.0, 0, &mut out);
        }
        for v in &mut out {
            *v *= self.scale;
        }
        out
    }
}

impl DensitySource for MirroredKde {
    fn dim(&self) -> usize {
        self.sample.dim()
    }

    fn density(&self, x: &[f64]) -> f64 {
        self.evaluate_unchecked(x)
    }

    fn density_on_axes(&self, axes: &[&[f64]]) -> Vec<f64> {
        self.evaluate_on_axes(axes)
    }
}

/// Same as [`MirroredKde::fit`].
pub fn fit(sample: Sample, kernel: Kernel, bandwidth: f64) -> Result<MirroredKde> {
    MirroredKde::fit(sample, kernel, bandwidth)
}

/// Summary of a KDE over a grid: mass, smallest and largest value.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GridSummary {
    pub mass: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(source: &dyn DensitySource, grid: &Grid) -> GridSummary {
    let values = source.density_on_grid(grid);
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    GridSummary {
        mass: grid.sum_values(&values),
        min,
        max,
    }
}

pub(crate) fn check_clip(kappa_min: f64, kappa_max: f64) -> Result<()> {
    if !(kappa_min > 0.0 && kappa_min <= kappa_max && kappa_max.is_finite()) {
        return Err(invalid("clip bounds", "need 0 < kappa_min <= kappa_max < inf"));
    }
    Ok(())
}

/// Adds the products of the per-axis window values into `out`. The running
/// product multiplies axes left to right, matching `evaluate`.
fn scatter(windows: &[(usize, Vec<f64>)], strides: &[usize], level: usize, base: f64, offset: usize, out: &mut [f64]) {
    let (start, vals) = &windows[level];
    let last = level + 1 == windows.len();
    for (k, &v) in vals.iter().enumerate() {
        let p = base * v;
        let o = offset + (start + k) * strides[level];
        if last {
            out[o] += p;
        } else {
            scatter(windows, strides, level + 1, p, o, out);
        }
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn partition_point(n: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}
