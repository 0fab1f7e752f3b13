//! Conditional functionals
//!
//! ```text
//! F(P) = ∫_Z P(z) f( ∫_X g(P(x_1,z)/P(z), …, P(x_k,z)/P(z)) dx ) dz
//! ```
//!
//! estimated by clipping every density estimate to `[κ₁, κ₂]` and fitting
//! `P(z)` and the joints on disjoint halves of the data. Rényi-α conditional
//! mutual information is the instance with inner arguments
//! `P(x,y,z), P(x,z), P(y,z)`, `g(s,t,u) = s^α (t u)^{1-α}` and
//! `f = ln(·)/(α-1)`, the sign under which it is a Rényi divergence and
//! hence nonnegative.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use crate::bounds::{self, HolderParams};
use crate::error::{invalid, Error, Result};
use crate::functionals::{ClipCount, EstimateOptions, EstimateReport, GridDescriptor, VectorFn};
use crate::kde::{check_clip, DensitySource, MirroredKde};
use crate::kernels::Kernel;
use crate::math;
use crate::par;
use crate::quadrature::{pairwise_sum, Grid, Scheme};
use crate::sample::Sample;

/// Inner function `g` of the density ratios.
#[derive(Clone)]
pub enum InnerFn {
    /// `t`
    Identity,
    /// `t^α`
    Power { alpha: f64 },
    /// `s^α (t u)^{1-α}`
    RenyiCmi { alpha: f64 },
    Custom {
        arity: usize,
        g: VectorFn,
    },
}

impl fmt::Debug for InnerFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InnerFn::Identity => f.write_str("Identity"),
            InnerFn::Power { alpha } => write!(f, "Power({alpha})"),
            InnerFn::RenyiCmi { alpha } => write!(f, "RenyiCmi({alpha})"),
            InnerFn::Custom { arity, .. } => write!(f, "Custom(arity {arity})"),
        }
    }
}

impl InnerFn {
    pub fn arity(&self) -> usize {
        match self {
            InnerFn::Identity | InnerFn::Power { .. } => 1,
            InnerFn::RenyiCmi { .. } => 3,
            InnerFn::Custom { arity, .. } => *arity,
        }
    }

    #[inline]
    pub fn eval(&self, r: &[f64]) -> f64 {
        match self {
            InnerFn::Identity => r[0],
            InnerFn::Power { alpha } => math::pow(r[0], *alpha),
            InnerFn::RenyiCmi { alpha } => math::pow(r[0], *alpha) * math::pow(r[1] * r[2], 1.0 - alpha),
            InnerFn::Custom { g, .. } => g(r),
        }
    }

    /// `(inf g, sup g, sup ‖∇g‖₁)` over the ratio box `[1/ρ, ρ]^k`.
    fn box_constants(&self, rho: f64) -> (f64, f64, f64) {
        let lo = 1.0 / rho;
        match *self {
            InnerFn::Identity => (lo, rho, 1.0),
            InnerFn::Power { alpha } => {
                let (a, b) = (math::pow(lo, alpha), math::pow(rho, alpha));
                let d = |r: f64| math::abs(alpha) * math::pow(r, alpha - 1.0);
                (a.min(b), a.max(b), d(lo).max(d(rho)))
            }
            InnerFn::RenyiCmi { alpha } => {
                let e = math::abs(alpha) + 2.0 * math::abs(1.0 - alpha);
                // Each partial is a product of powers of the ratios, so its
                // supremum is `ρ` raised to the sum of absolute exponents.
                let ds = math::abs(alpha) * math::pow(rho, 3.0 * math::abs(1.0 - alpha));
                let dt = math::abs(1.0 - alpha) * math::pow(rho, 2.0 * math::abs(alpha) + math::abs(1.0 - alpha));
                (math::pow(rho, -e), math::pow(rho, e), ds + 2.0 * dt)
            }
            InnerFn::Custom { arity, ref g } => grid_search_inner(g.as_ref(), arity, lo, rho),
        }
    }
}

/// Range and gradient norm of a custom `g` by grid search (corners
/// included).
fn grid_search_inner(g: &(dyn Fn(&[f64]) -> f64 + Send + Sync), arity: usize, lo: f64, hi: f64) -> (f64, f64, f64) {
    let steps: usize = match arity {
        1 => 10_001,
        2 => 201,
        3 => 41,
        _ => 11,
    };
    let total = steps.pow(arity as u32);
    let node = |j: usize| if steps == 1 { lo } else { lo + (hi - lo) * j as f64 / (steps - 1) as f64 };
    let eps = (hi - lo) * 1e-6;
    let (mut min, mut max, mut grad) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    let mut r = vec![0.0; arity];
    for idx in 0..total {
        let mut rest = idx;
        for slot in r.iter_mut() {
            *slot = node(rest % steps);
            rest /= steps;
        }
        let v = g(&r);
        min = min.min(v);
        max = max.max(v);
        let mut norm = 0.0;
        for i in 0..arity {
            let mut a = r.clone();
            let mut b = r.clone();
            a[i] = (r[i] - eps).max(lo);
            b[i] = (r[i] + eps).min(hi);
            if b[i] > a[i] {
                norm += math::abs((g(&b) - g(&a)) / (b[i] - a[i]));
            }
        }
        grad = grad.max(norm);
    }
    (min, max, grad)
}

/// Outer function `f` of the inner integral.
#[derive(Clone)]
pub enum OuterFn {
    Identity,
    /// `scale · ln u`
    Log { scale: f64 },
    Custom {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        derivative: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for OuterFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OuterFn::Identity => f.write_str("Identity"),
            OuterFn::Log { scale } => write!(f, "Log({scale})"),
            OuterFn::Custom { .. } => f.write_str("Custom"),
        }
    }
}

impl OuterFn {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            OuterFn::Identity => u,
            OuterFn::Log { scale } => scale * math::log(u),
            OuterFn::Custom { f, .. } => f(u),
        }
    }

    /// `(sup |f|, sup |f'|)` over `[lo, hi]`.
    fn sup_bounds(&self, lo: f64, hi: f64) -> Result<(f64, f64)> {
        match self {
            OuterFn::Identity => Ok((math::abs(lo).max(math::abs(hi)), 1.0)),
            OuterFn::Log { scale } => {
                if lo <= 0.0 {
                    return Err(Error::UnboundedDerivative(
                        "outer log needs an inner integral bounded away from zero".to_string(),
                    ));
                }
                let s = math::abs(*scale);
                Ok((s * math::abs(math::log(lo)).max(math::abs(math::log(hi))), s / lo))
            }
            OuterFn::Custom { f, derivative } => {
                const STEPS: usize = 10_001;
                let mut cf = 0.0f64;
                let mut cd = 0.0f64;
                for j in 0..STEPS {
                    let u = lo + (hi - lo) * j as f64 / (STEPS - 1) as f64;
                    cf = cf.max(math::abs(f(u)));
                    cd = cd.max(math::abs(derivative(u)));
                }
                if !(cf.is_finite() && cd.is_finite()) {
                    return Err(Error::UnboundedDerivative("custom outer function is unbounded on the inner range".to_string()));
                }
                Ok((cf, cd))
            }
        }
    }
}

/// A conditional functional with its clip box and derived constants.
#[derive(Debug, Clone)]
pub struct ConditionalSpec {
    pub name: String,
    pub inner: InnerFn,
    pub outer: OuterFn,
    pub kappa_min: f64,
    pub kappa_max: f64,
    /// Coordinates of the inner point seen by each joint density `P(x_i, z)`.
    pub inner_ranges: Vec<Range<usize>>,
    /// Dimension of the inner integration domain.
    pub inner_dim: usize,
    pub dz: usize,
    /// `inf g` over the clipped ratio box.
    pub c_g: f64,
    /// `sup g` over the clipped ratio box.
    pub big_c_g: f64,
    /// `sup ‖∇g‖₁` over the clipped ratio box.
    pub grad_g: f64,
    /// `sup |f|` over `[c_g, C_g]`.
    pub c_f: f64,
    /// `sup |f'|` over `[c_g, C_g]`.
    pub c_f_prime: f64,
}

impl ConditionalSpec {
    /// General constructor. `inner_ranges[i]` picks the coordinates of the
    /// inner point that density `i` sees.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        inner: InnerFn,
        outer: OuterFn,
        kappa_min: f64,
        kappa_max: f64,
        inner_ranges: Vec<Range<usize>>,
        inner_dim: usize,
        dz: usize,
    ) -> Result<Self> {
        check_clip(kappa_min, kappa_max)?;
        if inner.arity() != inner_ranges.len() {
            return Err(Error::DimensionMismatch {
                expected: inner.arity(),
                found: inner_ranges.len(),
                context: "inner function arity vs number of joint densities",
            });
        }
        if inner_dim == 0 || dz == 0 {
            return Err(invalid("dims", "inner and conditioning dimensions must be positive"));
        }
        if let Some(r) = inner_ranges.iter().find(|r| r.is_empty() || r.end > inner_dim) {
            return Err(invalid("inner_ranges", format!("range {r:?} is empty or exceeds {inner_dim}")));
        }
        let rho = kappa_max / kappa_min;
        let (c_g, big_c_g, grad_g) = inner.box_constants(rho);
        let (c_f, c_f_prime) = outer.sup_bounds(c_g, big_c_g)?;
        Ok(ConditionalSpec {
            name: name.to_string(),
            inner,
            outer,
            kappa_min,
            kappa_max,
            inner_ranges,
            inner_dim,
            dz,
            c_g,
            big_c_g,
            grad_g,
            c_f,
            c_f_prime,
        })
    }

    /// Inner arguments `P(x_1,z), …, P(x_k,z)` over consecutive blocks of
    /// dimensions `dx`.
    pub fn blocks(name: &str, inner: InnerFn, outer: OuterFn, kappa_min: f64, kappa_max: f64, dx: &[usize], dz: usize) -> Result<Self> {
        let mut start = 0;
        let ranges = dx
            .iter()
            .map(|&d| {
                let r = start..start + d;
                start += d;
                r
            })
            .collect();
        Self::new(name, inner, outer, kappa_min, kappa_max, ranges, start, dz)
    }

    /// Rényi-α conditional mutual information of `X` (`dx` columns) and `Y`
    /// (`dy` columns) given `Z`.
    pub fn renyi_cmi(alpha: f64, kappa_min: f64, kappa_max: f64, dx: usize, dy: usize, dz: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if dx == 0 || dy == 0 {
            return Err(invalid("dims", "X and Y need at least one column each"));
        }
        Self::new(
            "renyi-cmi",
            InnerFn::RenyiCmi { alpha },
            OuterFn::Log { scale: 1.0 / (alpha - 1.0) },
            kappa_min,
            kappa_max,
            vec![0..dx + dy, 0..dx, dx..dx + dy],
            dx + dy,
            dz,
        )
    }

    pub fn arity(&self) -> usize {
        self.inner_ranges.len()
    }

    /// Bounded-difference constant for a generic `(g, f)` pair, where the
    /// estimate moves by at most `C_V / n` when one point of either half is
    /// replaced.
    ///
    /// A point in the `z` half perturbs `P̂(z)` by `δ` with
    /// `∫|δ| ≤ 2 l1^{d_z} / n`. This moves the outer weight (at most
    /// `C_f ∫|δ|`) and every ratio `A/P̂(z)` (by at most
    /// `ρ ‖∇g‖₁ |δ| / κ₁` through `g`, times `κ₂ C_{f'}` through `f` and the
    /// weight). A point in the joint half perturbs each joint by `δ_i`, and
    /// `g` by at most `‖∇g‖₁ |δ_i| / κ₁`.
    pub fn variance_constant(&self, l1: f64) -> f64 {
        let rho = self.kappa_max / self.kappa_min;
        let case_z = self.c_f + rho * rho * self.c_f_prime * self.grad_g;
        let case_joint = rho * self.c_f_prime * self.grad_g;
        2.0 * case_z.max(case_joint) * math::powi(l1, (self.inner_dim + self.dz) as i32)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) || alpha == 1.0 {
        return Err(invalid("alpha", "α must lie in (0,1) ∪ (1,∞)"));
    }
    Ok(())
}

/// Disjoint halves of the data: one for `P(z)`, one for the joints.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitData {
    /// `d_z` columns.
    pub sample_z: Sample,
    /// Inner coordinates followed by the `d_z` conditioning columns.
    pub sample_joint: Sample,
}

impl SplitData {
    /// Seeded shuffle, then first half for `P(z)` (last `dz` columns only)
    /// and second half for the joints.
    pub fn split(data: &Sample, dz: usize, seed: u64) -> Result<Self> {
        let d = data.dim();
        if dz == 0 || dz >= d {
            return Err(invalid("dz", "Z must take between 1 and d-1 columns"));
        }
        let halves = data.shuffled_split(2, seed)?;
        Ok(SplitData {
            sample_z: halves[0].project(d - dz..d)?,
            sample_joint: halves[1].clone(),
        })
    }
}

/// Value of a conditional functional plus clipping diagnostics for `P(z)`
/// followed by each joint.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalOutcome {
    pub value: f64,
    pub clipping: Vec<ClipCount>,
}

fn clip_values(values: &mut [f64], lo: f64, hi: f64) -> ClipCount {
    let mut c = ClipCount {
        total: values.len(),
        ..ClipCount::default()
    };
    for v in values {
        if *v < lo {
            c.below += 1;
            *v = lo;
        } else if *v > hi {
            c.above += 1;
            *v = hi;
        }
    }
    c
}

/// Evaluates the clipped plug-in on arbitrary density sources: `p_z` on
/// `[0,1]^{d_z}` and one joint per inner argument on
/// `[0,1]^{|range_i| + d_z}` (inner coordinates first). Closed-form
/// densities can be injected here to separate quadrature error from
/// estimation error.
pub fn evaluate_conditional(
    spec: &ConditionalSpec,
    p_z: &dyn DensitySource,
    joints: &[&dyn DensitySource],
    grid_z: &Grid,
    grid_x: &Grid,
) -> Result<ConditionalOutcome> {
    if joints.len() != spec.arity() {
        return Err(Error::DimensionMismatch {
            expected: spec.arity(),
            found: joints.len(),
            context: "number of joint densities",
        });
    }
    if p_z.dim() != spec.dz || grid_z.dim() != spec.dz {
        return Err(Error::DimensionMismatch {
            expected: spec.dz,
            found: if p_z.dim() != spec.dz { p_z.dim() } else { grid_z.dim() },
            context: "conditioning density or grid dimension",
        });
    }
    if grid_x.dim() != spec.inner_dim {
        return Err(Error::DimensionMismatch {
            expected: spec.inner_dim,
            found: grid_x.dim(),
            context: "inner grid dimension",
        });
    }
    for (j, r) in joints.iter().zip(&spec.inner_ranges) {
        if j.dim() != r.len() + spec.dz {
            return Err(Error::DimensionMismatch {
                expected: r.len() + spec.dz,
                found: j.dim(),
                context: "joint density dimension",
            });
        }
    }
    let (lo, hi) = (spec.kappa_min, spec.kappa_max);
    let nz = grid_z.len();
    let nx = grid_x.len();

    let mut pz = p_z.density_on_grid(grid_z);
    let mut clipping = vec![clip_values(&mut pz, lo, hi)];

    // Joint `i` is stored as [sub-index of the inner point][z index].
    let mut joint_values = Vec::with_capacity(joints.len());
    let mut sub_len = Vec::with_capacity(joints.len());
    for (j, r) in joints.iter().zip(&spec.inner_ranges) {
        let mut v = match (grid_x.axis(), grid_z.axis()) {
            (Some(ax), Some(az)) => {
                let mut axes = vec![ax; r.len()];
                axes.extend(core::iter::repeat_n(az, spec.dz));
                j.density_on_axes(&axes)
            }
            _ => {
                let n_inner = if grid_x.axis().is_some() { inner_sub_count(grid_x, r) } else { nx };
                par::map_range(n_inner * nz, |idx| {
                    let (xi, zi) = (idx / nz, idx % nz);
                    let mut p = sub_point(grid_x, r, xi);
                    p.extend(grid_z.point(zi));
                    j.density(&p)
                })
            }
        };
        clipping.push(clip_values(&mut v, lo, hi));
        sub_len.push(v.len() / nz);
        joint_values.push(v);
    }

    let sub_index = |arg: usize, i: usize| -> usize {
        match grid_x.scheme() {
            Scheme::Midpoint { per_axis } => {
                let r = &spec.inner_ranges[arg];
                let trailing = math::powi(per_axis as f64, (spec.inner_dim - r.end) as i32) as usize;
                (i / trailing) % sub_len[arg]
            }
            Scheme::MonteCarlo { .. } => i,
        }
    };

    let k = spec.arity();
    let outer_terms = par::map_range(nz, |zi| -> core::result::Result<f64, (usize, f64, Vec<f64>)> {
        let p = pz[zi];
        let mut ratios = vec![0.0; k];
        let mut inner = Vec::with_capacity(nx);
        for i in 0..nx {
            for (a, slot) in ratios.iter_mut().enumerate() {
                let joint = joint_values[a][sub_index(a, i) * nz + zi];
                *slot = joint / p;
            }
            inner.push(spec.inner.eval(&ratios));
        }
        let g = pairwise_sum(&inner) * grid_x.weight();
        let term = p * spec.outer.eval(g);
        if term.is_finite() {
            Ok(term)
        } else {
            Err((zi, term, vec![p, g]))
        }
    });
    let mut terms = Vec::with_capacity(nz);
    for t in outer_terms {
        match t {
            Ok(v) => terms.push(v),
            Err((zi, value, densities)) => {
                return Err(Error::NonFinite {
                    value,
                    point: grid_z.point(zi),
                    densities,
                })
            }
        }
    }
    Ok(ConditionalOutcome {
        value: grid_z.sum_values(&terms),
        clipping,
    })
}

fn inner_sub_count(grid_x: &Grid, r: &Range<usize>) -> usize {
    match grid_x.scheme() {
        Scheme::Midpoint { per_axis } => per_axis.pow(r.len() as u32),
        Scheme::MonteCarlo { count, .. } => count,
    }
}

/// Coordinates of sub-point `idx` for range `r`: a sub-tensor point for
/// midpoint grids, the slice of grid point `idx` otherwise.
fn sub_point(grid_x: &Grid, r: &Range<usize>, idx: usize) -> Vec<f64> {
    match grid_x.axis() {
        Some(axis) => {
            let m = axis.len();
            let mut p = vec![0.0; r.len()];
            let mut rest = idx;
            for slot in p.iter_mut().rev() {
                *slot = axis[rest % m];
                rest /= m;
            }
            p
        }
        None => grid_x.point(idx)[r.clone()].to_vec(),
    }
}

/// Fits `P(z)` on `data.sample_z` and one joint per inner argument on the
/// matching columns of `data.sample_joint`, then evaluates the clipped
/// plug-in. The report's bound uses `k = 2` (two independent halves).
pub fn estimate_conditional(
    spec: &ConditionalSpec,
    data: &SplitData,
    kernel: &Kernel,
    bandwidth: f64,
    grid_z: &Grid,
    grid_x: &Grid,
    options: &EstimateOptions,
) -> Result<EstimateReport> {
    let d_joint = spec.inner_dim + spec.dz;
    if data.sample_joint.dim() != d_joint {
        return Err(Error::DimensionMismatch {
            expected: d_joint,
            found: data.sample_joint.dim(),
            context: "joint sample columns",
        });
    }
    let z_cols: Vec<usize> = (spec.inner_dim..d_joint).collect();
    let joint_samples = spec
        .inner_ranges
        .iter()
        .map(|r| {
            let cols: Vec<usize> = r.clone().chain(z_cols.iter().copied()).collect();
            data.sample_joint.select_columns(&cols)
        })
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<Sample> = core::iter::once(data.sample_z.clone()).chain(joint_samples).collect();
    let groups: Vec<usize> = core::iter::once(0).chain(core::iter::repeat_n(1, spec.arity())).collect();
    fit_and_report(spec, &samples, &groups, kernel, bandwidth, grid_z, grid_x, options, spec.variance_constant(kernel.l1_norm()), None, 1)
}

#[allow(clippy::too_many_arguments)]
fn fit_and_report(
    spec: &ConditionalSpec,
    samples: &[Sample],
    groups: &[usize],
    kernel: &Kernel,
    bandwidth: f64,
    grid_z: &Grid,
    grid_x: &Grid,
    options: &EstimateOptions,
    variance_constant: f64,
    alpha: Option<f64>,
    min_arity: usize,
) -> Result<EstimateReport> {
    let kdes = samples
        .iter()
        .map(|s| MirroredKde::fit(s.clone(), kernel.clone(), bandwidth))
        .collect::<Result<Vec<_>>>()?;
    let joints: Vec<&dyn DensitySource> = kdes[1..].iter().map(|k| k as &dyn DensitySource).collect();
    let out = evaluate_conditional(spec, &kdes[0], &joints, grid_z, grid_x)?;

    let sample_sizes: Vec<usize> = samples.iter().map(|s| s.len()).collect();
    let dims: Vec<usize> = samples.iter().map(|s| s.dim()).collect();
    let n = *sample_sizes.iter().min().expect("non-empty");
    let mut distinct = groups.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let k_eff = min_arity.max(distinct.len());

    let mut notes = vec![
        "all density estimates clipped to [kappa_min, kappa_max] before forming ratios".to_string(),
    ];
    let (ci_halfwidth, interval) = match options.delta {
        Some(delta) => {
            let eps = bounds::ci_halfwidth(delta, n, k_eff, variance_constant)?;
            (Some(eps), Some([out.value - eps, out.value + eps]))
        }
        None => (None, None),
    };
    let bias_constant = options.bias_constant.unwrap_or(1.0);
    let holder = options.holder.map(|h| HolderParams {
        dim: dims.iter().copied().max().unwrap_or(h.dim),
        ..h
    });
    let bias_bound = holder.map(|h| bounds::bias_bound(bandwidth, &h, n, bias_constant));
    if bias_bound.is_some() {
        notes.push("bias bound holds up to the unknown constant C_B".to_string());
    }

    Ok(EstimateReport {
        functional: spec.name.clone(),
        alpha,
        value: out.value,
        inner_integral: out.value,
        bandwidth,
        kernel: kernel.clone(),
        sample_sizes,
        dims,
        grid: GridDescriptor::from(grid_z),
        inner_grid: Some(GridDescriptor::from(grid_x)),
        clip_box: Some([spec.kappa_min, spec.kappa_max]),
        lipschitz_constant: Some(spec.c_f_prime),
        variance_constant: Some(variance_constant),
        mcdiarmid_k: k_eff,
        delta: options.delta,
        ci_halfwidth,
        inner_interval: interval,
        value_interval: interval,
        bias_bound,
        bias_constant,
        holder,
        clipping: out.clipping,
        notes,
    })
}

/// How the data are divided between the four CMI density estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum CmiSplit {
    /// `P(z)` on one half; `P(x,y,z)`, `P(x,z)`, `P(y,z)` on the other.
    #[default]
    TwoWay,
    /// One quarter per density.
    FourWay,
}

/// Column counts of `X`, `Y`, `Z` (stored in that order).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CmiDims {
    pub dx: usize,
    pub dy: usize,
    pub dz: usize,
}

impl CmiDims {
    pub fn total(&self) -> usize {
        self.dx + self.dy + self.dz
    }
}

/// Samples feeding `P(z)`, `P(x,y,z)`, `P(x,z)`, `P(y,z)`, with a group
/// label per sample (equal labels share rows).
#[derive(Debug, Clone, PartialEq)]
pub struct CmiSamples {
    pub z: Sample,
    pub xyz: Sample,
    pub xz: Sample,
    pub yz: Sample,
    pub groups: [usize; 4],
}

impl CmiSamples {
    pub fn split(data: &Sample, dims: CmiDims, split: CmiSplit, seed: u64) -> Result<Self> {
        if data.dim() != dims.total() {
            return Err(Error::DimensionMismatch {
                expected: dims.total(),
                found: data.dim(),
                context: "data columns vs dx + dy + dz",
            });
        }
        let CmiDims { dx, dy, dz } = dims;
        let d = dims.total();
        let xz_cols: Vec<usize> = (0..dx).chain(dx + dy..d).collect();
        let yz_cols: Vec<usize> = (dx..d).collect();
        match split {
            CmiSplit::TwoWay => {
                let h = data.shuffled_split(2, seed)?;
                Ok(CmiSamples {
                    z: h[0].project(dx + dy..d)?,
                    xyz: h[1].clone(),
                    xz: h[1].select_columns(&xz_cols)?,
                    yz: h[1].select_columns(&yz_cols)?,
                    groups: [0, 1, 1, 1],
                })
            }
            CmiSplit::FourWay => {
                let q = data.shuffled_split(4, seed)?;
                let _ = dz;
                Ok(CmiSamples {
                    z: q[0].project(dx + dy..d)?,
                    xyz: q[1].clone(),
                    xz: q[2].select_columns(&xz_cols)?,
                    yz: q[3].select_columns(&yz_cols)?,
                    groups: [0, 1, 2, 3],
                })
            }
        }
    }

    fn as_vec(&self) -> Vec<Sample> {
        vec![self.z.clone(), self.xyz.clone(), self.xz.clone(), self.yz.clone()]
    }
}

/// Everything [`renyi_cmi`] needs besides the data.
#[derive(Debug, Clone)]
pub struct CmiConfig {
    pub alpha: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub kernel: Kernel,
    pub bandwidth: f64,
    pub grid_z: Grid,
    pub grid_xy: Grid,
    pub options: EstimateOptions,
}

/// Rényi-α CMI from one `(x, y, z)` sample: seeded split, then
/// [`renyi_cmi_from_samples`].
pub fn renyi_cmi(data: &Sample, dims: CmiDims, split: CmiSplit, seed: u64, config: &CmiConfig) -> Result<EstimateReport> {
    let samples = CmiSamples::split(data, dims, split, seed)?;
    renyi_cmi_from_samples(&samples, dims, config)
}

/// McDiarmid arity used for CMI intervals: one per density estimate, which
/// is at least the number of independent sample groups.
pub const CMI_ARITY: usize = 4;

/// Rényi-α CMI from already split samples.
pub fn renyi_cmi_from_samples(samples: &CmiSamples, dims: CmiDims, config: &CmiConfig) -> Result<EstimateReport> {
    let spec = ConditionalSpec::renyi_cmi(config.alpha, config.kappa_min, config.kappa_max, dims.dx, dims.dy, dims.dz)?;
    let cv = cmi_variance_constant(config.alpha, config.kappa_min, config.kappa_max, config.kernel.l1_norm(), dims.dx, dims.dy, dims.dz)?;
    let mut report = fit_and_report(
        &spec,
        &samples.as_vec(),
        &samples.groups,
        &config.kernel,
        config.bandwidth,
        &config.grid_z,
        &config.grid_xy,
        &config.options,
        cv,
        Some(config.alpha),
        CMI_ARITY,
    )?;
    if samples.groups[1] == samples.groups[2] {
        report
            .notes
            .push("P(x,y,z), P(x,z), P(y,z) fitted on the same half; their marginal consistency is not enforced".to_string());
    }
    Ok(report)
}

/// `κ*` for Rényi-α CMI: replacing one point moves the estimate by at most
/// `κ* l1^{d_x+d_y+d_z} / n`.
///
/// In terms of the clipped densities `A = P̂(x,y,z)`, `B = P̂(x,z)`,
/// `C = P̂(y,z)` and `P = P̂(z)`, all in `[κ₁, κ₂]`,
///
/// ```text
/// g = A^α (BC)^{1-α} P^{α-2},   f = ln(·)/(α-1)
/// ```
///
/// Every quantity below is a product of powers of independent variables in
/// `[κ₁, κ₂]`, so its extremes sit at corners of the box. With
/// `[g₋, g₊]` the range of `g`:
///
/// ```text
/// C_f  = sup |f|  = max(|ln g₋|, |ln g₊|) / |α-1|
/// C_f' = sup |f'| = 1 / (|α-1| g₋)
/// ```
///
/// A point in the `z` half perturbs `P` by `δ` with `∫|δ| ≤ 2 l1^{d_z}/n`.
/// The outer weight moves by at most `C_f ∫|δ|` and `f(G)` by at most
/// `C_f' sup|∂g/∂P| ∫|δ|` under a weight of at most `κ₂`:
///
/// ```text
/// case_z     = C_f + κ₂ C_f' sup|∂g/∂P|
/// ```
///
/// A point in the joint half perturbs `A`, `B` and `C` together; each
/// perturbation has `L¹` mass at most `2 l1^{d_x+d_y+d_z}/n` once unused
/// coordinates are integrated out:
///
/// ```text
/// case_joint = κ₂ C_f' (sup|∂g/∂A| + sup|∂g/∂B| + sup|∂g/∂C|)
/// ```
///
/// `κ* = 2 max(case_z, case_joint)`. Both cases are homogeneous of degree
/// zero in `(κ₁, κ₂)`, so `κ*` depends only on `α` and `κ₂/κ₁`.
pub fn cmi_variance_constant(alpha: f64, kappa_min: f64, kappa_max: f64, l1: f64, dx: usize, dy: usize, dz: usize) -> Result<f64> {
    check_alpha(alpha)?;
    check_clip(kappa_min, kappa_max)?;
    Ok(cmi_kappa_star(alpha, kappa_max / kappa_min) * math::powi(l1, (dx + dy + dz) as i32))
}

/// `κ*` as a function of `α` and `ρ = κ₂/κ₁` only (computed on `[1, ρ]`).
pub fn cmi_kappa_star(alpha: f64, rho: f64) -> f64 {
    let (lo, hi) = (1.0, rho);
    // sup / inf over the box of Π v_i^{e_i}
    let sup = |e: [f64; 4]| e.iter().map(|&x| math::pow(lo, x).max(math::pow(hi, x))).product::<f64>();
    let inf = |e: [f64; 4]| e.iter().map(|&x| math::pow(lo, x).min(math::pow(hi, x))).product::<f64>();
    let b = 1.0 - alpha;
    let g_exp = [alpha, b, b, alpha - 2.0];
    let (g_min, g_max) = (inf(g_exp), sup(g_exp));
    let c_f = math::abs(math::log(g_min)).max(math::abs(math::log(g_max))) / math::abs(b);
    let c_fp = 1.0 / (math::abs(b) * g_min);
    let d_p = math::abs(alpha - 2.0) * sup([alpha, b, b, alpha - 3.0]);
    let d_a = math::abs(alpha) * sup([alpha - 1.0, b, b, alpha - 2.0]);
    let d_b = math::abs(b) * sup([alpha, -alpha, b, alpha - 2.0]);
    let case_z = c_f + hi * c_fp * d_p;
    let case_joint = hi * c_fp * (d_a + 2.0 * d_b);
    2.0 * case_z.max(case_joint)
}
