//! Plug-in estimates of `F(p_1,…,p_k) = ∫ f(p_1,…,p_k)`.
//!
//! Each density is replaced by its mirrored KDE, `f` is evaluated on a
//! quadrature grid and the result is integrated; an optional monotone
//! transform `φ` (e.g. `log(·)/(α-1)` for Rényi quantities) is applied to
//! the integral afterwards.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
use core::str::FromStr;

use crate::bounds::{self, HolderParams};
use crate::error::{invalid, Error, Result};
use crate::kde::{check_clip, DensitySource, MirroredKde};
use crate::kernels::Kernel;
use crate::math;
use crate::par;
use crate::quadrature::{Grid, Scheme};
use crate::sample::Sample;

pub use crate::bounds::bandwidth;

/// Shared scalar function of several arguments.
pub type VectorFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Built-in functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    ShannonEntropy,
    RenyiEntropy,
    TsallisEntropy,
    Kl,
    RenyiDivergence,
    TsallisDivergence,
    L2Distance,
    ShannonMi,
}

impl Builtin {
    pub const ALL: [Builtin; 8] = [
        Builtin::ShannonEntropy,
        Builtin::RenyiEntropy,
        Builtin::TsallisEntropy,
        Builtin::Kl,
        Builtin::RenyiDivergence,
        Builtin::TsallisDivergence,
        Builtin::L2Distance,
        Builtin::ShannonMi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::ShannonEntropy => "shannon-entropy",
            Builtin::RenyiEntropy => "renyi-entropy",
            Builtin::TsallisEntropy => "tsallis-entropy",
            Builtin::Kl => "kl",
            Builtin::RenyiDivergence => "renyi-divergence",
            Builtin::TsallisDivergence => "tsallis-divergence",
            Builtin::L2Distance => "l2-distance",
            Builtin::ShannonMi => "shannon-mi",
        }
    }

    pub fn needs_alpha(self) -> bool {
        matches!(
            self,
            Builtin::RenyiEntropy | Builtin::TsallisEntropy | Builtin::RenyiDivergence | Builtin::TsallisDivergence
        )
    }

    /// Whether estimates must be clipped to a user-supplied box before `f`
    /// is applied (logs and fractional powers are undefined or unbounded
    /// near zero, and higher-order kernels can produce negative values).
    pub fn requires_clip_box(self) -> bool {
        !matches!(self, Builtin::L2Distance)
    }

    /// Number of density arguments.
    pub fn arity(self) -> usize {
        match self {
            Builtin::ShannonEntropy | Builtin::RenyiEntropy | Builtin::TsallisEntropy => 1,
            Builtin::ShannonMi => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::UnknownFunctional(s.to_string()))
    }
}

/// Pointwise integrand `f: ℝ^k → ℝ`.
#[derive(Clone)]
pub enum Integrand {
    /// `-t ln t`
    NegEntropy,
    /// `t^α`
    Power { alpha: f64 },
    /// `s ln(s/t)`
    RelativeEntropy,
    /// `s^α t^{1-α}`
    PowerRatio { alpha: f64 },
    /// `(s - t)²`
    SquaredDifference,
    /// `s ln(s / (t u))`
    MutualInformation,
    Custom {
        arity: usize,
        f: VectorFn,
    },
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Integrand::NegEntropy => f.write_str("NegEntropy"),
            Integrand::Power { alpha } => write!(f, "Power({alpha})"),
            Integrand::RelativeEntropy => f.write_str("RelativeEntropy"),
            Integrand::PowerRatio { alpha } => write!(f, "PowerRatio({alpha})"),
            Integrand::SquaredDifference => f.write_str("SquaredDifference"),
            Integrand::MutualInformation => f.write_str("MutualInformation"),
            Integrand::Custom { arity, .. } => write!(f, "Custom(arity {arity})"),
        }
    }
}

impl Integrand {
    pub fn arity(&self) -> usize {
        match self {
            Integrand::NegEntropy | Integrand::Power { .. } => 1,
            Integrand::RelativeEntropy | Integrand::PowerRatio { .. } | Integrand::SquaredDifference => 2,
            Integrand::MutualInformation => 3,
            Integrand::Custom { arity, .. } => *arity,
        }
    }

    #[inline]
    pub fn eval(&self, t: &[f64]) -> f64 {
        match self {
            Integrand::NegEntropy => -t[0] * math::log(t[0]),
            Integrand::Power { alpha } => math::pow(t[0], *alpha),
            Integrand::RelativeEntropy => {
                if t[0] == t[1] {
                    0.0
                } else {
                    t[0] * math::log(t[0] / t[1])
                }
            }
            Integrand::PowerRatio { alpha } => math::pow(t[0], *alpha) * math::pow(t[1], 1.0 - alpha),
            Integrand::SquaredDifference => (t[0] - t[1]) * (t[0] - t[1]),
            Integrand::MutualInformation => t[0] * math::log(t[0] / (t[1] * t[2])),
            Integrand::Custom { f, .. } => f(t),
        }
    }
}

/// Monotone scalar map applied to the integral.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum Transform {
    /// `scale · ln u`
    Log { scale: f64 },
    /// `scale · (u - shift)`
    Affine { shift: f64, scale: f64 },
    /// `√u`
    Sqrt,
}

impl Transform {
    pub fn apply(&self, u: f64) -> f64 {
        match *self {
            Transform::Log { scale } => scale * math::log(u),
            Transform::Affine { shift, scale } => scale * (u - shift),
            Transform::Sqrt => math::sqrt(u),
        }
    }

    /// Image of `[lo, hi]`; `None` when the interval leaves the domain.
    pub fn map_interval(&self, lo: f64, hi: f64) -> Option<[f64; 2]> {
        let (lo, hi) = match self {
            Transform::Log { .. } if lo <= 0.0 => return None,
            // the integrand is a square, so the integral is never negative
            Transform::Sqrt => (lo.max(0.0), hi.max(0.0)),
            _ => (lo, hi),
        };
        let (a, b) = (self.apply(lo), self.apply(hi));
        Some([a.min(b), a.max(b)])
    }
}

/// How grid points are handed to the density arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ArgumentMode {
    /// Every density is evaluated at the same point of one cube.
    Shared,
    /// The grid lives on the product of the densities' cubes and density
    /// `i` sees block `i` of each point.
    Product,
    /// Argument 0 is a joint density over the whole grid; the remaining
    /// arguments are its marginals over consecutive coordinate blocks.
    JointAndMarginals,
}

impl ArgumentMode {
    /// Coordinate range of the grid point seen by each argument, and the
    /// grid dimension.
    pub fn ranges(&self, dims: &[usize]) -> Result<(Vec<Range<usize>>, usize)> {
        match self {
            ArgumentMode::Shared => {
                let d = dims[0];
                if let Some(&other) = dims.iter().find(|&&x| x != d) {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: other,
                        context: "shared-argument densities must have equal dimension",
                    });
                }
                Ok((vec![0..d; dims.len()], d))
            }
            ArgumentMode::Product => {
                let mut start = 0;
                let ranges = dims
                    .iter()
                    .map(|&d| {
                        let r = start..start + d;
                        start += d;
                        r
                    })
                    .collect();
                Ok((ranges, start))
            }
            ArgumentMode::JointAndMarginals => {
                let joint = dims[0];
                let mut start = 0;
                let mut ranges = Vec::with_capacity(dims.len());
                ranges.push(0..joint);
                for &d in &dims[1..] {
                    ranges.push(start..start + d);
                    start += d;
                }
                if start != joint {
                    return Err(Error::DimensionMismatch {
                        expected: joint,
                        found: start,
                        context: "marginal dimensions must add up to the joint dimension",
                    });
                }
                Ok((ranges, joint))
            }
        }
    }
}

/// A density functional: integrand, argument layout, optional outer
/// transform and the constants needed for its concentration bound.
#[derive(Debug, Clone)]
pub struct FunctionalSpec {
    pub name: String,
    pub builtin: Option<Builtin>,
    pub alpha: Option<f64>,
    pub integrand: Integrand,
    pub mode: ArgumentMode,
    pub transform: Option<Transform>,
    /// Lipschitz constant of `f` (1-norm) on `clip_box`.
    pub lipschitz: Option<f64>,
    /// `[κ₁, κ₂]`: estimates are clipped to it and `lipschitz` holds on it.
    pub clip_box: Option<(f64, f64)>,
}

impl FunctionalSpec {
    pub fn custom(
        name: &str,
        arity: usize,
        mode: ArgumentMode,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        FunctionalSpec {
            name: name.to_string(),
            builtin: None,
            alpha: None,
            integrand: Integrand::Custom { arity, f: Arc::new(f) },
            mode,
            transform: None,
            lipschitz: None,
            clip_box: None,
        }
    }

    pub fn arity(&self) -> usize {
        self.integrand.arity()
    }

    /// Clips estimates to `[κ₁, κ₂]` and records the Lipschitz constant of
    /// `f` on that box (when it has a closed form).
    pub fn with_clip_box(mut self, kappa_min: f64, kappa_max: f64) -> Result<Self> {
        check_clip(kappa_min, kappa_max)?;
        self.lipschitz = match self.integrand {
            Integrand::Custom { .. } => self.lipschitz,
            _ => Some(lipschitz_constant(&self, kappa_min, kappa_max)?),
        };
        self.clip_box = Some((kappa_min, kappa_max));
        Ok(self)
    }

    pub fn with_lipschitz(mut self, lipschitz: f64) -> Self {
        self.lipschitz = Some(lipschitz);
        self
    }

    pub fn with_transform(mut self, transform: Transform) -> Self {
        self.transform = Some(transform);
        self
    }
}

/// Builds one of the built-in functionals. `alpha` is required for the
/// Rényi and Tsallis families and must not equal one.
pub fn make_builtin(builtin: Builtin, alpha: Option<f64>) -> Result<FunctionalSpec> {
    let alpha = if builtin.needs_alpha() {
        let a = alpha.ok_or_else(|| invalid("alpha", format!("{builtin} needs an order α")))?;
        if !(a > 0.0 && a.is_finite()) || a == 1.0 {
            return Err(invalid("alpha", "α must lie in (0,1) ∪ (1,∞)"));
        }
        Some(a)
    } else {
        None
    };
    let a = alpha.unwrap_or(f64::NAN);
    let (integrand, mode, transform) = match builtin {
        Builtin::ShannonEntropy => (Integrand::NegEntropy, ArgumentMode::Shared, None),
        Builtin::RenyiEntropy => (
            Integrand::Power { alpha: a },
            ArgumentMode::Shared,
            Some(Transform::Log { scale: 1.0 / (1.0 - a) }),
        ),
        Builtin::TsallisEntropy => (
            Integrand::Power { alpha: a },
            ArgumentMode::Shared,
            Some(Transform::Affine {
                shift: 1.0,
                scale: -1.0 / (a - 1.0),
            }),
        ),
        Builtin::Kl => (Integrand::RelativeEntropy, ArgumentMode::Shared, None),
        Builtin::RenyiDivergence => (
            Integrand::PowerRatio { alpha: a },
            ArgumentMode::Shared,
            Some(Transform::Log { scale: 1.0 / (a - 1.0) }),
        ),
        Builtin::TsallisDivergence => (
            Integrand::PowerRatio { alpha: a },
            ArgumentMode::Shared,
            Some(Transform::Affine {
                shift: 1.0,
                scale: 1.0 / (a - 1.0),
            }),
        ),
        Builtin::L2Distance => (Integrand::SquaredDifference, ArgumentMode::Shared, Some(Transform::Sqrt)),
        Builtin::ShannonMi => (Integrand::MutualInformation, ArgumentMode::JointAndMarginals, None),
    };
    Ok(FunctionalSpec {
        name: builtin.name().to_string(),
        builtin: Some(builtin),
        alpha,
        integrand,
        mode,
        transform,
        lipschitz: None,
        clip_box: None,
    })
}

/// `sup ‖∇f‖_∞` over `[κ₁, κ₂]^k`, in closed form for the built-in
/// integrands.
pub fn lipschitz_constant(spec: &FunctionalSpec, kappa_min: f64, kappa_max: f64) -> Result<f64> {
    if !(kappa_min >= 0.0 && kappa_min <= kappa_max && kappa_max.is_finite()) {
        return Err(invalid("clip bounds", "need 0 <= kappa_min <= kappa_max < inf"));
    }
    let needs_positive = |what: &str| -> Result<()> {
        if kappa_min > 0.0 {
            Ok(())
        } else {
            Err(Error::UnboundedDerivative(format!("{what} has unbounded derivative at zero")))
        }
    };
    let rho = kappa_max / kappa_min;
    let c = match spec.integrand {
        Integrand::NegEntropy => {
            needs_positive("-t log t")?;
            // |d/dt| = |1 + ln t| is monotone away from 1/e, so the
            // supremum sits at an end of the box.
            math::abs(1.0 + math::log(kappa_min)).max(math::abs(1.0 + math::log(kappa_max)))
        }
        Integrand::Power { alpha } => {
            if alpha < 1.0 {
                needs_positive("t^α")?;
            }
            let g = |t: f64| math::abs(alpha) * math::pow(t, alpha - 1.0);
            g(kappa_min).max(g(kappa_max))
        }
        Integrand::RelativeEntropy => {
            needs_positive("s log(s/t)")?;
            // ∂s = 1 + ln(s/t), ∂t = -s/t with s/t ∈ [1/ρ, ρ]
            (1.0 + math::log(rho)).max(rho)
        }
        Integrand::PowerRatio { alpha } => {
            needs_positive("s^α t^(1-α)")?;
            // ∂s = α r^{α-1}, ∂t = (1-α) r^α with r = s/t ∈ [1/ρ, ρ]
            let ds = |r: f64| math::abs(alpha) * math::pow(r, alpha - 1.0);
            let dt = |r: f64| math::abs(1.0 - alpha) * math::pow(r, alpha);
            [ds(1.0 / rho), ds(rho), dt(1.0 / rho), dt(rho)].into_iter().fold(0.0, f64::max)
        }
        Integrand::SquaredDifference => 2.0 * (kappa_max - kappa_min),
        Integrand::MutualInformation => {
            needs_positive("s log(s/(t u))")?;
            // ∂s = 1 + ln(s/(t u)), ∂t = -s/t, ∂u = -s/u
            let hi = math::abs(1.0 + math::log(kappa_max / (kappa_min * kappa_min)));
            let lo = math::abs(1.0 + math::log(kappa_min / (kappa_max * kappa_max)));
            hi.max(lo).max(rho)
        }
        Integrand::Custom { .. } => {
            return Err(invalid("functional", "no closed-form Lipschitz constant for a custom integrand"));
        }
    };
    Ok(c)
}

/// Options for [`estimate`] beyond the functional, samples, kernel and grid.
#[derive(Debug, Clone, Default)]
pub struct EstimateOptions {
    /// Confidence level for the concentration interval.
    pub delta: Option<f64>,
    /// Smoothness class; enables the bias bound.
    pub holder: Option<HolderParams>,
    /// `C_B`; defaults to one.
    pub bias_constant: Option<f64>,
    /// Group label per argument. Arguments with the same label were fitted
    /// on the same rows. Defaults to all independent.
    pub sample_groups: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ClipCount {
    pub below: usize,
    pub above: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GridDescriptor {
    pub dim: usize,
    pub points: usize,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub scheme: Scheme,
}

impl From<&Grid> for GridDescriptor {
    fn from(g: &Grid) -> Self {
        GridDescriptor {
            dim: g.dim(),
            points: g.len(),
            scheme: g.scheme(),
        }
    }
}

/// Everything computed for one plug-in estimate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EstimateReport {
    pub functional: String,
    pub alpha: Option<f64>,
    /// `φ(inner_integral)`, or the integral itself without a transform.
    pub value: f64,
    pub inner_integral: f64,
    pub bandwidth: f64,
    pub kernel: Kernel,
    pub sample_sizes: Vec<usize>,
    pub dims: Vec<usize>,
    pub grid: GridDescriptor,
    /// Grid of the inner integral, for conditional functionals.
    pub inner_grid: Option<GridDescriptor>,
    pub clip_box: Option<[f64; 2]>,
    pub lipschitz_constant: Option<f64>,
    pub variance_constant: Option<f64>,
    /// Effective `k` in the exponent of the deviation bound.
    pub mcdiarmid_k: usize,
    pub delta: Option<f64>,
    pub ci_halfwidth: Option<f64>,
    pub inner_interval: Option<[f64; 2]>,
    pub value_interval: Option<[f64; 2]>,
    pub bias_bound: Option<f64>,
    pub bias_constant: f64,
    pub holder: Option<HolderParams>,
    pub clipping: Vec<ClipCount>,
    pub notes: Vec<String>,
}

/// Result of plugging density sources into a functional.
#[derive(Debug, Clone, PartialEq)]
pub struct PlugIn {
    pub inner_integral: f64,
    pub value: f64,
    pub clipping: Vec<ClipCount>,
}

/// Integrates `f` of the given densities over `grid` and applies the
/// transform. Estimates are clipped to the functional's box when `clip` is set.
pub fn plug_in(spec: &FunctionalSpec, sources: &[&dyn DensitySource], grid: &Grid, clip: bool) -> Result<PlugIn> {
    let k = spec.arity();
    if sources.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: sources.len(),
            context: "number of densities vs functional arity",
        });
    }
    let dims: Vec<usize> = sources.iter().map(|s| s.dim()).collect();
    let (ranges, grid_dim) = spec.mode.ranges(&dims)?;
    if grid.dim() != grid_dim {
        return Err(Error::DimensionMismatch {
            expected: grid_dim,
            found: grid.dim(),
            context: "grid dimension",
        });
    }

    // Density values per argument, in the argument's own index space.
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut clipping = Vec::with_capacity(k);
    for (src, range) in sources.iter().zip(&ranges) {
        let mut v = match grid.axis() {
            Some(axis) => {
                let axes = vec![axis; range.len()];
                src.density_on_axes(&axes)
            }
            None => par::map_range(grid.len(), |i| src.density(&grid.point(i)[range.clone()])),
        };
        let mut count = ClipCount {
            total: v.len(),
            ..ClipCount::default()
        };
        if let (true, Some((lo, hi))) = (clip, spec.clip_box) {
            for x in &mut v {
                if *x < lo {
                    count.below += 1;
                    *x = lo;
                } else if *x > hi {
                    count.above += 1;
                    *x = hi;
                }
            }
        }
        values.push(v);
        clipping.push(count);
    }

    let index_of = |arg: usize, i: usize| -> usize {
        match grid.scheme() {
            Scheme::Midpoint { per_axis } => {
                let r = &ranges[arg];
                let trailing = math::powi(per_axis as f64, (grid_dim - r.end) as i32) as usize;
                let span = values[arg].len();
                (i / trailing) % span
            }
            Scheme::MonteCarlo { .. } => i,
        }
    };
    let integrand = par::map_range(grid.len(), |i| {
        let mut args = [0.0f64; 8];
        let args: &mut [f64] = if k <= 8 { &mut args[..k] } else { unreachable_arity() };
        for (a, slot) in args.iter_mut().enumerate() {
            *slot = values[a][index_of(a, i)];
        }
        spec.integrand.eval(args)
    });
    if let Some(i) = integrand.iter().position(|v| !v.is_finite()) {
        let densities = (0..k).map(|a| values[a][index_of(a, i)]).collect();
        return Err(Error::NonFinite {
            value: integrand[i],
            point: grid.point(i),
            densities,
        });
    }
    let inner = grid.sum_values(&integrand);
    let value = spec.transform.map_or(inner, |t| t.apply(inner));
    Ok(PlugIn {
        inner_integral: inner,
        value,
        clipping,
    })
}

fn unreachable_arity() -> &'static mut [f64] {
    panic!("functionals with more than eight density arguments are not supported")
}

/// Fits one mirrored KDE per sample and returns the plug-in estimate with
/// its constants, concentration interval and bias bound.
pub fn estimate(
    spec: &FunctionalSpec,
    samples: &[Sample],
    kernel: &Kernel,
    bandwidth: f64,
    grid: &Grid,
    options: &EstimateOptions,
) -> Result<EstimateReport> {
    if spec.arity() > 8 {
        return Err(invalid("functional", "at most eight density arguments are supported"));
    }
    if samples.len() != spec.arity() {
        return Err(Error::DimensionMismatch {
            expected: spec.arity(),
            found: samples.len(),
            context: "number of samples vs functional arity",
        });
    }
    if spec.builtin.is_some_and(|b| b.requires_clip_box()) && spec.clip_box.is_none() {
        return Err(invalid(
            "kappa_min",
            format!("{} needs clip bounds kappa_min/kappa_max", spec.name),
        ));
    }
    let kdes = samples
        .iter()
        .map(|s| MirroredKde::fit(s.clone(), kernel.clone(), bandwidth))
        .collect::<Result<Vec<_>>>()?;
    let sources: Vec<&dyn DensitySource> = kdes.iter().map(|k| k as &dyn DensitySource).collect();
    let out = plug_in(spec, &sources, grid, true)?;

    let dims: Vec<usize> = samples.iter().map(|s| s.dim()).collect();
    let sample_sizes: Vec<usize> = samples.iter().map(|s| s.len()).collect();
    let n = *sample_sizes.iter().min().expect("at least one sample");
    let groups = match &options.sample_groups {
        Some(g) if g.len() == samples.len() => g.clone(),
        Some(_) => return Err(invalid("sample_groups", "one group label per density argument")),
        None => (0..samples.len()).collect(),
    };
    let k_eff = mcdiarmid_arity(&groups);

    let mut notes = Vec::new();
    let variance_constant = spec
        .lipschitz
        .map(|c| bounds::variance_constant(c, &dims, kernel.l1_norm()));
    let (ci_halfwidth, inner_interval, value_interval) = match (options.delta, variance_constant) {
        (Some(delta), Some(cv)) => {
            let eps = bounds::ci_halfwidth(delta, n, k_eff, cv)?;
            let lo = out.inner_integral - eps;
            let hi = out.inner_integral + eps;
            let mapped = match spec.transform {
                Some(t) => {
                    let m = t.map_interval(lo, hi);
                    if m.is_none() {
                        notes.push("confidence interval leaves the domain of the outer transform".to_string());
                    }
                    m
                }
                None => Some([lo, hi]),
            };
            (Some(eps), Some([lo, hi]), mapped)
        }
        (Some(_), None) => {
            notes.push("no Lipschitz constant available; concentration interval omitted".to_string());
            (None, None, None)
        }
        _ => (None, None, None),
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
    if groups.len() != dedup_count(&groups) {
        notes.push(
            "some density estimates share rows; they are not independent, so the concentration bound uses the shared-sample arity"
                .to_string(),
        );
    }
    if spec.transform.is_some() && ci_halfwidth.is_some() {
        notes.push("interval computed on the inner integral and mapped through the monotone outer transform".to_string());
    }

    Ok(EstimateReport {
        functional: spec.name.clone(),
        alpha: spec.alpha,
        value: out.value,
        inner_integral: out.inner_integral,
        bandwidth,
        kernel: kernel.clone(),
        sample_sizes,
        dims,
        grid: GridDescriptor::from(grid),
        inner_grid: None,
        clip_box: spec.clip_box.map(|(a, b)| [a, b]),
        lipschitz_constant: spec.lipschitz,
        variance_constant,
        mcdiarmid_k: k_eff,
        delta: options.delta,
        ci_halfwidth,
        inner_interval,
        value_interval,
        bias_bound,
        bias_constant,
        holder,
        clipping: out.clipping,
        notes,
    })
}

/// Effective `k` for McDiarmid's inequality. A point shared by `s`
/// estimates moves the estimate by up to `s C_V / n`, so the sum of squared
/// bounded differences is `(C_V²/n) Σ_groups s²`.
pub fn mcdiarmid_arity(groups: &[usize]) -> usize {
    let mut labels: Vec<usize> = groups.to_vec();
    labels.sort_unstable();
    labels
        .chunk_by(|a, b| a == b)
        .map(|c| c.len() * c.len())
        .sum()
}

fn dedup_count(groups: &[usize]) -> usize {
    let mut labels: Vec<usize> = groups.to_vec();
    labels.sort_unstable();
    labels.dedup();
    labels.len()
}

/// Samples for [`Builtin::ShannonMi`] from one joint sample whose first `dx`
/// columns are `X`. Without `split_seed` the marginals are projections of
/// the same rows; with it the rows are shuffled and halved, the joint is
/// fitted on one half and both marginals on the other. Returns the samples
/// and their group labels.
pub fn mutual_information_samples(joint: &Sample, dx: usize, split_seed: Option<u64>) -> Result<(Vec<Sample>, Vec<usize>)> {
    let d = joint.dim();
    if dx == 0 || dx >= d {
        return Err(invalid("dx", "X must take between 1 and d-1 of the joint columns"));
    }
    match split_seed {
        None => Ok((
            vec![joint.clone(), joint.project(0..dx)?, joint.project(dx..d)?],
            vec![0, 0, 0],
        )),
        Some(seed) => {
            let halves = joint.shuffled_split(2, seed)?;
            Ok((
                vec![halves[0].clone(), halves[1].project(0..dx)?, halves[1].project(dx..d)?],
                vec![0, 1, 1],
            ))
        }
    }
}
