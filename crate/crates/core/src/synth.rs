//! Synthetic densities with known functionals, exact samplers, quadrature
//! oracles and the rate and concentration experiments.
//!
//! The test family is
//!
//! ```text
//! p(x) = 1 + a (Π_j (2 sin²(π x_j))^m - c),   c = (C(2m, m) / 2^m)^d
//! ```
//!
//! `c` is `∫ Π_j (2 sin²)^m`, so `∫ p = 1`. The product vanishes to order
//! `2m` at every face, so all derivatives of order below `2m` vanish on the
//! boundary and `p` is flat there, which is what the mirrored estimator
//! needs to keep its bias rate.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds;
use crate::error::{invalid, Error, Result};
use crate::functionals::{estimate, plug_in, EstimateOptions, FunctionalSpec};
use crate::kde::DensitySource;
use crate::kernels::Kernel;
use crate::math;
use crate::par;
use crate::quadrature::Grid;
use crate::sample::Sample;

/// Member of the trig family above.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TrigDensity {
    dim: usize,
    amplitude: f64,
    order: u32,
    normalizer: f64,
}

impl TrigDensity {
    pub fn new(dim: usize, amplitude: f64, order: u32) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        if order == 0 {
            return Err(invalid("m", "boundary order must be at least 1"));
        }
        if !(0.0..1.0).contains(&amplitude) {
            return Err(invalid("a", "amplitude must lie in [0, 1)"));
        }
        let normalizer = math::powi(central_binomial(order) / math::powi(2.0, order as i32), dim as i32);
        if amplitude * normalizer >= 1.0 {
            return Err(invalid("a", "amplitude too large: the density would reach zero"));
        }
        Ok(TrigDensity {
            dim,
            amplitude,
            order,
            normalizer,
        })
    }

    /// Uniform density on `[0,1]^d`.
    pub fn uniform(dim: usize) -> Result<Self> {
        Self::new(dim, 0.0, 1)
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// `c = ∫ Π_j (2 sin²(π x_j))^m`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// `inf p = 1 - a c`.
    pub fn lower_bound(&self) -> f64 {
        1.0 - self.amplitude * self.normalizer
    }

    /// `sup p = 1 + a (2^{md} - c)`.
    pub fn envelope(&self) -> f64 {
        1.0 + self.amplitude * (math::powi(2.0, (self.order as usize * self.dim) as i32) - self.normalizer)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let prod: f64 = x
            .iter()
            .map(|&v| {
                let s = math::sin(core::f64::consts::PI * v);
                math::powi(2.0 * s * s, self.order as i32)
            })
            .product();
        1.0 + self.amplitude * (prod - self.normalizer)
    }
}

impl DensitySource for TrigDensity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn density(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

/// `C(2m, m)`.
fn central_binomial(m: u32) -> f64 {
    (1..=m).fold(1.0, |acc, i| acc * (m + i) as f64 / i as f64)
}

/// `n` draws from `density` by rejection from the uniform proposal with
/// envelope `envelope ≥ sup density`. Returns the sample and the number of
/// proposals used.
pub fn rejection_sample(density: &dyn DensitySource, envelope: f64, n: usize, seed: u64) -> Result<(Sample, usize)> {
    if n == 0 {
        return Err(invalid("n", "need at least one draw"));
    }
    if !(envelope > 0.0 && envelope.is_finite()) {
        return Err(invalid("envelope", "must be positive and finite"));
    }
    let d = density.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * d);
    let mut point = vec![0.0; d];
    let mut proposals = 0usize;
    while data.len() < n * d {
        for slot in point.iter_mut() {
            *slot = rng.random::<f64>();
        }
        proposals += 1;
        let u: f64 = rng.random::<f64>() * envelope;
        if u < density.density(&point) {
            data.extend_from_slice(&point);
        }
    }
    Ok((Sample::new(data, d)?, proposals))
}

/// `n` i.i.d. draws from `p`; reproducible per seed.
pub fn sample_density(p: &TrigDensity, n: usize, seed: u64) -> Result<Sample> {
    rejection_sample(p, p.envelope(), n, seed).map(|(s, _)| s)
}

/// Independent seed for trial `index` of an experiment seeded with `seed`.
pub fn trial_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.next_u64()
}

/// Midpoint resolution per axis used by [`oracle_functional`] in dimension
/// `dim`, if supported.
pub fn oracle_resolution(dim: usize) -> Option<usize> {
    match dim {
        1 => Some(100_000),
        2 => Some(1024),
        3 => Some(128),
        _ => None,
    }
}

/// `φ(∫ f(p_1,…,p_k))` on the true densities by midpoint quadrature, at the
/// resolution from [`oracle_resolution`] and again at twice that; fails if
/// the two differ by `1e-6` or more. Returns the finer value.
pub fn oracle_functional(spec: &FunctionalSpec, densities: &[&dyn DensitySource]) -> Result<f64> {
    let dims: Vec<usize> = densities.iter().map(|d| d.dim()).collect();
    if dims.is_empty() {
        return Err(invalid("densities", "need at least one density"));
    }
    let (_, grid_dim) = spec.mode.ranges(&dims)?;
    let m = oracle_resolution(grid_dim)
        .ok_or_else(|| Error::OracleResolution(alloc::format!("no oracle resolution for dimension {grid_dim}")))?;
    let coarse = plug_in(spec, densities, &Grid::midpoint(grid_dim, m)?, false)?;
    let fine = plug_in(spec, densities, &Grid::midpoint(grid_dim, 2 * m)?, false)?;
    if math::abs(fine.value - coarse.value) >= 1e-6 {
        return Err(Error::OracleResolution(alloc::format!(
            "doubling the resolution moved the value from {} to {}",
            coarse.value,
            fine.value
        )));
    }
    Ok(fine.value)
}

/// Estimator settings shared by the experiments.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kernel: Kernel,
    /// Smoothness used in the bandwidth rule.
    pub beta: f64,
    pub bandwidth_const: f64,
    pub grid: Grid,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RateRow {
    pub n: usize,
    pub bandwidth: f64,
    pub mean_abs_error: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RateResult {
    pub oracle: f64,
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `ln(mean |error|)` against `ln n`.
    pub slope: f64,
    /// 95% percentile-bootstrap interval for the slope.
    pub slope_ci: [f64; 2],
    /// `-β/(β+d)`.
    pub target_slope: f64,
    pub trials: usize,
}

/// Draws every argument of `spec` independently from `p`.
fn draw_estimate(spec: &FunctionalSpec, p: &TrigDensity, n: usize, seed: u64, config: &ExperimentConfig) -> Result<(f64, f64)> {
    let samples = (0..spec.arity())
        .map(|i| sample_density(p, n, trial_seed(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let h = bounds::bandwidth(n, config.beta, p.dim, config.bandwidth_const);
    let r = estimate(spec, &samples, &config.kernel, h, &config.grid, &EstimateOptions::default())?;
    Ok((r.value, r.inner_integral))
}

/// Least-squares slope of `y` on `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

const BOOTSTRAP_REPLICATES: usize = 400;

/// Mean absolute error against the oracle at each `n`, and the fitted
/// log-log slope.
pub fn rate_experiment(
    p: &TrigDensity,
    spec: &FunctionalSpec,
    n_list: &[usize],
    trials: usize,
    seed: u64,
    config: &ExperimentConfig,
) -> Result<RateResult> {
    if n_list.len() < 2 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("n_list", "need at least two strictly increasing sample sizes"));
    }
    if trials == 0 {
        return Err(invalid("trials", "need at least one trial"));
    }
    let args: Vec<&dyn DensitySource> = (0..spec.arity()).map(|_| p as &dyn DensitySource).collect();
    let oracle = oracle_functional(spec, &args)?;

    let jobs = n_list.len() * trials;
    let outcomes = par::map_range(jobs, |j| {
        let ni = j / trials;
        draw_estimate(spec, p, n_list[ni], trial_seed(seed, j as u64), config).map(|(v, _)| math::abs(v - oracle))
    });
    let errors = outcomes.into_iter().collect::<Result<Vec<f64>>>()?;

    let mut rows = Vec::with_capacity(n_list.len());
    for (ni, &n) in n_list.iter().enumerate() {
        let e = &errors[ni * trials..(ni + 1) * trials];
        let mean = e.iter().sum::<f64>() / trials as f64;
        let var = if trials > 1 {
            e.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (trials - 1) as f64
        } else {
            0.0
        };
        rows.push(RateRow {
            n,
            bandwidth: bounds::bandwidth(n, config.beta, p.dim, config.bandwidth_const),
            mean_abs_error: mean,
            std_error: math::sqrt(var / trials as f64),
        });
    }
    let lx: Vec<f64> = n_list.iter().map(|&n| math::log(n as f64)).collect();
    let ly: Vec<f64> = rows.iter().map(|r| math::log(r.mean_abs_error)).collect();
    let slope = fit_slope(&lx, &ly);

    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, u64::MAX));
    let mut boot: Vec<f64> = (0..BOOTSTRAP_REPLICATES)
        .map(|_| {
            let ly: Vec<f64> = (0..n_list.len())
                .map(|ni| {
                    let e = &errors[ni * trials..(ni + 1) * trials];
                    let s: f64 = (0..trials).map(|_| e[rng.random_range(0..trials)]).sum();
                    math::log(s / trials as f64)
                })
                .collect();
            fit_slope(&lx, &ly)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let pick = |q: f64| boot[((q * (BOOTSTRAP_REPLICATES - 1) as f64) as usize).min(BOOTSTRAP_REPLICATES - 1)];

    Ok(RateResult {
        oracle,
        rows,
        slope,
        slope_ci: [pick(0.025), pick(0.975)],
        target_slope: -config.beta / (config.beta + p.dim as f64),
        trials,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TailRow {
    pub epsilon: f64,
    pub empirical: f64,
    pub bound: f64,
    /// `3 sqrt(bound (1 - bound) / trials)`.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConcentrationResult {
    pub n: usize,
    pub trials: usize,
    pub bandwidth: f64,
    pub variance_constant: f64,
    pub k: usize,
    /// Sample mean of the pre-transform estimates.
    pub mean: f64,
    pub sample_std: f64,
    pub rows: Vec<TailRow>,
}

/// Smallest trial count accepted by [`concentration_experiment`].
pub const MIN_TAIL_TRIALS: usize = 200;

/// Default `ε` values: zero and the halfwidths at `δ ∈ {0.9, 0.5, 0.1, 0.01}`.
pub fn default_epsilons(n: usize, k: usize, variance_constant: f64) -> Vec<f64> {
    let mut eps = vec![0.0];
    for delta in [0.9, 0.5, 0.1, 0.01] {
        eps.push(bounds::ci_halfwidth(delta, n, k, variance_constant).expect("δ in (0,1)"));
    }
    eps
}

/// Empirical frequency of `|F̂ - mean(F̂)| > ε` for the pre-transform
/// estimate, next to the deviation bound. `spec` must carry a Lipschitz
/// constant. With `epsilons = None` uses [`default_epsilons`].
pub fn concentration_experiment(
    p: &TrigDensity,
    spec: &FunctionalSpec,
    n: usize,
    trials: usize,
    epsilons: Option<&[f64]>,
    seed: u64,
    config: &ExperimentConfig,
) -> Result<ConcentrationResult> {
    if trials < MIN_TAIL_TRIALS {
        return Err(invalid("trials", alloc::format!("need at least {MIN_TAIL_TRIALS} trials")));
    }
    let lipschitz = spec
        .lipschitz
        .ok_or_else(|| invalid("functional", "concentration needs a Lipschitz constant (set a clip box)"))?;
    let dims = vec![p.dim; spec.arity()];
    let k = spec.arity();
    let cv = bounds::variance_constant(lipschitz, &dims, config.kernel.l1_norm());
    let outcomes = par::map_range(trials, |t| draw_estimate(spec, p, n, trial_seed(seed, t as u64), config).map(|(_, inner)| inner));
    let values = outcomes.into_iter().collect::<Result<Vec<f64>>>()?;
    let mean = values.iter().sum::<f64>() / trials as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (trials - 1) as f64;

    let eps = match epsilons {
        Some(e) => e.to_vec(),
        None => default_epsilons(n, k, cv),
    };
    let rows = eps
        .into_iter()
        .map(|epsilon| {
            let exceed = values.iter().filter(|v| math::abs(*v - mean) > epsilon).count();
            let bound = bounds::deviation_probability(epsilon, n, k, cv);
            TailRow {
                epsilon,
                empirical: exceed as f64 / trials as f64,
                bound,
                tolerance: 3.0 * math::sqrt(bound * (1.0 - bound) / trials as f64),
            }
        })
        .collect();
    Ok(ConcentrationResult {
        n,
        trials,
        bandwidth: bounds::bandwidth(n, config.beta, p.dim, config.bandwidth_const),
        variance_constant: cv,
        k,
        mean,
        sample_std: math::sqrt(var),
        rows,
    })
}
