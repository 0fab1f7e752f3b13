use std::path::Path;

use denfunc_core::bounds::{self, HolderParams};
use denfunc_core::citest::{conditional_independence_test, CiTestConfig, Decision, Mode};
use denfunc_core::conditional::{renyi_cmi, CmiConfig, CmiDims, CmiSplit};
use denfunc_core::functionals::{estimate, make_builtin, mutual_information_samples, Builtin, EstimateOptions, FunctionalSpec};
use denfunc_core::kde::{summarize, MirroredKde};
use denfunc_core::quadrature::{default_resolution, Grid};
use denfunc_core::synth::{concentration_experiment, rate_experiment, trial_seed, ExperimentConfig, TrigDensity};
use denfunc_core::{Kernel, Sample, SCHEMA_VERSION, VERSION};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    BandwidthArgs, BoundsArgs, CitestArgs, ClipArgs, CmiArgs, CmiCommon, EstimateArgs, GridArgs, KdeCheckArgs, ModeArg,
    RateArgs, SplitArg, SynthArgs, TailArgs,
};
use crate::error::{CliError, CliResult};
use crate::input::{read_sample, write_csv, write_json};

/// Exit code for a rejected conditional-independence hypothesis.
pub const EXIT_REJECT: i32 = 3;

#[derive(Serialize)]
struct Document<'a, R: Serialize> {
    command: &'a str,
    library_version: &'a str,
    schema_version: &'a str,
    config: Value,
    result: R,
}

fn emit<R: Serialize>(command: &str, config: Value, result: R, out: Option<&Path>) -> CliResult<()> {
    let doc = Document {
        command,
        library_version: VERSION,
        schema_version: SCHEMA_VERSION,
        config,
        result,
    };
    write_json(&doc, out)
}

fn positive(flag: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(format!("{flag} must be positive and finite, got {v}")))
    }
}

fn check_delta(delta: f64) -> CliResult<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(CliError::config(format!("--delta must lie in (0, 1), got {delta}")))
    }
}

fn check_alpha(alpha: f64) -> CliResult<()> {
    positive("--alpha", alpha)?;
    if alpha == 1.0 {
        return Err(CliError::config("--alpha must differ from 1"));
    }
    Ok(())
}

fn check_bias_const(c: f64) -> CliResult<()> {
    if c >= 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(format!("--bias-const must be nonnegative and finite, got {c}")))
    }
}

/// Validated `(κ₁, κ₂)`, or `None` when neither flag is given.
fn clip_box(clip: &ClipArgs) -> CliResult<Option<(f64, f64)>> {
    match (clip.kappa_min, clip.kappa_max) {
        (None, None) => Ok(None),
        (None, Some(_)) => Err(CliError::config("--kappa-max given without --kappa-min")),
        (Some(_), None) => Err(CliError::config("--kappa-min given without --kappa-max")),
        (Some(lo), Some(hi)) => {
            positive("--kappa-min", lo)?;
            positive("--kappa-max", hi)?;
            if lo > hi {
                return Err(CliError::config(format!("--kappa-min {lo} exceeds --kappa-max {hi}")));
            }
            Ok(Some((lo, hi)))
        }
    }
}

fn required_clip_box(clip: &ClipArgs, what: &str) -> CliResult<(f64, f64)> {
    if clip.kappa_min.is_none() {
        return Err(CliError::config(format!("missing required flag --kappa-min for {what}")));
    }
    if clip.kappa_max.is_none() {
        return Err(CliError::config(format!("missing required flag --kappa-max for {what}")));
    }
    Ok(clip_box(clip)?.expect("both bounds present"))
}

fn kernel_for(order: Option<usize>, beta: Option<f64>) -> CliResult<Kernel> {
    let order = match (order, beta) {
        (Some(l), _) => l,
        (None, Some(b)) => HolderParams::with_beta(b, 1)?.ell().max(1),
        (None, None) => 1,
    };
    Ok(Kernel::new(order)?)
}

/// Checked bandwidth flags: either an explicit `h` or `β` for the rule.
fn check_bandwidth(args: &BandwidthArgs) -> CliResult<()> {
    if let Some(b) = args.beta {
        positive("--beta", b)?;
    }
    if let Some(c) = args.bandwidth_const {
        positive("--bandwidth-const", c)?;
    }
    match args.bandwidth {
        Some(h) if !(h > 0.0 && h <= 1.0) => Err(CliError::config(format!("--bandwidth must lie in (0, 1], got {h}"))),
        Some(_) => Ok(()),
        None if args.beta.is_none() => Err(CliError::config("either --beta or --bandwidth is required")),
        None => Ok(()),
    }
}

fn resolve_bandwidth(args: &BandwidthArgs, n: usize, dim: usize) -> (f64, Value) {
    match args.bandwidth {
        Some(h) => (h, json!({ "rule": "explicit", "h": h })),
        None => {
            let beta = args.beta.expect("checked");
            let c = args.bandwidth_const.unwrap_or(1.0);
            let h = bounds::bandwidth(n, beta, dim, c);
            (h, json!({ "rule": "c n^(-1/(beta+d))", "c": c, "beta": beta, "n": n, "d": dim, "h": h }))
        }
    }
}

fn check_grid(args: &GridArgs) -> CliResult<()> {
    match (args.grid, args.mc) {
        (Some(0), _) => Err(CliError::config("--grid must be at least 1")),
        (_, Some(0)) => Err(CliError::config("--mc must be at least 1")),
        _ => Ok(()),
    }
}

fn resolve_grid(args: &GridArgs, dim: usize, seed: u64) -> CliResult<Grid> {
    Ok(match args.mc {
        Some(count) => Grid::monte_carlo(dim, count, seed)?,
        None => Grid::midpoint(dim, args.grid.unwrap_or_else(|| default_resolution(dim)))?,
    })
}

fn kernel_json(k: &Kernel) -> Value {
    json!({ "order": k.order(), "l1_norm": k.l1_norm() })
}

fn grid_json(g: &Grid) -> Value {
    let mut v = json!({ "dim": g.dim(), "points": g.len() });
    if let (Value::Object(out), Value::Object(scheme)) = (&mut v, json!(g.scheme())) {
        out.extend(scheme);
    }
    v
}

fn parse_functional(name: &str, alpha: Option<f64>) -> CliResult<(Builtin, FunctionalSpec)> {
    let builtin: Builtin = name.parse().map_err(|_| {
        let known: Vec<&str> = Builtin::ALL.iter().map(|b| b.name()).collect();
        CliError::config(format!("unknown --functional `{name}` (known: {})", known.join(", ")))
    })?;
    if let Some(a) = alpha {
        check_alpha(a)?;
    }
    if builtin.needs_alpha() && alpha.is_none() {
        return Err(CliError::config(format!("missing required flag --alpha for {name}")));
    }
    Ok((builtin, make_builtin(builtin, alpha)?))
}

fn with_clip(builtin: Builtin, spec: FunctionalSpec, clip: &ClipArgs) -> CliResult<FunctionalSpec> {
    let bounds = if builtin.requires_clip_box() {
        Some(required_clip_box(clip, builtin.name())?)
    } else {
        clip_box(clip)?
    };
    Ok(match bounds {
        Some((lo, hi)) => spec.with_clip_box(lo, hi)?,
        None => spec,
    })
}

pub fn run_estimate(args: &EstimateArgs) -> CliResult<i32> {
    let (builtin, spec) = parse_functional(&args.functional, args.alpha)?;
    let spec = with_clip(builtin, spec, &args.clip)?;
    check_bandwidth(&args.bandwidth)?;
    check_grid(&args.grid)?;
    if let Some(d) = args.delta {
        check_delta(d)?;
    }
    check_bias_const(args.bias_const)?;
    let mi = builtin == Builtin::ShannonMi;
    let expected_inputs = if mi { 1 } else { builtin.arity() };
    if args.inputs.len() != expected_inputs {
        return Err(CliError::config(format!(
            "{} takes {expected_inputs} --input file(s), got {}",
            builtin.name(),
            args.inputs.len()
        )));
    }
    if mi && args.dx.is_none() {
        return Err(CliError::config("missing required flag --dx for shannon-mi"));
    }
    if !mi && (args.dx.is_some() || args.split) {
        return Err(CliError::config("--dx and --split apply only to shannon-mi"));
    }

    let read: Vec<Sample> = args.inputs.iter().map(|p| read_sample(p)).collect::<CliResult<_>>()?;
    let (samples, groups) = if mi {
        let split_seed = args.split.then_some(args.seed);
        let (s, g) = mutual_information_samples(&read[0], args.dx.expect("checked"), split_seed)?;
        (s, Some(g))
    } else {
        (read, None)
    };
    let n = samples.iter().map(|s| s.len()).min().expect("at least one sample");
    let dim = samples.iter().map(|s| s.dim()).max().expect("at least one sample");
    let (h, rule) = resolve_bandwidth(&args.bandwidth, n, dim);
    let kernel = kernel_for(args.bandwidth.kernel_order, args.bandwidth.beta)?;
    let grid = resolve_grid(&args.grid, dim, args.seed)?;
    let holder = args.bandwidth.beta.map(|b| HolderParams::with_beta(b, dim)).transpose()?;
    let options = EstimateOptions {
        delta: args.delta,
        holder,
        bias_constant: Some(args.bias_const),
        sample_groups: groups,
    };
    let report = estimate(&spec, &samples, &kernel, h, &grid, &options)?;
    let inputs: Vec<String> = args.inputs.iter().map(|p| p.display().to_string()).collect();
    let config = json!({
        "functional": builtin.name(),
        "alpha": args.alpha,
        "inputs": inputs,
        "dx": args.dx,
        "split": args.split,
        "bandwidth": rule,
        "kernel": kernel_json(&kernel),
        "grid": grid_json(&grid),
        "kappa_min": args.clip.kappa_min,
        "kappa_max": args.clip.kappa_max,
        "delta": args.delta,
        "beta": args.bandwidth.beta,
        "bias_const": args.bias_const,
        "seed": args.seed,
    });
    emit("estimate", config, report, args.out.as_deref())?;
    Ok(0)
}

struct CmiSetup {
    data: Sample,
    dims: CmiDims,
    split: CmiSplit,
    config: CmiConfig,
    holder: Option<HolderParams>,
    echo: Value,
}

fn setup_cmi(c: &CmiCommon, delta: Option<f64>) -> CliResult<CmiSetup> {
    check_alpha(c.alpha)?;
    let (kappa_min, kappa_max) = required_clip_box(&c.clip, "conditional mutual information")?;
    check_bandwidth(&c.bandwidth)?;
    check_grid(&c.grid)?;
    check_bias_const(c.bias_const)?;
    if let Some(d) = delta {
        check_delta(d)?;
    }
    if c.dx == 0 || c.dy == 0 || c.dz == 0 {
        return Err(CliError::config("--dx, --dy and --dz must each be at least 1"));
    }
    let dims = CmiDims {
        dx: c.dx,
        dy: c.dy,
        dz: c.dz,
    };
    let split = match c.cmi_split {
        SplitArg::TwoWay => CmiSplit::TwoWay,
        SplitArg::FourWay => CmiSplit::FourWay,
    };

    let data = read_sample(&c.input)?;
    if data.dim() != dims.total() {
        return Err(CliError::config(format!(
            "{} has {} columns but --dx + --dy + --dz = {}",
            c.input.display(),
            data.dim(),
            dims.total()
        )));
    }
    let parts = match split {
        CmiSplit::TwoWay => 2,
        CmiSplit::FourWay => 4,
    };
    let n = data.len() / parts;
    if n == 0 {
        return Err(CliError::config(format!("{} has too few rows to split {parts} ways", c.input.display())));
    }
    let d = dims.total();
    let (h, rule) = resolve_bandwidth(&c.bandwidth, n, d);
    let kernel = kernel_for(c.bandwidth.kernel_order, c.bandwidth.beta)?;
    let grid_z = resolve_grid(&c.grid, c.dz, trial_seed(c.seed, 1))?;
    let grid_xy = resolve_grid(&c.grid, c.dx + c.dy, trial_seed(c.seed, 2))?;
    let holder = c.bandwidth.beta.map(|b| HolderParams::with_beta(b, d)).transpose()?;
    let echo = json!({
        "input": c.input.display().to_string(),
        "dx": c.dx,
        "dy": c.dy,
        "dz": c.dz,
        "alpha": c.alpha,
        "kappa_min": kappa_min,
        "kappa_max": kappa_max,
        "cmi_split": split,
        "bandwidth": rule,
        "kernel": kernel_json(&kernel),
        "grid_z": grid_json(&grid_z),
        "grid_xy": grid_json(&grid_xy),
        "beta": c.bandwidth.beta,
        "bias_const": c.bias_const,
        "delta": delta,
        "seed": c.seed,
    });
    let config = CmiConfig {
        alpha: c.alpha,
        kappa_min,
        kappa_max,
        kernel,
        bandwidth: h,
        grid_z,
        grid_xy,
        options: EstimateOptions {
            delta,
            holder,
            bias_constant: Some(c.bias_const),
            sample_groups: None,
        },
    };
    Ok(CmiSetup {
        data,
        dims,
        split,
        config,
        holder,
        echo,
    })
}

pub fn run_cmi(args: &CmiArgs) -> CliResult<i32> {
    let s = setup_cmi(&args.common, args.delta)?;
    let report = renyi_cmi(&s.data, s.dims, s.split, args.common.seed, &s.config)?;
    emit("cmi", s.echo, report, args.common.out.as_deref())?;
    Ok(0)
}

pub fn run_citest(args: &CitestArgs) -> CliResult<i32> {
    let mode = match args.mode {
        ModeArg::Conc => Mode::ConcentrationOnly,
        ModeArg::ConcBias => Mode::ConcentrationPlusBias,
    };
    if mode == Mode::ConcentrationPlusBias && args.common.bandwidth.beta.is_none() {
        return Err(CliError::config("--mode conc+bias needs --beta"));
    }
    let s = setup_cmi(&args.common, Some(args.delta))?;
    let mut echo = s.echo;
    echo["mode"] = json!(mode);
    let config = CiTestConfig {
        cmi: s.config,
        delta: args.delta,
        mode,
        holder: s.holder,
        bias_constant: args.common.bias_const,
        split: s.split,
        seed: args.common.seed,
    };
    let result = conditional_independence_test(&s.data, s.dims, &config)?;
    let code = match result.decision {
        Decision::RejectIndependence => EXIT_REJECT,
        Decision::FailToReject => 0,
    };
    emit("citest", echo, result, args.common.out.as_deref())?;
    Ok(code)
}

pub fn run_bounds(args: &BoundsArgs) -> CliResult<i32> {
    positive("--beta", args.beta)?;
    if args.d == 0 || args.n == 0 || args.k == 0 {
        return Err(CliError::config("--d, --n and --k must each be at least 1"));
    }
    if !(args.cf >= 0.0 && args.cf.is_finite()) {
        return Err(CliError::config(format!("--cf must be nonnegative and finite, got {}", args.cf)));
    }
    check_delta(args.delta)?;
    check_bias_const(args.bias_const)?;
    positive("--bandwidth-const", args.bandwidth_const)?;
    if let Some(h) = args.bandwidth {
        if !(h > 0.0 && h <= 1.0) {
            return Err(CliError::config(format!("--bandwidth must lie in (0, 1], got {h}")));
        }
    }
    let holder = HolderParams::with_beta(args.beta, args.d)?;
    let kernel = kernel_for(args.kernel_order, Some(args.beta))?;
    let l1 = match args.l1 {
        Some(v) => {
            if !(v >= 1.0 && v.is_finite()) {
                return Err(CliError::config(format!("--l1 must be at least 1, got {v}")));
            }
            v
        }
        None => kernel.l1_norm(),
    };
    let h = args
        .bandwidth
        .unwrap_or_else(|| bounds::bandwidth(args.n, args.beta, args.d, args.bandwidth_const));
    let cv = bounds::variance_constant(args.cf, &[args.d], l1);
    let halfwidth = bounds::ci_halfwidth(args.delta, args.n, args.k, cv)?;
    let bias = bounds::bias_bound(h, &holder, args.n, args.bias_const);
    let result = json!({
        "ell": holder.ell(),
        "kernel_order": kernel.order(),
        "l1_norm": l1,
        "bandwidth": h,
        "rate_exponent": -args.beta / (args.beta + args.d as f64),
        "variance_constant": cv,
        "ci_halfwidth": halfwidth,
        "deviation_probability": bounds::deviation_probability(halfwidth, args.n, args.k, cv),
        "bias_bound": bias,
        "variance_bound": bounds::variance_bound(cv, args.n),
        "mse_bound": bounds::mse_bound(cv, args.bias_const, h, &holder, args.n),
    });
    let config = json!({
        "beta": args.beta,
        "d": args.d,
        "n": args.n,
        "cf": args.cf,
        "l1": args.l1,
        "kernel_order": args.kernel_order,
        "k": args.k,
        "delta": args.delta,
        "bias_const": args.bias_const,
        "bandwidth_const": args.bandwidth_const,
        "bandwidth": args.bandwidth,
    });
    emit("bounds", config, result, args.out.as_deref())?;
    Ok(0)
}

pub fn run_kde_check(args: &KdeCheckArgs) -> CliResult<i32> {
    check_bandwidth(&args.bandwidth)?;
    check_grid(&args.grid)?;
    let sample = read_sample(&args.input)?;
    let (n, dim) = (sample.len(), sample.dim());
    let (h, rule) = resolve_bandwidth(&args.bandwidth, n, dim);
    let kernel = kernel_for(args.bandwidth.kernel_order, args.bandwidth.beta)?;
    let grid = resolve_grid(&args.grid, dim, args.seed)?;
    let kde = MirroredKde::fit(sample, kernel.clone(), h)?;
    let summary = summarize(&kde, &grid);
    let config = json!({
        "input": args.input.display().to_string(),
        "bandwidth": rule,
        "kernel": kernel_json(&kernel),
        "grid": grid_json(&grid),
        "seed": args.seed,
    });
    let result = json!({
        "n": n,
        "dim": dim,
        "bandwidth": h,
        "mass": summary.mass,
        "min": summary.min,
        "max": summary.max,
    });
    emit("kde-check", config, result, args.out.as_deref())?;
    Ok(0)
}

struct SynthSetup {
    density: TrigDensity,
    spec: FunctionalSpec,
    config: ExperimentConfig,
    echo: Value,
}

fn setup_synth(s: &SynthArgs) -> CliResult<SynthSetup> {
    let (builtin, spec) = parse_functional(&s.functional, s.alpha)?;
    let spec = with_clip(builtin, spec, &s.clip)?;
    if builtin == Builtin::ShannonMi {
        return Err(CliError::config("shannon-mi is not available in the synthetic experiments"));
    }
    positive("--beta", s.beta)?;
    positive("--bandwidth-const", s.bandwidth_const)?;
    if s.trials == 0 {
        return Err(CliError::config("--trials must be at least 1"));
    }
    if s.grid == Some(0) {
        return Err(CliError::config("--grid must be at least 1"));
    }
    let density = TrigDensity::new(s.d, s.amplitude, s.order)?;
    let kernel = kernel_for(s.kernel_order, Some(s.beta))?;
    let grid = Grid::midpoint(s.d, s.grid.unwrap_or_else(|| default_resolution(s.d)))?;
    let echo = json!({
        "functional": builtin.name(),
        "alpha": s.alpha,
        "density": { "d": s.d, "amplitude": s.amplitude, "order": s.order, "normalizer": density.normalizer() },
        "kappa_min": s.clip.kappa_min,
        "kappa_max": s.clip.kappa_max,
        "beta": s.beta,
        "bandwidth_const": s.bandwidth_const,
        "kernel": kernel_json(&kernel),
        "grid": grid_json(&grid),
        "trials": s.trials,
        "seed": s.seed,
    });
    Ok(SynthSetup {
        density,
        spec,
        config: ExperimentConfig {
            kernel,
            beta: s.beta,
            bandwidth_const: s.bandwidth_const,
            grid,
        },
        echo,
    })
}

#[derive(Serialize)]
struct RateCsvRow {
    n: usize,
    mean_error: f64,
    slope: f64,
    std_error: f64,
    bandwidth: f64,
}

pub fn run_rate(args: &RateArgs) -> CliResult<i32> {
    let s = setup_synth(&args.synth)?;
    if args.n_list.len() < 2 || args.n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::config("--n-list needs at least two strictly increasing sizes"));
    }
    let mut echo = s.echo;
    echo["n_list"] = json!(args.n_list);
    let result = rate_experiment(&s.density, &s.spec, &args.n_list, args.synth.trials, args.synth.seed, &s.config)?;
    if let Some(path) = &args.synth.csv {
        let rows: Vec<RateCsvRow> = result
            .rows
            .iter()
            .map(|r| RateCsvRow {
                n: r.n,
                mean_error: r.mean_abs_error,
                slope: result.slope,
                std_error: r.std_error,
                bandwidth: r.bandwidth,
            })
            .collect();
        write_csv(&rows, path)?;
    }
    emit("rate", echo, result, args.synth.out.as_deref())?;
    Ok(0)
}

#[derive(Serialize)]
struct TailCsvRow {
    epsilon: f64,
    empirical: f64,
    bound: f64,
    tolerance: f64,
}

pub fn run_tail(args: &TailArgs) -> CliResult<i32> {
    let s = setup_synth(&args.synth)?;
    if args.n == 0 {
        return Err(CliError::config("--n must be at least 1"));
    }
    if let Some(eps) = &args.epsilons {
        if eps.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(CliError::config("--epsilons must be nonnegative and finite"));
        }
    }
    let mut echo = s.echo;
    echo["n"] = json!(args.n);
    echo["epsilons"] = json!(args.epsilons);
    let result = concentration_experiment(
        &s.density,
        &s.spec,
        args.n,
        args.synth.trials,
        args.epsilons.as_deref(),
        args.synth.seed,
        &s.config,
    )?;
    if let Some(path) = &args.synth.csv {
        let rows: Vec<TailCsvRow> = result
            .rows
            .iter()
            .map(|r| TailCsvRow {
                epsilon: r.epsilon,
                empirical: r.empirical,
                bound: r.bound,
                tolerance: r.tolerance,
            })
            .collect();
        write_csv(&rows, path)?;
    }
    emit("tail", echo, result, args.synth.out.as_deref())?;
    Ok(0)
}
