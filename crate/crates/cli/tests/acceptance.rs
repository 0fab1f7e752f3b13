//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness. Exits nonzero if any criterion fails
//! other than those listed in `KNOWN_FAILURES`; a known failure that starts
//! passing is reported so the list can be pruned.

use std::process::{Command, ExitCode};
use std::time::Instant;

use denfunc_core::bounds::{self, HolderParams};
use denfunc_core::citest::{conditional_independence_test, CiTestConfig, Decision, Mode};
use denfunc_core::conditional::{renyi_cmi, CmiConfig, CmiDims, CmiSplit};
use denfunc_core::functionals::{estimate, make_builtin, Builtin, EstimateOptions, FunctionalSpec};
use denfunc_core::kde::summarize;
use denfunc_core::synth::{concentration_experiment, rate_experiment, sample_density, ExperimentConfig, TrigDensity};
use denfunc_core::{Grid, Kernel, MirroredKde, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that cannot hold as stated, with the reason.
const KNOWN_FAILURES: &[(u32, &str)] = &[(
    9,
    "for (β,d) = (2,1) the minimizer of h^β + h^2β + 1/(nh^d) is (d/β)^(1/(β+d)) n^(-1/(β+d)) ≈ 0.794 n^(-1/3)",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn uniform(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Sample {
    Sample::new((0..n * d).map(|_| rng.random::<f64>()).collect(), d).unwrap()
}

fn clipped(b: Builtin, alpha: Option<f64>) -> FunctionalSpec {
    make_builtin(b, alpha).unwrap().with_clip_box(0.25, 4.0).unwrap()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    (0..m)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=m {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

fn kernel_moments() -> Outcome {
    let rule = gauss_legendre(40);
    let mut worst = 0.0f64;
    for order in [1usize, 2, 3, 5] {
        let k = Kernel::new(order).unwrap();
        let moment = |j: i32| rule.iter().map(|&(x, w)| w * x.powi(j) * k.eval(x)).sum::<f64>();
        worst = worst.max((moment(0) - 1.0).abs());
        for j in 1..=order as i32 {
            worst = worst.max(moment(j).abs());
        }
    }
    outcome(worst < 1e-9, format!("max moment error {worst:.2e}"))
}

/// Sum over all `3^d` reflections `{v, -v, 2-v}` of every sample point.
fn brute_force_kde(sample: &Sample, kernel: &Kernel, h: f64, x: &[f64]) -> f64 {
    let d = sample.dim();
    let mut total = 0.0;
    for row in sample.rows() {
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let mut prod = 1.0;
            for j in 0..d {
                let v = row[j];
                let r = [v, -v, 2.0 - v][c % 3];
                c /= 3;
                prod *= kernel.eval((x[j] - r) / h);
            }
            total += prod;
        }
    }
    total / (sample.len() as f64 * h.powi(d as i32))
}

fn kde_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for d in 1..=3 {
        for order in [1, 3] {
            let kernel = Kernel::new(order).unwrap();
            let sample = uniform(200, d, &mut rng);
            let h = 0.3;
            let kde = MirroredKde::fit(sample.clone(), kernel.clone(), h).unwrap();
            for _ in 0..100 {
                let x: Vec<f64> = (0..d).map(|_| rng.random()).collect();
                let fast = kde.evaluate(&x).unwrap();
                let slow = brute_force_kde(&sample, &kernel, h, &x);
                worst = worst.max((fast - slow).abs() / slow.abs().max(f64::MIN_POSITIVE));
            }
        }
    }
    outcome(worst <= 1e-12, format!("max relative difference {worst:.2e}"))
}

fn kde_mass() -> Outcome {
    let mut worst = 0.0f64;
    for d in 1..=2 {
        let p = TrigDensity::new(d, 0.4, 1).unwrap();
        let sample = sample_density(&p, 10_000, 3).unwrap();
        let h = bounds::bandwidth(10_000, 2.0, d, 1.0);
        let kde = MirroredKde::fit(sample, Kernel::epanechnikov(), h).unwrap();
        let s = summarize(&kde, &Grid::midpoint(d, 128).unwrap());
        worst = worst.max((s.mass - 1.0).abs());
    }
    outcome(worst <= 0.02, format!("max |mass - 1| {worst:.2e}"))
}

fn bounded_differences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 1000;
    let h = bounds::bandwidth(n, 2.0, 1, 1.0);
    let grid = Grid::midpoint(1, 512).unwrap();
    let kernel = Kernel::epanechnikov();
    let opts = EstimateOptions::default();
    let mut worst_ratio = 0.0f64;
    let mut violations = 0;
    for b in [Builtin::ShannonEntropy, Builtin::L2Distance] {
        let spec = clipped(b, None);
        let samples: Vec<Sample> = (0..spec.arity()).map(|_| uniform(n, 1, &mut rng)).collect();
        let base = estimate(&spec, &samples, &kernel, h, &grid, &opts).unwrap().inner_integral;
        let cv = bounds::variance_constant(spec.lipschitz.unwrap(), &vec![1; spec.arity()], kernel.l1_norm());
        for _ in 0..100 {
            let which = rng.random_range(0..samples.len());
            let mut changed = samples.clone();
            changed[which] = changed[which].with_row(rng.random_range(0..n), &[rng.random()]).unwrap();
            let v = estimate(&spec, &changed, &kernel, h, &grid, &opts).unwrap().inner_integral;
            let delta = (v - base).abs();
            if delta > cv / n as f64 + 1e-9 {
                violations += 1;
            }
            worst_ratio = worst_ratio.max(delta * n as f64 / cv);
        }
    }
    outcome(violations == 0, format!("{violations}/200 violations, max |ΔF| n / C_V = {worst_ratio:.3}"))
}

fn trivial_values() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let kernel = Kernel::epanechnikov();
    let u = uniform(10_000, 1, &mut rng);
    let h = bounds::bandwidth(10_000, 2.0, 1, 1.0);
    let grid = Grid::midpoint(1, 1024).unwrap();
    let opts = EstimateOptions::default();
    let entropy = estimate(&clipped(Builtin::ShannonEntropy, None), std::slice::from_ref(&u), &kernel, h, &grid, &opts)
        .unwrap()
        .value;
    let kl = estimate(&clipped(Builtin::Kl, None), &[u.clone(), u], &kernel, h, &grid, &opts)
        .unwrap()
        .value;

    let n = 4000;
    let dims = CmiDims { dx: 1, dy: 1, dz: 1 };
    let config = CmiConfig {
        alpha: 0.5,
        kappa_min: 0.25,
        kappa_max: 4.0,
        kernel: kernel.clone(),
        bandwidth: bounds::bandwidth(n / 2, 2.0, 3, 1.0),
        grid_z: Grid::midpoint(1, 16).unwrap(),
        grid_xy: Grid::midpoint(2, 16).unwrap(),
        options: EstimateOptions {
            delta: Some(0.05),
            ..Default::default()
        },
    };
    let covered = (0..100u64)
        .filter(|&t| {
            let mut rng = ChaCha8Rng::seed_from_u64(10_000 + t);
            let r = renyi_cmi(&uniform(n, 3, &mut rng), dims, CmiSplit::TwoWay, t, &config).unwrap();
            r.value.abs() <= r.ci_halfwidth.unwrap()
        })
        .count();
    let pass = entropy.abs() <= 0.05 && kl.abs() <= 1e-10 && covered >= 90;
    outcome(
        pass,
        format!("uniform entropy {entropy:.2e}, D(p‖p) {kl:.1e}, CMI covered {covered}/100"),
    )
}

fn experiment_config(grid: usize) -> ExperimentConfig {
    ExperimentConfig {
        kernel: Kernel::epanechnikov(),
        beta: 2.0,
        bandwidth_const: 1.0,
        grid: Grid::midpoint(1, grid).unwrap(),
    }
}

fn rate() -> Outcome {
    let p = TrigDensity::new(1, 0.5, 1).unwrap();
    let n_list: Vec<usize> = (0..8).map(|k| 500 << k).collect();
    let r = rate_experiment(&p, &clipped(Builtin::ShannonEntropy, None), &n_list, 20, 6, &experiment_config(4096)).unwrap();
    outcome(
        (-0.87..=-0.45).contains(&r.slope),
        format!(
            "slope {:.3} (bootstrap 95% [{:.3}, {:.3}], target {:.3})",
            r.slope, r.slope_ci[0], r.slope_ci[1], r.target_slope
        ),
    )
}

fn concentration() -> Outcome {
    let p = TrigDensity::new(1, 0.5, 1).unwrap();
    let r = concentration_experiment(&p, &clipped(Builtin::ShannonEntropy, None), 2000, 200, None, 7, &experiment_config(1024))
        .unwrap();
    let bad = r.rows.iter().filter(|row| row.empirical > row.bound + row.tolerance).count();
    let cells: Vec<String> = r
        .rows
        .iter()
        .map(|row| format!("ε={:.3}: {:.3}≤{:.3}", row.epsilon, row.empirical, row.bound))
        .collect();
    outcome(bad == 0 && r.rows.len() == 5, cells.join(", "))
}

fn round_trip() -> Outcome {
    let mut worst = 0.0f64;
    for delta in [1e-6, 0.01, 0.05, 0.3, 0.9] {
        let eps = bounds::ci_halfwidth(delta, 5000, 2, 3.7).unwrap();
        worst = worst.max((bounds::deviation_probability(eps, 5000, 2, 3.7) - delta).abs());
    }
    outcome(worst <= 1e-12, format!("max |δ' - δ| {worst:.1e}"))
}

/// Golden-section minimizer of the bias bound over `ln h ∈ [ln 1e-6, 0]`.
fn bias_minimizer(beta: f64, d: usize, n: usize) -> f64 {
    let holder = HolderParams::with_beta(beta, d).unwrap();
    let f = |t: f64| bounds::bias_bound(t.exp(), &holder, n, 1.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ((1e-6f64).ln(), 0.0);
    for _ in 0..200 {
        let c = b - g * (b - a);
        let e = a + g * (b - a);
        if f(c) < f(e) {
            b = e;
        } else {
            a = c;
        }
    }
    ((a + b) / 2.0).exp()
}

fn bandwidth_optimality() -> Outcome {
    let n = 10_000;
    let mut pass = true;
    let cells: Vec<String> = [(1.0, 1), (2.0, 1), (2.0, 2)]
        .into_iter()
        .map(|(beta, d)| {
            let ratio = bias_minimizer(beta, d, n) / (n as f64).powf(-1.0 / (beta + d as f64));
            pass &= (ratio - 1.0).abs() <= 0.05;
            format!("(β,d)=({beta},{d}): h*/n^(-1/(β+d)) = {ratio:.3}")
        })
        .collect();
    outcome(pass, cells.join(", "))
}

fn type_one() -> Outcome {
    let n = 2000;
    let trials = 200;
    let rejections = (0..trials as u64)
        .filter(|&t| {
            let mut rng = ChaCha8Rng::seed_from_u64(20_000 + t);
            let config = CiTestConfig {
                cmi: CmiConfig {
                    alpha: 0.5,
                    kappa_min: 0.25,
                    kappa_max: 4.0,
                    kernel: Kernel::epanechnikov(),
                    bandwidth: bounds::bandwidth(n / 2, 2.0, 3, 1.0),
                    grid_z: Grid::midpoint(1, 16).unwrap(),
                    grid_xy: Grid::midpoint(2, 16).unwrap(),
                    options: EstimateOptions::default(),
                },
                delta: 0.05,
                mode: Mode::ConcentrationOnly,
                holder: None,
                bias_constant: 1.0,
                split: CmiSplit::TwoWay,
                seed: t,
            };
            let r = conditional_independence_test(&uniform(n, 3, &mut rng), CmiDims { dx: 1, dy: 1, dz: 1 }, &config).unwrap();
            r.decision == Decision::RejectIndependence
        })
        .count();
    let rate = rejections as f64 / trials as f64;
    let limit = 0.05 + 3.0 * (0.05f64 * 0.95 / trials as f64).sqrt();
    outcome(rate <= limit, format!("false rejections {rejections}/{trials} (limit {limit:.3})"))
}

fn determinism() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut write = |name: &str, n: usize, d: usize| {
        let text: String = (0..n)
            .map(|_| {
                let row: Vec<String> = (0..d).map(|_| rng.random::<f64>().to_string()).collect();
                row.join(",") + "\n"
            })
            .collect();
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };
    let u = write("u.csv", 3000, 1);
    let v = write("v.csv", 3000, 1);
    let xyz = write("xyz.csv", 2000, 3);
    let commands: Vec<Vec<&str>> = vec![
        vec!["estimate", "--functional", "kl", "--input", &u, "--input", &v, "--beta", "2", "--mc", "3000", "--seed", "4", "--kappa-min", "0.25", "--kappa-max", "4", "--delta", "0.05"],
        vec!["estimate", "--functional", "shannon-mi", "--input", &xyz, "--dx", "2", "--split", "--seed", "4", "--beta", "2", "--kappa-min", "0.25", "--kappa-max", "4"],
        vec!["cmi", "--input", &xyz, "--dx", "1", "--dy", "1", "--dz", "1", "--alpha", "2", "--kappa-min", "0.25", "--kappa-max", "4", "--beta", "2", "--seed", "8", "--cmi-split", "four-way", "--grid", "16"],
        vec!["citest", "--input", &xyz, "--dx", "1", "--dy", "1", "--dz", "1", "--alpha", "0.5", "--kappa-min", "0.25", "--kappa-max", "4", "--beta", "2", "--seed", "8", "--grid", "16"],
        vec!["kde-check", "--input", &xyz, "--beta", "2", "--mc", "5000", "--seed", "3"],
        vec!["bounds", "--beta", "2", "--d", "3", "--n", "2000", "--cf", "2.4"],
        vec!["rate", "--trials", "4", "--n-list", "250,500,1000", "--kappa-min", "0.25", "--kappa-max", "4", "--seed", "9"],
        vec!["tail", "--trials", "200", "--n", "250", "--kappa-min", "0.25", "--kappa-max", "4", "--seed", "9"],
    ];
    let mut differing = Vec::new();
    for args in &commands {
        let run = |threads: &str| {
            Command::new(env!("CARGO_BIN_EXE_denfunc"))
                .args(args)
                .env("DENFUNC_THREADS", threads)
                .output()
                .unwrap()
        };
        let (a, b) = (run("1"), run("4"));
        if !a.status.success() || a.stdout.is_empty() || a.stdout != b.stdout {
            differing.push(args[0]);
        }
    }
    outcome(
        differing.is_empty(),
        format!("{} commands run twice, differing or failed: {differing:?}", commands.len()),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (1, "kernel moments", kernel_moments),
        (2, "mirrored KDE vs 3^d brute force", kde_oracle),
        (3, "KDE mass", kde_mass),
        (4, "bounded differences", bounded_differences),
        (5, "trivial values", trivial_values),
        (6, "rate reproduction", rate),
        (7, "concentration tail", concentration),
        (8, "CI round trip", round_trip),
        (9, "bandwidth optimality", bandwidth_optimality),
        (10, "type-I control", type_one),
        (11, "CLI determinism", determinism),
    ];
    let mut unexpected = Vec::new();
    let mut passed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == id);
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status} {name} [{secs:.1}s]: {}", o.detail);
        match (o.pass, known) {
            (true, None) => passed += 1,
            (true, Some(_)) => {
                passed += 1;
                println!("             listed as a known failure but passed; remove it from KNOWN_FAILURES");
                unexpected.push(id);
            }
            (false, Some((_, why))) => println!("             known failure: {why}"),
            (false, None) => unexpected.push(id),
        }
    }
    println!("acceptance: {passed}/11 criteria pass");
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected outcomes for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
