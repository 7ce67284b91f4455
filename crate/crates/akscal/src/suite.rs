//! The acceptance checks, runnable one by one or all together on a bounded
//! thread pool.

use std::f64::consts::PI;
use std::time::Instant;

use akscal_core::lie::{abelian, curvature, kodaira_thurston, kt_exact, z_ratio};
use akscal_core::linalg::{dot, norm, Matrix};
use akscal_core::operator::{
    fields, kernel_gap, symbol_check, symbol_sweep, AntiInvariantField, EigenConfig, KtGrid, KtOperator, Variant,
};
use akscal_core::rearrange::{build_plan, feasibility, realize_diffeo, rearrange_error, RearrangeConfig, RearrangeError};
use akscal_core::tensor::{
    anti_invariant_part, check_compatibility, exp_metric, invariant_part, log_recover, MetricMatrix, SymTensor,
    SymplecticMatrix,
};
use akscal_core::zbound::{
    cremona_reflection, eval_zbound, h_function, h_function_max, optimize_zbound, y_ratio, y_ratio_min, CohomologyModel,
    OptimizerConfig, SymplecticClass,
};
use akscal_core::Rational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct Criterion {
    pub id: u8,
    pub check: &'static str,
    pub anchor: &'static str,
    pub limit_seconds: f64,
    run: fn(&mut ChaCha8Rng) -> Result<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: u8,
    pub check: &'static str,
    pub anchor: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub limit_seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {:<22} {:>8.2} s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.check,
            self.seconds,
            self.detail
        )
    }
}

pub const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, check: "kt-curvature-tables", anchor: "KT connection, sectional, Ricci, scalar and r- tables", limit_seconds: 1.0, run: kt_tables },
    Criterion { id: 2, check: "star-scalar-identity", anchor: "s* - s = |nabla J|^2 / 2", limit_seconds: 1.0, run: star_scalar },
    Criterion { id: 3, check: "zbound-values", anchor: "CP2 bound, Barlow optimum, unbounded product", limit_seconds: 10.0, run: zbound_values },
    Criterion { id: 4, check: "analytic-certificates", anchor: "h-function maximum and y-ratio minimum", limit_seconds: 5.0, run: certificates },
    Criterion { id: 5, check: "collapsing-family", anchor: "Z-ratio of KT_d tends to 0", limit_seconds: 1.0, run: collapsing },
    Criterion { id: 6, check: "symbol-check", anchor: "principal symbol of the adjoint linearization", limit_seconds: 30.0, run: symbol },
    Criterion { id: 7, check: "kernel-certificate", anchor: "trivial kernel of the KT adjoint", limit_seconds: 300.0, run: kernel },
    Criterion { id: 8, check: "hessian-fidelity", anchor: "closed-form vs definitional Hessian", limit_seconds: 30.0, run: hessian },
    Criterion { id: 9, check: "rearrangement", anchor: "Lp approximation by f composed with an isotopy", limit_seconds: 10.0, run: rearrangement },
    Criterion { id: 10, check: "property-suites", anchor: "tensor, adjoint and Z-bound invariants", limit_seconds: 60.0, run: properties },
];

pub fn criterion(id: u8) -> Option<&'static Criterion> {
    CRITERIA.iter().find(|c| c.id == id)
}

/// Runs one criterion. Each criterion draws from its own stream derived from `seed`.
pub fn run_criterion(c: &Criterion, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(c.id as u64);
    let start = Instant::now();
    let result = (c.run)(&mut rng);
    let seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = match result {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if seconds > c.limit_seconds {
        passed = false;
        detail = format!("runtime {seconds:.1} s over the {} s limit; {detail}", c.limit_seconds);
    }
    Outcome { id: c.id, check: c.check, anchor: c.anchor, passed, detail, seconds, limit_seconds: c.limit_seconds }
}

/// Runs the selected criteria on a pool of `jobs` threads, in id order.
pub fn run_suite(ids: &[u8], seed: u64, jobs: usize) -> Result<Vec<Outcome>, rayon::ThreadPoolBuildError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let selected: Vec<&Criterion> = CRITERIA.iter().filter(|c| ids.contains(&c.id)).collect();
    Ok(pool.install(|| selected.par_iter().map(|c| run_criterion(c, seed)).collect()))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn q(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

fn kt_tables(_: &mut ChaCha8Rng) -> Result<String, String> {
    let (_, c) = kt_exact();
    let half = q(1, 2);
    let gammas = [(0, 1, 2, half), (0, 2, 1, -half), (1, 0, 2, -half), (1, 2, 0, half), (2, 0, 1, -half), (2, 1, 0, half)];
    let zero = q(0, 1);
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                let want = gammas.iter().find(|g| (g.0, g.1, g.2) == (i, j, k)).map_or(zero, |g| g.3);
                let got = c.gamma(i, j, k);
                ensure(got == want, || format!("gamma({},{},{}) = {got}, expected {want}", i + 1, j + 1, k + 1))?;
            }
        }
    }
    let sectional = [((0, 1), q(-3, 4)), ((0, 2), q(1, 4)), ((1, 2), q(1, 4)), ((0, 3), zero), ((1, 3), zero), ((2, 3), zero)];
    for ((i, j), want) in sectional {
        let got = c.sectional(i, j);
        ensure(got == want, || format!("K{}{} = {got}, expected {want}", i + 1, j + 1))?;
    }
    let diag = |name: &str, f: &dyn Fn(usize, usize) -> Rational, d: [Rational; 4]| -> Result<(), String> {
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { d[i] } else { zero };
                let got = f(i, j);
                ensure(got == want, || format!("{name}({},{}) = {got}, expected {want}", i + 1, j + 1))?;
            }
        }
        Ok(())
    };
    diag("Ric", &|i, j| c.ricci(i, j), [-half, -half, half, zero])?;
    diag("r-", &|i, j| c.ricci_anti(i, j), [q(-1, 4), -half, half, q(1, 4)])?;
    ensure(c.scalar() == -half, || format!("s = {}, expected -1/2", c.scalar()))?;
    Ok("64 connection coefficients, 6 sectional curvatures, Ric, r- and s = -1/2 exact".into())
}

fn star_scalar(_: &mut ChaCha8Rng) -> Result<String, String> {
    let mut notes = Vec::new();
    for (spec, want) in [(kt_exact().0, q(2, 1)), (abelian::<Rational>(4), q(0, 1))] {
        let c = curvature(&spec).map_err(|e| e.to_string())?;
        let a = c.norm_nabla_j_sq();
        let b = c.norm_nabla_j_sq_from_components();
        ensure(a == want && b == want, || format!("{}: |nabla J|^2 routes give {a} and {b}, expected {want}", spec.name()))?;
        let gap = c.star_scalar() - c.scalar();
        ensure(gap == a / q(2, 1), || format!("{}: s* - s = {gap}, |nabla J|^2 / 2 = {}", spec.name(), a / q(2, 1)))?;
        notes.push(format!("{}: |nabla J|^2 = {a}", spec.name()));
    }
    Ok(notes.join(", "))
}

fn zbound_values(_: &mut ChaCha8Rng) -> Result<String, String> {
    let cp2 = CohomologyModel::cp2();
    let z = eval_zbound(&cp2, &SymplecticClass::four(vec![1.0])).map_err(|e| e.to_string())?;
    let want = 12.0 * 2f64.sqrt() * PI;
    ensure((z - want).abs() <= 1e-9, || format!("Z(CP2, H) = {z:.16e}, expected {want:.16e}"))?;

    let barlow = CohomologyModel::barlow();
    let seed = barlow.default_seed().ok_or("barlow model has no default seed")?;
    let res = optimize_zbound(&barlow, &seed, &OptimizerConfig::default()).map_err(|e| e.to_string())?;
    ensure((res.value + 12.0 * PI).abs() <= 1e-6, || format!("Barlow optimum {:.16e}, expected -12 pi", res.value))?;
    let mut dir = vec![1.0; 10];
    dir[0] = -3.0;
    dir[9] = 2.0;
    let barlow_gap = res.value + 12.0 * PI;
    let got = res.argmax.coords();
    let (nd, ng) = (norm(&dir), norm(&got));
    let dev = dir.iter().zip(&got).map(|(a, b)| (a / nd - b / ng).abs()).fold(0.0, f64::max);
    ensure(dev <= 1e-4, || format!("Barlow argmax {got:?} is {dev:e} off the expected direction"))?;

    let r8 = CohomologyModel::r8();
    let seed = r8.default_seed().ok_or("r8 model has no default seed")?;
    let res = optimize_zbound(&r8, &seed, &OptimizerConfig::default()).map_err(|e| e.to_string())?;
    ensure(res.unbounded && res.value == f64::INFINITY, || format!("positive-pairing product gave {}", res.value))?;
    Ok(format!("Z(CP2) - 12 sqrt2 pi = {:.1e}, Barlow + 12 pi = {:.1e}, direction off by {dev:.1e}, r8 unbounded", z - want, barlow_gap))
}

/// Nested grid search for the maximum of `f` on `x > 0`.
fn grid_max(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let (mut lo, mut hi) = (-6.0f64, 6.0f64);
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for _ in 0..40 {
        let n = 400;
        let step = (hi - lo) / n as f64;
        let mut k_best = 0;
        for k in 0..=n {
            let x = 10f64.powf(lo + step * k as f64);
            let v = f(x);
            if v > best.1 {
                best = (x, v);
                k_best = k;
            }
        }
        let centre = lo + step * k_best as f64;
        lo = centre - step;
        hi = centre + step;
    }
    best
}

fn certificates(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a = -rng.gen_range(0.05..20.0);
        let b = -rng.gen_range(0.05..20.0);
        let (x, v) = h_function_max(a, b).map_err(|e| e.to_string())?;
        let (gx, gv) = grid_max(|x| h_function(a, b, x));
        let err = (gv - v).abs() / v.abs().max(1.0);
        worst = worst.max(err);
        ensure(err <= 1e-9, || format!("h({a}, {b}): closed form {v:.16e}, grid {gv:.16e}"))?;
        ensure((gx - x).abs() <= 1e-6 * x, || format!("h({a}, {b}): argmax {x} vs grid {gx}"))?;
    }
    let (y, m) = y_ratio_min(8).map_err(|e| e.to_string())?;
    ensure(y == 8.0 / 9.0 && m == 1.0, || format!("y-ratio minimum ({y}, {m}), expected (8/9, 1)"))?;
    let n = 1_000_000;
    let sweep = (0..n).map(|k| y_ratio(8, k as f64 / n as f64)).fold(f64::INFINITY, f64::min);
    ensure(sweep >= 1.0 - 1e-6, || format!("y-ratio sweep minimum {sweep}"))?;
    Ok(format!("h max within {worst:.1e} of grid search on 100 pairs, y-ratio sweep min {sweep:.12}"))
}

fn collapsing(_: &mut ChaCha8Rng) -> Result<String, String> {
    let mut prev = f64::NEG_INFINITY;
    let mut vals = Vec::new();
    for d in [1.0, 0.1, 0.01] {
        let spec = kodaira_thurston::<Rational>(d).map_err(|e| e.to_string())?;
        let c = curvature(&spec).map_err(|e| e.to_string())?;
        let z = z_ratio(&spec, &c).map_err(|e| e.to_string())?;
        let want = -d.sqrt() / 2.0;
        ensure((z - want).abs() <= 1e-14, || format!("zRatio(KT_{d}) = {z}, expected {want}"))?;
        ensure(z > prev && z < 0.0, || format!("zRatio not increasing to 0 at d = {d}"))?;
        prev = z;
        vals.push(format!("{z:.4}"));
    }
    Ok(format!("zRatio = {}", vals.join(", ")))
}

fn symbol(_: &mut ChaCha8Rng) -> Result<String, String> {
    let n = 8;
    let flat = KtOperator::new(KtGrid::flat_torus(n, 2.0 * PI).map_err(|e| e.to_string())?, Variant::Flat).map_err(|e| e.to_string())?;
    let h = 2.0 * PI / n as f64;
    let half_nyquist = (n / 4) as i64;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let range = -half_nyquist..=half_nyquist;
    for a in range.clone() {
        for b in range.clone() {
            for c in range.clone() {
                for d in range.clone() {
                    let modes = [a, b, c, d];
                    if modes == [0; 4] {
                        continue;
                    }
                    let r = symbol_check(&flat, modes).map_err(|e| e.to_string())?;
                    worst = worst.max((r - 1.0).abs());
                    count += 1;
                }
            }
        }
    }
    ensure(worst <= 5.0 * h * h, || format!("flat symbol deviation {worst} exceeds 5h^2 = {}", 5.0 * h * h))?;

    let kt = KtOperator::new(KtGrid::kodaira_thurston(32, 4, 1.0).map_err(|e| e.to_string())?, Variant::KodairaThurston)
        .map_err(|e| e.to_string())?;
    let modes: Vec<[i64; 4]> = (1..=4).map(|m| [0, m, 0, 0]).collect();
    let samples = symbol_sweep(&kt, &modes).map_err(|e| e.to_string())?;
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.xi_norm.ln(), (s.ratio / s.flat_ratio - 1.0).abs().ln())).collect();
    let slope = fit_slope(&pts);
    ensure(slope <= -0.8, || format!("KT symbol excess slope {slope:.3} > -0.8"))?;
    Ok(format!("flat max |ratio - 1| = {worst:.3e} over {count} modes (5h^2 = {:.3}), KT excess slope {slope:.3}", 5.0 * h * h))
}

pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
}

fn kernel(_: &mut ChaCha8Rng) -> Result<String, String> {
    let cfg = EigenConfig::default();
    let runs: Vec<_> = [(6, Variant::Flat), (8, Variant::Flat), (6, Variant::KodairaThurston), (8, Variant::KodairaThurston)]
        .par_iter()
        .map(|&(n, v)| kernel_gap(n, n, 1.0, v, &cfg).map_err(|e| format!("N = {n}, {v:?}: {e}")))
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let (flat6, flat8, kt6, kt8) = (&runs[0], &runs[1], &runs[2], &runs[3]);
    for flat in [flat6, flat8] {
        let l = flat.eigenvalues[0];
        ensure(l <= 1e-8, || format!("flat lambda_min = {l:e} at N = {}", flat.n))?;
        let c = 1.0 / (flat.unknowns as f64).sqrt();
        let proj: f64 = flat
            .eigenvectors
            .iter()
            .zip(&flat.eigenvalues)
            .filter(|(_, &l)| l <= 1e-8)
            .map(|(v, _)| (v.iter().sum::<f64>() * c).powi(2))
            .sum();
        ensure((proj - 1.0).abs() <= 1e-6, || format!("constant lies in the flat kernel with weight {proj} at N = {}", flat.n))?;
    }
    for (kt, flat) in [(kt6, flat6), (kt8, flat8)] {
        let floor = flat.eigenvalues[0].max(cfg.tol);
        ensure(kt.eigenvalues[0] >= 1e3 * floor, || {
            format!("KT lambda_min {:e} vs flat {:e} at N = {}", kt.eigenvalues[0], flat.eigenvalues[0], kt.n)
        })?;
    }
    let change = (kt8.eigenvalues[0] - kt6.eigenvalues[0]).abs() / kt6.eigenvalues[0];
    ensure(change < 0.5, || format!("KT lambda_min changes by {:.0}% between N = 6 and 8", 100.0 * change))?;
    Ok(format!(
        "KT lambda_min {:.6} (N=6), {:.6} (N=8); flat {:.1e}, {:.1e}",
        kt6.eigenvalues[0], kt8.eigenvalues[0], flat6.eigenvalues[0], flat8.eigenvalues[0]
    ))
}

fn hessian_gap(op: &KtOperator, psi: &[f64]) -> Result<f64, String> {
    let a = op.hessian(psi).map_err(|e| e.to_string())?;
    let b = op.hessian_definitional(psi).map_err(|e| e.to_string())?;
    let mut m: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for (p, q) in a[i][j].iter().zip(&b[i][j]) {
                m = m.max((p - q).abs());
            }
        }
    }
    Ok(m)
}

fn kt_op(n: usize) -> Result<KtOperator, String> {
    let grid = KtGrid::kodaira_thurston(n, n, 1.0).map_err(|e| e.to_string())?;
    KtOperator::new(grid, Variant::KodairaThurston).map_err(|e| e.to_string())
}

type Field = Box<dyn Fn([f64; 4]) -> f64 + Send + Sync>;

/// A smooth invariant field with random low modes and phases, with a description.
fn random_field(rng: &mut ChaCha8Rng) -> (String, Field) {
    if rng.gen_bool(0.25) {
        let (r, x0, width, tm) = (rng.gen_range(0..=1), rng.gen_range(0.0..1.0), rng.gen_range(0.2..0.3), rng.gen_range(0..=1));
        (format!("theta(1, {r}, {x0:.3}, {width:.3}, {tm})"), Box::new(fields::theta(1, r, x0, width, tm, 1.0)))
    } else {
        let (m, n) = loop {
            let m = rng.gen_range(-1..=1);
            let n = rng.gen_range(-1..=1);
            if (m, n) != (0, 0) {
                break (m, n);
            }
        };
        let (p, phase) = (rng.gen_range(0..=1), rng.gen_range(0.0..2.0 * PI));
        (format!("wave({m}, {n}, {p}, {phase:.3})"), Box::new(fields::z_independent(m, n, p, 1.0, phase)))
    }
}

/// A sum of two random low plane waves, for the convergence-order check.
fn random_wave_sum(rng: &mut ChaCha8Rng) -> (String, Field) {
    let parts: Vec<(f64, i32, i32, i32, f64)> = (0..2)
        .map(|_| {
            let (m, n) = loop {
                let m = rng.gen_range(-1..=1);
                let n = rng.gen_range(-1..=1);
                if (m, n) != (0, 0) {
                    break (m, n);
                }
            };
            (rng.gen_range(0.5..1.0), m, n, rng.gen_range(0..=1), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    let name = parts.iter().map(|(a, m, n, p, ph)| format!("{a:.2} wave({m}, {n}, {p}, {ph:.2})")).collect::<Vec<_>>().join(" + ");
    let waves: Vec<(f64, Field)> =
        parts.iter().map(|&(a, m, n, p, ph)| (a, Box::new(fields::z_independent(m, n, p, 1.0, ph)) as Field)).collect();
    (name, Box::new(move |x| waves.iter().map(|(a, w)| a * w(x)).sum()))
}

fn hessian(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let (coarse, fine) = (kt_op(14)?, kt_op(28)?);
    let fields: Vec<_> = (0..3).map(|_| random_wave_sum(rng)).collect();
    let orders = fields
        .par_iter()
        .map(|(name, f)| {
            let e1 = hessian_gap(&coarse, &coarse.grid().sample(f))?;
            let e2 = hessian_gap(&fine, &fine.grid().sample(f))?;
            Ok((name.clone(), (e1 / e2).log2()))
        })
        .collect::<Result<Vec<(String, f64)>, String>>()?;
    let list = orders.iter().map(|(n, o)| format!("{n}: {o:.3}")).collect::<Vec<_>>().join("; ");
    let min = orders.iter().map(|o| o.1).fold(f64::INFINITY, f64::min);
    ensure(min >= 1.9, || format!("Richardson order below 1.9: {list}"))?;
    Ok(format!("Richardson orders {list}"))
}

fn rearrangement(_: &mut ChaCha8Rng) -> Result<String, String> {
    let cfg = RearrangeConfig::default();
    let f = |x: f64| x.sin();
    let zero = |_: f64| 0.0;
    let mut notes = Vec::new();
    for eps in [0.2, 0.1, 0.05] {
        let plan = build_plan(&f, &zero, eps, 2.0, &cfg).map_err(|e| format!("eps = {eps}: {e}"))?;
        let phi = realize_diffeo(&plan).map_err(|e| format!("eps = {eps}: {e}"))?;
        let err = rearrange_error(&f, &zero, &phi, 2.0);
        ensure(err < eps, || format!("eps = {eps}: L2 error {err}"))?;
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            let d = phi.min_derivative(t, 10_000);
            ensure(d > 0.0, || format!("eps = {eps}: derivative {d} at t = {t}"))?;
        }
        notes.push(format!("eps {eps}: error {err:.3e}"));
    }
    let two = |_: f64| 2.0;
    ensure(!feasibility(&f, &two, cfg.period, 4096, 1e-12), || "f1 = 2 reported feasible".into())?;
    ensure(matches!(build_plan(&f, &two, 0.1, 2.0, &cfg), Err(RearrangeError::Infeasible { .. })), || {
        "f1 = 2 not rejected by the planner".into()
    })?;
    Ok(format!("{}; f1 = 2 rejected", notes.join(", ")))
}

fn random_symmetric(rng: &mut ChaCha8Rng, dim: usize) -> SymTensor {
    let m = Matrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    SymTensor::new(m.add(&m.transpose()).scale(0.5)).expect("symmetrized")
}

fn tensor_case(rng: &mut ChaCha8Rng, dim: usize) -> Result<(), String> {
    let e = |e: akscal_core::tensor::TensorError| e.to_string();
    let omega = SymplecticMatrix::standard(dim);
    let j0 = check_compatibility(&MetricMatrix::identity(dim), &omega).map_err(e)?;
    let h0 = anti_invariant_part(&random_symmetric(rng, dim), &j0).map_err(e)?;
    let s = rng.gen_range(0.0..1.0) / h0.matrix().frobenius_norm().max(1e-300);
    let g = exp_metric(&MetricMatrix::identity(dim), &SymTensor::new(h0.matrix().scale(s)).map_err(e)?).map_err(e)?;
    let j = check_compatibility(&g, &omega).map_err(e)?;

    let a = random_symmetric(rng, dim);
    let plus = invariant_part(&a, &j).map_err(e)?;
    let minus = anti_invariant_part(&a, &j).map_err(e)?;
    let sum_dev = plus.matrix().add(minus.matrix()).max_abs_diff(a.matrix());
    ensure(sum_dev <= 1e-12, || format!("A+ + A- differs from A by {sum_dev:e}"))?;
    let idem = invariant_part(&plus, &j).map_err(e)?.matrix().max_abs_diff(plus.matrix())
        + anti_invariant_part(&minus, &j).map_err(e)?.matrix().max_abs_diff(minus.matrix());
    ensure(idem <= 1e-12, || format!("projections not idempotent ({idem:e})"))?;
    let cross = invariant_part(&minus, &j).map_err(e)?.matrix().max_abs() + anti_invariant_part(&plus, &j).map_err(e)?.matrix().max_abs();
    ensure(cross <= 1e-12, || format!("projections do not annihilate each other ({cross:e})"))?;
    ensure(minus.anti_invariance_defect(&j) <= 1e-12, || "A- is not anti-invariant".into())?;

    let s = rng.gen_range(0.0..1.0) / minus.matrix().frobenius_norm().max(1e-300);
    let h = SymTensor::new(minus.matrix().scale(s)).map_err(e)?;
    let g_tilde = exp_metric(&g, &h).map_err(e)?;
    check_compatibility(&g_tilde, &omega).map_err(|err| format!("exp_metric broke compatibility: {err}"))?;
    let back = log_recover(&g, &g_tilde, &omega).map_err(e)?;
    let rt = back.matrix().max_abs_diff(h.matrix());
    ensure(rt <= 1e-10, || format!("log/exp round trip error {rt:e}"))
}

fn smooth_anti_field(rng: &mut ChaCha8Rng) -> [Field; 6] {
    std::array::from_fn(|_| random_field(rng).1)
}

/// `|⟨δδh, ψ⟩ − ⟨h, Aψ⟩_W|` relative to `‖h‖‖ψ‖`, and the exact-transpose defect.
fn pairing_gaps(op: &KtOperator, psi: &dyn Fn([f64; 4]) -> f64, h: &[Field; 6]) -> Result<(f64, f64), String> {
    let g = op.grid();
    let cell = g.cell_volume();
    let p = g.sample(psi);
    let hf = AntiInvariantField { comps: std::array::from_fn(|k| g.sample(&h[k])) };
    let ap = op.adjoint_ds(&p).map_err(|e| e.to_string())?;
    let rhs = hf.pairing(&ap, cell);
    let composed = dot(&op.double_divergence(&hf).map_err(|e| e.to_string())?, &p) * cell;
    let transpose = dot(&op.forward_ds(&hf).map_err(|e| e.to_string())?, &p) * cell;
    let scale = (hf.pairing(&hf, cell) * dot(&p, &p) * cell).sqrt();
    Ok(((composed - rhs).abs() / scale, (transpose - rhs).abs() / scale))
}

fn properties(rng: &mut ChaCha8Rng) -> Result<String, String> {
    for k in 0..500 {
        tensor_case(rng, if k % 2 == 0 { 4 } else { 6 }).map_err(|e| format!("tensor case {k}: {e}"))?;
    }

    let (coarse, fine) = (kt_op(8)?, kt_op(16)?);
    let (hc, hf) = (1.0 / 8.0, 1.0 / 16.0);
    let pairs: Vec<_> = (0..50).map(|_| (random_field(rng).1, smooth_anti_field(rng))).collect();
    let gaps = pairs
        .par_iter()
        .map(|(psi, h)| Ok((pairing_gaps(&coarse, psi, h)?, pairing_gaps(&fine, psi, h)?)))
        .collect::<Result<Vec<_>, String>>()?;
    let c_coarse = gaps.iter().map(|g| g.0 .0 / (hc * hc)).fold(0.0, f64::max);
    let c_fine = gaps.iter().map(|g| g.1 .0 / (hf * hf)).fold(0.0, f64::max);
    let transpose = gaps.iter().map(|g| g.0 .1.max(g.1 .1)).fold(0.0, f64::max);
    ensure(transpose <= 1e-11, || format!("discrete adjoint pairing defect {transpose:e}"))?;
    ensure(c_fine <= 1.3 * c_coarse, || format!("pairing gap constant grows under refinement: {c_coarse:.3} -> {c_fine:.3}"))?;

    let model = CohomologyModel::barlow();
    let r = model.rank();
    let cremona = cremona_reflection(r - 1);
    let mut worst_iso: f64 = 0.0;
    let mut worst_scale: f64 = 0.0;
    for case in 0..100 {
        let class = random_cone_point(rng);
        let z0 = eval_zbound(&model, &class).map_err(|e| e.to_string())?;
        let mut base = class.base.clone();
        for _ in 0..rng.gen_range(1..=4) {
            if rng.gen_bool(0.5) {
                base = (0..r).map(|i| (0..r).map(|j| cremona[i * r + j] as f64 * base[j]).sum()).collect();
            } else {
                base[1..].shuffle(rng);
            }
        }
        let moved = SymplecticClass { base, fiber: class.fiber };
        let z1 = eval_zbound(&model, &moved).map_err(|e| format!("isometry case {case}: {e}"))?;
        let dev = (z1 - z0).abs() / z0.abs().max(1.0);
        worst_iso = worst_iso.max(dev);
        ensure(dev <= 1e-12, || format!("isometry case {case}: {z0} vs {z1}"))?;

        let s = 10f64.powf(rng.gen_range(-2.0..2.0));
        let z2 = eval_zbound(&model, &class.scaled(s)).map_err(|e| e.to_string())?;
        let dev = (z2 - z0).abs() / z0.abs().max(1.0);
        worst_scale = worst_scale.max(dev);
        ensure(dev <= 1e-12, || format!("scale case {case}: {z0} vs {z2} at scale {s}"))?;
    }
    Ok(format!(
        "500 tensor cases; pairing gap/h^2 {c_coarse:.3} -> {c_fine:.3}, transpose defect {transpose:.1e}; Z isometry {worst_iso:.1e}, scale {worst_scale:.1e}"
    ))
}

fn random_cone_point(rng: &mut ChaCha8Rng) -> SymplecticClass {
    let n0 = rng.gen_range(1.5..4.0);
    let mut base = vec![-3.0 * n0];
    base.extend((0..8).map(|_| rng.gen_range(-1.0..1.0)));
    SymplecticClass::product(base, rng.gen_range(0.2..3.0))
}
