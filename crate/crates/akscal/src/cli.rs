//! Command-line definitions, configuration checks and the subcommands.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use akscal_core::lie::{blair_check, curvature, z_ratio, LieFrameSpec};
use akscal_core::operator::{kernel_gap, symbol_sweep, EigenConfig, KtGrid, KtOperator, SpectralMethod, Variant};
use akscal_core::rearrange::{build_plan, realize_diffeo, rearrange_error, RearrangeConfig};
use akscal_core::zbound::{optimize_zbound, CohomologyModel, OptimizerConfig, SymplecticClass};
use akscal_core::Scalar;
use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::expr::Signal;
use crate::formats::{load_model, load_spec};
use crate::output::{destination, fmt_f64, CsvValue, Table};
use crate::suite;

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(name = "akscal", version, about = "Curvature tables, Z bounds, operator spectra and circle rearrangements")]
pub struct Cli {
    /// Directory for CSV output; tables go to stdout when unset.
    #[arg(long, env = "AKSCAL_OUT", global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent jobs (0: one per core).
    #[arg(long, default_value_t = 0, global = true)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Kt,
    Flat,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Kt => Variant::KodairaThurston,
            VariantArg::Flat => Variant::Flat,
        }
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Curvature tables of a frame spec.
    Curvature {
        spec: PathBuf,
        /// Rational arithmetic; fails unless every entry is a rational literal.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also compare with the integrated Hermitian scalar curvature, given c1·[ω]^{n-1}.
        #[arg(long, allow_hyphen_values = true)]
        blair_c1: Option<f64>,
    },
    /// Maximize the Z bound over the cone component of a seed class.
    Zbound {
        model: PathBuf,
        /// Seed coordinates, comma separated; on product models the last one is the fiber coefficient.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        seed: Option<Vec<f64>>,
        /// Emit the analytic certificate at the maximizer.
        #[arg(long)]
        certify: bool,
        #[arg(long, default_value_t = 5000)]
        budget: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Spectrum and symbol of the discretized adjoint linearization.
    Operator {
        #[arg(long, value_enum, default_value_t = VariantArg::Kt)]
        variant: VariantArg,
        /// Nodes per direction in x, y, z.
        #[arg(long = "N", short = 'n', default_value_t = 8)]
        n: usize,
        /// Nodes in t (defaults to N).
        #[arg(long)]
        nt: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long)]
        symbol_sweep: bool,
        /// Number of smallest eigenpairs of the normal operator.
        #[arg(long)]
        kernel_gap: Option<usize>,
    },
    /// Approximate f1 by f composed with a circle isotopy.
    Rearrange {
        /// Expression in x, or a CSV of samples.
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, allow_hyphen_values = true)]
        f1: String,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Write isotopy samples (t, x, φ_t(x), φ_t'(x)) here.
        #[arg(long)]
        emit_phi: Option<PathBuf>,
        /// Samples of x per isotopy time.
        #[arg(long, default_value_t = 256)]
        samples: usize,
        #[arg(long, default_value_t = 4096)]
        max_arcs: usize,
    },
    /// Every table for the shipped examples, written to the output directory.
    Report {
        #[arg(long = "N", short = 'n', default_value_t = 6)]
        n: usize,
    },
    /// Run the acceptance checks and write a summary table.
    PaperSuite {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Restrict to these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Debug, Error)]
#[error("{module}: {message}")]
pub struct AppError {
    pub module: &'static str,
    pub message: String,
}

impl AppError {
    pub fn new(module: &'static str, message: impl std::fmt::Display) -> Self {
        Self { module, message: message.to_string() }
    }
}

/// A validated invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub out_dir: Option<PathBuf>,
    pub jobs: usize,
}

fn require_file(module: &'static str, path: &Path) -> Result<(), AppError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(AppError::new(module, format!("{}: no such file", path.display())))
    }
}

fn check_grid(n: usize, d: f64) -> Result<(), AppError> {
    if !(4..=32).contains(&n) {
        return Err(AppError::new("operator", format!("N = {n} outside [4, 32]")));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(AppError::new("operator", format!("d = {d} must be positive")));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, AppError> {
        match &cli.command {
            Command::Curvature { spec, .. } => require_file("curvature", spec)?,
            Command::Zbound { model, budget, .. } => {
                require_file("zbound", model)?;
                if *budget == 0 {
                    return Err(AppError::new("zbound", "budget must be positive"));
                }
            }
            Command::Operator { n, nt, d, kernel_gap, .. } => {
                check_grid(*n, *d)?;
                if let Some(nt) = nt {
                    check_grid(*nt, *d).map_err(|_| AppError::new("operator", format!("nt = {nt} outside [4, 32]")))?;
                }
                if *kernel_gap == Some(0) {
                    return Err(AppError::new("operator", "kernel-gap needs at least one eigenpair"));
                }
            }
            Command::Rearrange { f, f1, eps, p, samples, .. } => {
                if !(*eps > 0.0 && eps.is_finite()) {
                    return Err(AppError::new("rearrange", format!("eps = {eps} must be positive")));
                }
                if !(*p > 1.0 && p.is_finite()) {
                    return Err(AppError::new("rearrange", format!("p = {p} must exceed 1")));
                }
                if *samples == 0 {
                    return Err(AppError::new("rearrange", "samples must be positive"));
                }
                for src in [f, f1] {
                    if src.ends_with(".csv") {
                        require_file("rearrange", Path::new(src))?;
                    }
                }
            }
            Command::Report { n } => check_grid(*n, 1.0)?,
            Command::PaperSuite { only, .. } => {
                if let Some(bad) = only.iter().find(|&&id| suite::criterion(id).is_none()) {
                    return Err(AppError::new("paper-suite", format!("no criterion {bad}")));
                }
            }
        }
        let jobs = if cli.jobs == 0 { std::thread::available_parallelism().map_or(1, |n| n.get()) } else { cli.jobs };
        Ok(Self { command: cli.command, out_dir: cli.out, jobs })
    }
}

/// Parses arguments, runs, and maps the outcome to an exit status:
/// 0 on success, 1 when an acceptance check fails, 2 on any error.
pub fn main_entry<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match RunConfig::from_cli(cli).and_then(|cfg| run(&cfg)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("akscal {e}");
            ExitCode::from(2)
        }
    }
}

/// Runs a validated configuration. `Ok(false)` means some check failed.
pub fn run(cfg: &RunConfig) -> Result<bool, AppError> {
    let out = cfg.out_dir.as_deref();
    match &cfg.command {
        Command::Curvature { spec, exact, csv, blair_c1 } => {
            let file = load_spec(spec).map_err(|e| AppError::new("curvature", e))?;
            let table = if *exact {
                let s = file.exact.as_ref().ok_or_else(|| AppError::new("curvature", "--exact needs rational entries throughout the spec"))?;
                curvature_table(s, *blair_c1)?
            } else {
                curvature_table(&file.float, *blair_c1)?
            };
            emit(&[(table, csv.as_deref())], out)?;
            Ok(true)
        }
        Command::Zbound { model, seed, certify, budget, csv } => {
            let file = load_model(model).map_err(|e| AppError::new("zbound", e))?;
            let seed = match seed {
                Some(v) => Some(class_from(&file.model, v)?),
                None => file.seed.or_else(|| file.model.default_seed()),
            };
            let seed = seed.ok_or_else(|| AppError::new("zbound", "no seed class: pass --seed or add a `seed` line"))?;
            let cfg = OptimizerConfig { budget: *budget, ..Default::default() };
            let tables = zbound_tables(&file.model, &seed, &cfg, *certify)?;
            let mut targets: Vec<(Table, Option<&Path>)> = Vec::new();
            for (i, t) in tables.into_iter().enumerate() {
                targets.push((t, if i == 0 { csv.as_deref() } else { None }));
            }
            emit(&targets, out)?;
            Ok(true)
        }
        Command::Operator { variant, n, nt, d, symbol_sweep, kernel_gap } => {
            let mut tables = Vec::new();
            let nt = nt.unwrap_or(*n);
            if *symbol_sweep {
                tables.push(symbol_table(*variant, *n, nt, *d)?);
            }
            if kernel_gap.is_some() || !*symbol_sweep {
                let k = kernel_gap.unwrap_or(4);
                tables.push(kernel_table(*variant, *n, nt, *d, k)?);
            }
            emit(&tables.into_iter().map(|t| (t, None)).collect::<Vec<_>>(), out)?;
            Ok(true)
        }
        Command::Rearrange { f, f1, eps, p, emit_phi, samples, max_arcs } => {
            let cfg = RearrangeConfig { max_arcs: *max_arcs, ..Default::default() };
            let fs = Signal::parse(f, cfg.period).map_err(|e| AppError::new("rearrange", e))?;
            let f1s = Signal::parse(f1, cfg.period).map_err(|e| AppError::new("rearrange", e))?;
            let (summary, nodes, isotopy) = rearrange_tables(&fs, &f1s, *eps, *p, &cfg, *samples)?;
            let mut targets = vec![(summary, None), (nodes, None)];
            if let Some(path) = emit_phi {
                targets.push((isotopy, Some(path.as_path())));
            }
            emit(&targets, out)?;
            Ok(true)
        }
        Command::Report { n } => report(*n, out.unwrap_or(Path::new("akscal-report")), cfg.jobs),
        Command::PaperSuite { seed, only } => {
            let ids: Vec<u8> = if only.is_empty() { suite::CRITERIA.iter().map(|c| c.id).collect() } else { only.clone() };
            let outcomes = suite::run_suite(&ids, *seed, cfg.jobs).map_err(|e| AppError::new("paper-suite", e))?;
            for o in &outcomes {
                say(&format!("{}\n", o.line()));
            }
            let table = suite_table(&outcomes);
            let path = out.unwrap_or(Path::new(".")).join("paper_suite.csv");
            table.save(&path).map_err(|e| AppError::new("paper-suite", format!("{}: {e}", path.display())))?;
            let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| format!("{} ({})", o.id, o.check)).collect();
            if failed.is_empty() {
                say(&format!("all {} checks passed; summary in {}\n", outcomes.len(), path.display()));
                Ok(true)
            } else {
                eprintln!("akscal paper-suite: failed checks {}", failed.join(", "));
                Ok(false)
            }
        }
    }
}

/// Stdout writes that tolerate a closed pipe.
fn say(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

/// Writes each table to its destination, or prints to stdout; several
/// tables on stdout are separated by `# name` lines.
fn emit(tables: &[(Table, Option<&Path>)], out_dir: Option<&Path>) -> Result<(), AppError> {
    let to_stdout = tables.iter().filter(|(t, p)| destination(t, *p, out_dir).is_none()).count();
    for (t, explicit) in tables {
        match destination(t, *explicit, out_dir) {
            Some(path) => t.save(&path).map_err(|e| AppError::new("output", format!("{}: {e}", path.display())))?,
            None => {
                if to_stdout > 1 {
                    say(&format!("# {}\n", t.name));
                }
                say(&t.to_csv_string());
            }
        }
    }
    Ok(())
}

fn idx(i: usize) -> String {
    (i + 1).to_string()
}

pub fn curvature_table<T: Scalar + CsvValue>(spec: &LieFrameSpec<T>, blair_c1: Option<f64>) -> Result<Table, AppError> {
    let c = curvature(spec).map_err(|e| AppError::new("curvature", e))?;
    let n = spec.dim();
    let mut t = Table::new("curvature", &["quantity", "i", "j", "k", "value"]);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let g = c.gamma(i, j, k);
                if !g.is_negligible() {
                    t.push(["gamma".into(), idx(i), idx(j), idx(k), g.csv()]);
                }
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            t.push(["sectional".into(), idx(i), idx(j), String::new(), c.sectional(i, j).csv()]);
        }
    }
    for (name, anti) in [("ricci", false), ("ricci_anti", true)] {
        for i in 0..n {
            for j in i..n {
                let v = if anti { c.ricci_anti(i, j) } else { c.ricci(i, j) };
                t.push([name.into(), idx(i), idx(j), String::new(), v.csv()]);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = c.nabla_j(i, j, k);
                if !v.is_negligible() {
                    t.push(["nabla_j".into(), idx(i), idx(j), idx(k), v.csv()]);
                }
            }
        }
    }
    let blank = || [String::new(), String::new(), String::new()];
    let scalar_row = |t: &mut Table, name: &str, v: String| {
        let [a, b, d] = blank();
        t.push([name.into(), a, b, d, v]);
    };
    scalar_row(&mut t, "scalar", c.scalar().csv());
    scalar_row(&mut t, "star_scalar", c.star_scalar().csv());
    scalar_row(&mut t, "hermitian_scalar", c.hermitian_scalar().csv());
    scalar_row(&mut t, "norm_nabla_j_sq", c.norm_nabla_j_sq().csv());
    scalar_row(&mut t, "norm_nabla_j_sq_components", c.norm_nabla_j_sq_from_components().csv());
    if !spec.volumes().is_empty() {
        let z = z_ratio(spec, &c).map_err(|e| AppError::new("curvature", e))?;
        scalar_row(&mut t, "volume", fmt_f64(spec.total_volume().map_err(|e| AppError::new("curvature", e))?));
        scalar_row(&mut t, "z_ratio", fmt_f64(z));
    }
    if let Some(c1) = blair_c1 {
        let b = blair_check(spec, &c, c1).map_err(|e| AppError::new("curvature", e))?;
        scalar_row(&mut t, "blair_lhs", fmt_f64(b.lhs));
        scalar_row(&mut t, "blair_rhs", fmt_f64(b.rhs));
        scalar_row(&mut t, "blair_discrepancy", fmt_f64(b.discrepancy));
        scalar_row(&mut t, "blair_matches", b.matches.to_string());
    }
    Ok(t)
}

fn class_from(model: &CohomologyModel, v: &[f64]) -> Result<SymplecticClass, AppError> {
    let r = model.rank();
    let product = model.n() == 3;
    let want = r + usize::from(product);
    if v.len() != want {
        return Err(AppError::new("zbound", format!("seed needs {want} coordinates, got {}", v.len())));
    }
    Ok(if product { SymplecticClass::product(v[..r].to_vec(), v[r]) } else { SymplecticClass::four(v.to_vec()) })
}

pub fn zbound_tables(model: &CohomologyModel, seed: &SymplecticClass, cfg: &OptimizerConfig, certify: bool) -> Result<Vec<Table>, AppError> {
    let res = optimize_zbound(model, seed, cfg).map_err(|e| AppError::new("zbound", e))?;
    let mut t = Table::new("zbound", &["quantity", "index", "value"]);
    let row = |t: &mut Table, q: &str, i: String, v: String| t.push([q.into(), i, v]);
    row(&mut t, "model", String::new(), model.name.clone());
    row(&mut t, "value", String::new(), fmt_f64(res.value));
    row(&mut t, "unbounded", String::new(), res.unbounded.to_string());
    row(&mut t, "converged", String::new(), res.converged.to_string());
    row(&mut t, "budget_exhausted", String::new(), res.budget_exhausted.to_string());
    row(&mut t, "iterations", String::new(), res.iterations.to_string());
    row(&mut t, "grad_norm", String::new(), fmt_f64(res.grad_norm));
    for (i, v) in res.argmax.base.iter().enumerate() {
        row(&mut t, "argmax", i.to_string(), fmt_f64(*v));
    }
    if let Some(l) = res.argmax.fiber {
        row(&mut t, "argmax", "l".into(), fmt_f64(l));
    }
    let mut tables = vec![t];
    if certify {
        let mut c = Table::new("certificate", &["quantity", "value"]);
        match &res.certificate {
            None => c.push(["certificate", "none"]),
            Some(cert) => {
                for (q, v) in [
                    ("m", cert.m.to_string()),
                    ("a", fmt_f64(cert.a)),
                    ("b", fmt_f64(cert.b)),
                    ("y", fmt_f64(cert.y)),
                    ("l", fmt_f64(cert.l)),
                    ("h_bound", fmt_f64(cert.h_bound)),
                    ("y_ratio", fmt_f64(cert.y_ratio)),
                    ("y_ratio_min", fmt_f64(cert.y_ratio_min)),
                    ("global_bound", fmt_f64(cert.global_bound)),
                    ("sign_ok", cert.sign_ok.to_string()),
                    ("value_below_bound", (res.value <= cert.h_bound.min(cert.global_bound) + 1e-9).to_string()),
                ] {
                    c.push([q.to_string(), v]);
                }
                c.push(["sign_checks_passed".to_string(), format!("{}/{}", res.sign_checks.0, res.sign_checks.1)]);
            }
        }
        tables.push(c);
    }
    Ok(tables)
}

fn operator(variant: VariantArg, n: usize, nt: usize, d: f64) -> Result<KtOperator, AppError> {
    let grid = match variant {
        VariantArg::Kt => KtGrid::kodaira_thurston(n, nt, d),
        VariantArg::Flat => KtGrid::flat_torus(n, 2.0 * PI),
    }
    .map_err(|e| AppError::new("operator", e))?;
    KtOperator::new(grid, variant.into()).map_err(|e| AppError::new("operator", e))
}

pub fn kernel_table(variant: VariantArg, n: usize, nt: usize, d: f64, k: usize) -> Result<Table, AppError> {
    let cfg = EigenConfig { k, ..Default::default() };
    let nt = if variant == VariantArg::Flat { n } else { nt };
    let rep = kernel_gap(n, nt, d, variant.into(), &cfg).map_err(|e| AppError::new("operator", format!("kernel-gap: {e}")))?;
    let method = match rep.method {
        SpectralMethod::Dense => "dense",
        SpectralMethod::Iterative => "iterative",
    };
    let mut t = Table::new("kernel_gap", &["index", "eigenvalue", "residual", "n", "nt", "unknowns", "method", "iterations"]);
    for (i, (l, r)) in rep.eigenvalues.iter().zip(&rep.residuals).enumerate() {
        t.push([
            idx(i),
            fmt_f64(*l),
            fmt_f64(*r),
            rep.n.to_string(),
            rep.nt.to_string(),
            rep.unknowns.to_string(),
            method.to_string(),
            rep.iterations.to_string(),
        ]);
    }
    Ok(t)
}

/// Modes up to half the Nyquist number: along y on the twisted grid, along x on the flat torus.
pub fn symbol_table(variant: VariantArg, n: usize, nt: usize, d: f64) -> Result<Table, AppError> {
    let op = operator(variant, n, nt, d)?;
    let axis = if variant == VariantArg::Kt { 1 } else { 0 };
    let modes: Vec<[i64; 4]> = (1..=(n / 4).max(1) as i64)
        .map(|m| {
            let mut v = [0; 4];
            v[axis] = m;
            v
        })
        .collect();
    let samples = symbol_sweep(&op, &modes).map_err(|e| AppError::new("operator", format!("symbol-sweep: {e}")))?;
    let mut t = Table::new("symbol_sweep", &["mx", "my", "mz", "mt", "xi_norm", "ratio", "flat_ratio", "excess"]);
    for s in samples {
        let [a, b, c, e] = s.modes.map(|m| m.to_string());
        t.push([a, b, c, e, fmt_f64(s.xi_norm), fmt_f64(s.ratio), fmt_f64(s.flat_ratio), fmt_f64(s.ratio / s.flat_ratio - 1.0)]);
    }
    Ok(t)
}

pub fn rearrange_tables(
    f: &Signal,
    f1: &Signal,
    eps: f64,
    p: f64,
    cfg: &RearrangeConfig,
    samples: usize,
) -> Result<(Table, Table, Table), AppError> {
    let fe = |x: f64| f.eval(x);
    let f1e = |x: f64| f1.eval(x);
    let plan = build_plan(&fe, &f1e, eps, p, cfg).map_err(|e| AppError::new("rearrange", e))?;
    let phi = realize_diffeo(&plan).map_err(|e| AppError::new("rearrange", e))?;
    let err = rearrange_error(&fe, &f1e, &phi, p);
    let min_der = (0..=10).map(|k| phi.min_derivative(k as f64 / 10.0, 10_000)).fold(f64::INFINITY, f64::min);

    let mut s = Table::new("rearrange", &["quantity", "value"]);
    for (q, v) in [
        ("f", f.label().to_string()),
        ("f1", f1.label().to_string()),
        ("epsilon", fmt_f64(eps)),
        ("p", fmt_f64(p)),
        ("delta", fmt_f64(plan.delta)),
        ("arcs", plan.arc_count().to_string()),
        ("identity", plan.identity.to_string()),
        ("tau", fmt_f64(plan.tau)),
        ("omega_length", fmt_f64(plan.omega_length())),
        ("budget", fmt_f64(plan.budget())),
        ("budget_limit", fmt_f64(eps.powf(p) / 2.0)),
        ("min_derivative", fmt_f64(min_der)),
        ("error", fmt_f64(err)),
        ("error_below_epsilon", (err < eps).to_string()),
    ] {
        s.push([q.to_string(), v]);
    }

    let mut nodes = Table::new("rearrange_nodes", &["stage", "x", "y"]);
    for (stage, map) in [("psi", &phi.psi), ("phi", &phi.phi)] {
        for (x, y) in map.nodes() {
            nodes.push([stage.to_string(), fmt_f64(x), fmt_f64(y)]);
        }
    }

    let mut iso = Table::new("isotopy", &["t", "x", "phi_t", "derivative"]);
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        for i in 0..samples {
            let x = cfg.period * i as f64 / samples as f64;
            iso.push([fmt_f64(t), fmt_f64(x), fmt_f64(phi.eval(t, x)), fmt_f64(phi.derivative(t, x))]);
        }
    }
    Ok((s, nodes, iso))
}

fn suite_table(outcomes: &[suite::Outcome]) -> Table {
    let mut t = Table::new("paper_suite", &["id", "check", "anchor", "status", "limit_seconds", "detail"]);
    for o in outcomes {
        t.push([
            o.id.to_string(),
            o.check.to_string(),
            o.anchor.to_string(),
            if o.passed { "PASS" } else { "FAIL" }.to_string(),
            o.limit_seconds.to_string(),
            o.detail.clone(),
        ]);
    }
    t
}

const KT_SPEC: &str = include_str!("../data/kt.spec");
const MODELS: [(&str, &str); 3] = [
    ("cp2", include_str!("../data/cp2.model")),
    ("barlow", include_str!("../data/barlow.model")),
    ("r8", include_str!("../data/r8.model")),
];

/// All tables for the shipped examples, computed on a pool of `jobs` threads.
fn report(n: usize, dir: &Path, jobs: usize) -> Result<bool, AppError> {
    use rayon::prelude::*;

    type Job = Box<dyn Fn() -> Result<Vec<Table>, AppError> + Send + Sync>;
    let mut work: Vec<Job> = vec![Box::new(|| {
        let spec = crate::formats::parse_spec(KT_SPEC).map_err(|e| AppError::new("curvature", e))?;
        let exact = spec.exact.ok_or_else(|| AppError::new("curvature", "shipped spec is not rational"))?;
        let mut t = curvature_table(&exact, Some(0.0))?;
        t.name = "curvature_kt".into();
        Ok(vec![t])
    })];
    for (name, text) in MODELS {
        work.push(Box::new(move || {
            let file = crate::formats::parse_model(text).map_err(|e| AppError::new("zbound", e))?;
            let seed = file.seed.ok_or_else(|| AppError::new("zbound", "shipped model without seed"))?;
            let mut tables = zbound_tables(&file.model, &seed, &OptimizerConfig::default(), true)?;
            for t in &mut tables {
                t.name = format!("{}_{name}", t.name);
            }
            Ok(tables)
        }));
    }
    for variant in [VariantArg::Kt, VariantArg::Flat] {
        work.push(Box::new(move || {
            let mut t = kernel_table(variant, n, n, 1.0, 4)?;
            t.name = format!("kernel_gap_{variant:?}").to_lowercase();
            Ok(vec![t])
        }));
    }
    work.push(Box::new(|| {
        let mut t = symbol_table(VariantArg::Kt, 32, 4, 1.0)?;
        t.name = "symbol_sweep_kt".into();
        Ok(vec![t])
    }));
    work.push(Box::new(|| {
        let f = Signal::expression("sin(x)").map_err(|e| AppError::new("rearrange", e))?;
        let zero = Signal::expression("0").map_err(|e| AppError::new("rearrange", e))?;
        let (a, b, c) = rearrange_tables(&f, &zero, 0.1, 2.0, &RearrangeConfig::default(), 256)?;
        Ok(vec![a, b, c])
    }));

    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| AppError::new("report", e))?;
    let results: Vec<Result<Vec<Table>, AppError>> = pool.install(|| work.par_iter().map(|job| job()).collect());
    for r in results {
        for t in r? {
            let path = dir.join(format!("{}.csv", t.name));
            t.save(&path).map_err(|e| AppError::new("report", format!("{}: {e}", path.display())))?;
            say(&format!("{}\n", path.display()));
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Result<RunConfig, AppError> {
        RunConfig::from_cli(Cli::try_parse_from(args).expect("parses"))
    }

    #[test]
    fn config_ranges() {
        assert!(cli(&["akscal", "operator", "--N", "3"]).is_err());
        assert!(cli(&["akscal", "operator", "--N", "33"]).is_err());
        assert!(cli(&["akscal", "operator", "-n", "4", "--d", "0"]).is_err());
        assert!(cli(&["akscal", "operator", "--N", "32", "--kernel-gap", "0"]).is_err());
        assert!(cli(&["akscal", "operator", "--N", "6"]).is_ok());
        assert!(cli(&["akscal", "rearrange", "--f", "sin(x)", "--f1", "0", "--eps", "0"]).is_err());
        assert!(cli(&["akscal", "rearrange", "--f", "sin(x)", "--f1", "0", "--p", "1"]).is_err());
        assert!(cli(&["akscal", "rearrange", "--f", "sin(x)", "--f1", "missing.csv"]).is_err());
        assert!(cli(&["akscal", "rearrange", "--f", "-sin(x)", "--f1", "0"]).is_ok());
        assert!(cli(&["akscal", "curvature", "/nonexistent/kt.spec"]).is_err());
        assert!(cli(&["akscal", "paper-suite", "--only", "11"]).is_err());
        let cfg = cli(&["akscal", "--jobs", "3", "paper-suite", "--only", "1,2"]).unwrap();
        assert_eq!(cfg.jobs, 3);
    }

    #[test]
    fn exact_kt_table() {
        let spec = crate::formats::parse_spec(KT_SPEC).unwrap().exact.unwrap();
        let t = curvature_table(&spec, Some(0.0)).unwrap();
        let find = |q: &str, i: &str, j: &str| t.rows.iter().find(|r| r[0] == q && r[1] == i && r[2] == j).map(|r| r[4].clone());
        assert_eq!(find("sectional", "1", "2").unwrap(), "-3/4");
        assert_eq!(find("sectional", "1", "3").unwrap(), "1/4");
        assert_eq!(find("ricci_anti", "1", "1").unwrap(), "-1/4");
        assert_eq!(find("scalar", "", "").unwrap(), "-1/2");
        assert_eq!(find("blair_matches", "", "").unwrap(), "true");
        let float = curvature_table(&crate::formats::parse_spec(KT_SPEC).unwrap().float, None).unwrap();
        assert_eq!(float.rows.len(), t.rows.len() - 4);
    }

    #[test]
    fn seeds_follow_model_shape() {
        let barlow = CohomologyModel::barlow();
        assert!(class_from(&barlow, &[1.0; 9]).is_err());
        assert_eq!(class_from(&barlow, &[1.0; 10]).unwrap().fiber, Some(1.0));
        assert_eq!(class_from(&CohomologyModel::cp2(), &[2.0]).unwrap(), SymplecticClass::four(vec![2.0]));
    }
}
