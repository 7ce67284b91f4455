//! Rearrangement on the circle `ℝ / Lℤ`: given continuous `f` and a target
//! `f₁` with `inf f ≤ f₁ ≤ sup f`, build a smooth isotopy `Φ_t` of circle
//! diffeomorphisms with `‖f ∘ Φ₁ − f₁‖_p < ε`.
//!
//! The circle is cut into arcs `Δᵢ` on which `f₁` oscillates by less than
//! `δ`, with `2δ = ε / (2L)^{1/p}`. Each arc minus a transition zone of
//! half-width `τ` around its endpoints is first compressed into a short
//! interval `Uᵢ` inside it (stage ψ) and then translated onto an interval
//! `Vᵢ` where `|f − f₁(bᵢ)| < δ` (stage φ). Both stages are piecewise linear
//! lifts smoothed by a C∞ bump; the isotopy is `Φ_t = φ_t ∘ ψ_t` with
//! `φ_t = (1 − t) id + t φ₁`.
//!
//! An orientation-preserving circle map keeps the cyclic order of the
//! `Vᵢ`, so targets whose levels are visited by `f` in the wrong order
//! cannot be matched; that case is reported as
//! [`RearrangeError::OrderInfeasible`].

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::smooth::smooth_step;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RearrangeError {
    #[error("target leaves [inf f, sup f] = [{lo}, {hi}] (value {value} at {at})")]
    Infeasible { lo: f64, hi: f64, value: f64, at: f64 },
    #[error("epsilon must be positive and p > 1")]
    BadParameters,
    #[error("needs {required:?} arcs for the oscillation bound, cap is {cap}")]
    ArcCap { required: Option<usize>, cap: usize },
    #[error("no cyclically ordered choice of target arcs for {arcs} arcs")]
    OrderInfeasible { arcs: usize },
    #[error("smoothed map has derivative {min:e} below 1e-6")]
    DerivativeCollapse { min: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RearrangeConfig {
    pub period: f64,
    /// Samples per arc for oscillation checks.
    pub samples_per_arc: usize,
    pub max_arcs: usize,
    /// Resolution of level-set scans over one period.
    pub scan_samples: usize,
}

impl Default for RearrangeConfig {
    fn default() -> Self {
        Self { period: 2.0 * core::f64::consts::PI, samples_per_arc: 64, max_arcs: 4096, scan_samples: 1 << 16 }
    }
}

/// Sampled `inf f − tol ≤ f₁ ≤ sup f + tol`.
pub fn feasibility(f: &dyn Fn(f64) -> f64, f1: &dyn Fn(f64) -> f64, period: f64, samples: usize, tol: f64) -> bool {
    check_range(f, f1, period, samples, tol).is_ok()
}

fn check_range(f: &dyn Fn(f64) -> f64, f1: &dyn Fn(f64) -> f64, period: f64, samples: usize, tol: f64) -> Result<(), RearrangeError> {
    let xs = (0..samples).map(|k| period * k as f64 / samples as f64);
    let (lo, hi) = xs.clone().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    for x in xs {
        let v = f1(x);
        if !(v >= lo - tol && v <= hi + tol) {
            return Err(RearrangeError::Infeasible { lo, hi, value: v, at: x });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementPlan {
    pub period: f64,
    pub epsilon: f64,
    pub p: f64,
    pub delta: f64,
    /// `Δᵢ = [arcs[i], arcs[i + 1])`, last one closing at `arcs[0] + L`.
    pub arcs: Vec<f64>,
    /// `bᵢ`, the arc midpoints.
    pub points: Vec<f64>,
    /// `f₁(bᵢ)`.
    pub levels: Vec<f64>,
    /// `Vᵢ` including margins, as increasing lift coordinates.
    pub targets: Vec<(f64, f64)>,
    /// Margin kept on both sides of each `Vᵢ` and `Uᵢ`.
    pub margin: f64,
    /// Half-width of each transition zone around an arc endpoint.
    pub tau: f64,
    /// `max|f| + max|f₁|` (sampled, with a 5% safety factor).
    pub bound: f64,
    /// True when `|f − f₁(bᵢ)| < δ` already holds on every `Δᵢ`.
    pub identity: bool,
}

impl RearrangementPlan {
    pub fn arc_count(&self) -> usize {
        self.points.len()
    }

    /// Total length of the transition zones Ω.
    pub fn omega_length(&self) -> f64 {
        if self.identity {
            0.0
        } else {
            2.0 * self.tau * self.arc_count() as f64
        }
    }

    /// `(max|f| + max|f₁|)^p · |Ω|`, to be compared with `εᵖ / 2`.
    pub fn budget(&self) -> f64 {
        libm::pow(self.bound, self.p) * self.omega_length()
    }

    fn arc(&self, i: usize) -> (f64, f64) {
        let k = self.arcs.len();
        let end = if i + 1 < k { self.arcs[i + 1] } else { self.arcs[0] + self.period };
        (self.arcs[i], end)
    }
}

fn oscillation(g: &dyn Fn(f64) -> f64, a: f64, b: f64, samples: usize) -> f64 {
    let (lo, hi) = (0..=samples)
        .map(|k| g(a + (b - a) * k as f64 / samples as f64))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    hi - lo
}

fn arcs_needed(g: &dyn Fn(f64) -> f64, period: f64, delta: f64, samples: usize, cap: usize) -> Option<usize> {
    let mut k = 1;
    while k <= cap {
        let ok = (0..k).all(|i| {
            let a = period * i as f64 / k as f64;
            oscillation(g, a, a + period / k as f64, samples) < delta
        });
        if ok {
            return Some(k);
        }
        k *= 2;
    }
    None
}

/// First `y ≥ from` with `|f − v| < tol` on all samples of `[y, y + len]`, scanning up to `limit`.
fn find_run(f: &dyn Fn(f64) -> f64, v: f64, tol: f64, from: f64, len: f64, limit: f64, step: f64) -> Option<f64> {
    let mut start: Option<f64> = None;
    let mut y = from;
    while y <= limit {
        if libm::fabs(f(y) - v) < tol {
            let s = *start.get_or_insert(y);
            if y - s >= len {
                return Some(s);
            }
        } else {
            start = None;
        }
        y += step;
    }
    None
}

/// Starting points of good runs for level `v` over one period.
fn run_starts(f: &dyn Fn(f64) -> f64, v: f64, tol: f64, period: f64, step: f64, max: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev = libm::fabs(f(-step) - v) < tol;
    let mut y = 0.0;
    while y < period && out.len() < max {
        let good = libm::fabs(f(y) - v) < tol;
        if good && !prev {
            out.push(y);
        }
        prev = good;
        y += step;
    }
    if out.is_empty() && prev {
        out.push(0.0);
    }
    out
}

/// Greedy cyclically ordered placement of target intervals of length `len`.
fn place_targets(f: &dyn Fn(f64) -> f64, levels: &[f64], tol: f64, len: f64, period: f64, scan: usize) -> Option<Vec<(f64, f64)>> {
    let step = (period / scan as f64).min(len / 4.0);
    let gap = len / 4.0;
    for s0 in run_starts(f, levels[0], tol, period, step, 16) {
        let end = s0 + period;
        let mut cursor = s0;
        let mut out = Vec::with_capacity(levels.len());
        for &v in levels {
            match find_run(f, v, tol, cursor, len, end - gap - len, step) {
                Some(y) => {
                    out.push((y, y + len));
                    cursor = y + len + gap;
                }
                None => break,
            }
        }
        if out.len() == levels.len() {
            return Some(out);
        }
    }
    None
}

/// Partitions the circle and matches every arc with a target interval.
pub fn build_plan(
    f: &dyn Fn(f64) -> f64,
    f1: &dyn Fn(f64) -> f64,
    epsilon: f64,
    p: f64,
    cfg: &RearrangeConfig,
) -> Result<RearrangementPlan, RearrangeError> {
    if !(epsilon > 0.0 && p > 1.0 && epsilon.is_finite() && p.is_finite()) {
        return Err(RearrangeError::BadParameters);
    }
    let period = cfg.period;
    let scan = cfg.scan_samples;
    check_range(f, f1, period, scan, 1e-12)?;
    let delta = epsilon / (2.0 * libm::pow(2.0 * period, 1.0 / p));
    let k = arcs_needed(f1, period, delta, cfg.samples_per_arc, cfg.max_arcs).ok_or_else(|| RearrangeError::ArcCap {
        required: arcs_needed(f1, period, delta, cfg.samples_per_arc, 1 << 20),
        cap: cfg.max_arcs,
    })?;
    let width = period / k as f64;
    let arcs: Vec<f64> = (0..k).map(|i| width * i as f64).collect();
    let points: Vec<f64> = arcs.iter().map(|a| a + 0.5 * width).collect();
    let levels: Vec<f64> = points.iter().map(|&b| f1(b)).collect();
    let sel = 0.8 * delta;
    let samples: Vec<f64> = (0..scan).map(|j| period * j as f64 / scan as f64).collect();
    let max_f = samples.iter().map(|&x| libm::fabs(f(x))).fold(0.0, f64::max);
    let max_f1 = samples.iter().map(|&x| libm::fabs(f1(x))).fold(0.0, f64::max);
    let bound = 1.05 * (max_f + max_f1).max(f64::MIN_POSITIVE);
    let mut plan = RearrangementPlan {
        period,
        epsilon,
        p,
        delta,
        arcs,
        points,
        levels,
        targets: Vec::new(),
        margin: 0.0,
        tau: 0.0,
        bound,
        identity: false,
    };

    let identity = (0..k).all(|i| {
        let (a, b) = plan.arc(i);
        (0..=cfg.samples_per_arc).all(|j| libm::fabs(f(a + (b - a) * j as f64 / cfg.samples_per_arc as f64) - plan.levels[i]) < sel)
    });
    if identity {
        plan.identity = true;
        plan.targets = (0..k).map(|i| plan.arc(i)).collect();
        return Ok(plan);
    }

    // Ω budget: 2τk (max|f| + max|f₁|)^p < εᵖ / 2.
    let tau = (0.9 * libm::pow(epsilon, p) / (4.0 * k as f64 * libm::pow(bound, p))).min(width / 8.0);
    let mut len = width / 2.0;
    // Targets shorter than a few scan steps cannot be verified by sampling.
    let min_len = 4.0 * period / scan as f64;
    let targets = loop {
        if let Some(t) = place_targets(f, &plan.levels, sel, len, period, scan) {
            break t;
        }
        len /= 2.0;
        if len < min_len {
            return Err(RearrangeError::OrderInfeasible { arcs: k });
        }
    };
    plan.targets = targets;
    plan.margin = len / 4.0;
    plan.tau = tau;
    Ok(plan)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 1.0;
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
            if libm::fabs(dx) < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Lift `F(x + L) = F(x) + L` of a piecewise linear increasing circle map,
/// convolved with a C∞ bump of half-width `width`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothCircleMap {
    period: f64,
    xs: Vec<f64>,
    ys: Vec<f64>,
    width: f64,
    gl: Vec<(f64, f64)>,
}

impl SmoothCircleMap {
    pub fn identity(period: f64) -> Self {
        Self { period, xs: Vec::new(), ys: Vec::new(), width: 0.0, gl: Vec::new() }
    }

    /// Nodes must increase strictly within one period in both coordinates.
    pub fn new(period: f64, xs: Vec<f64>, ys: Vec<f64>, width: f64) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(!xs.is_empty());
        let n = xs.len();
        for j in 0..n {
            let (nx, ny) = if j + 1 < n { (xs[j + 1], ys[j + 1]) } else { (xs[0] + period, ys[0] + period) };
            assert!(nx > xs[j] && ny > ys[j], "nodes must increase strictly");
        }
        Self { period, xs, ys, width, gl: gauss_legendre(16) }
    }

    pub fn is_identity(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    /// Segment containing `x` after reduction, and the revolution count.
    fn locate(&self, x: f64) -> (usize, f64) {
        let k = libm::floor((x - self.xs[0]) / self.period);
        let r = x - k * self.period;
        let j = self.xs.partition_point(|&v| v <= r).max(1) - 1;
        (j, k)
    }

    fn segment(&self, j: usize) -> (f64, f64, f64, f64) {
        let n = self.xs.len();
        if j + 1 < n {
            (self.xs[j], self.ys[j], self.xs[j + 1], self.ys[j + 1])
        } else {
            (self.xs[j], self.ys[j], self.xs[0] + self.period, self.ys[0] + self.period)
        }
    }

    /// The unsmoothed piecewise linear lift.
    pub fn eval_pl(&self, x: f64) -> f64 {
        if self.is_identity() {
            return x;
        }
        let (j, k) = self.locate(x);
        let (x0, y0, x1, y1) = self.segment(j);
        let r = x - k * self.period;
        y0 + (y1 - y0) * (r - x0) / (x1 - x0) + k * self.period
    }

    fn slope_pl(&self, x: f64) -> f64 {
        let (j, _) = self.locate(x);
        let (x0, y0, x1, y1) = self.segment(j);
        (y1 - y0) / (x1 - x0)
    }

    /// Kinks strictly inside `(lo, hi)`, ascending.
    fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let k0 = libm::floor((lo - self.xs[0]) / self.period) as i64;
        let k1 = libm::floor((hi - self.xs[0]) / self.period) as i64;
        for k in k0..=k1 {
            for &x in &self.xs {
                let v = x + k as f64 * self.period;
                if v > lo && v < hi {
                    out.push(v);
                }
            }
        }
        out
    }

    fn pieces(&self, x: f64) -> Vec<f64> {
        let (lo, hi) = (x - self.width, x + self.width);
        let mut cuts = vec![lo];
        cuts.extend(self.kinks(lo, hi));
        cuts.push(hi);
        cuts
    }

    fn cdf(&self, s: f64) -> f64 {
        smooth_step((s + self.width) / (2.0 * self.width))
    }

    /// `∫ F(x − s) ρ(s) ds`: the linear interpolant plus a correction
    /// `Δslope · (E(z − S)₊ − z₊)` for every kink within the window.
    pub fn eval(&self, x: f64) -> f64 {
        if self.is_identity() || self.width == 0.0 {
            return self.eval_pl(x);
        }
        let w = self.width;
        let mut v = self.eval_pl(x);
        for k in self.kinks(x - w, x + w) {
            let jump = self.slope_pl(k + 1e-9 * w) - self.slope_pl(k - 1e-9 * w);
            let z = x - k;
            v += jump * (2.0 * w * self.ramp_integral((z + w) / (2.0 * w)) - z.max(0.0));
        }
        v
    }

    /// `∫₀ᵘ S(v) dv` for the smooth step `S`, by composite Gauss-Legendre.
    fn ramp_integral(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return u - 0.5;
        }
        if u > 0.5 {
            // S(v) = 1 − S(1 − v).
            return u - 0.5 + self.ramp_integral(1.0 - u);
        }
        let panels = 8;
        let h = u / panels as f64;
        let mut s = 0.0;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for &(t, wt) in &self.gl {
                s += wt * 0.5 * h * smooth_step(mid + 0.5 * h * t);
            }
        }
        s
    }

    /// Exact derivative: slope-weighted bump mass over each linear piece.
    pub fn derivative(&self, x: f64) -> f64 {
        if self.is_identity() {
            return 1.0;
        }
        if self.width == 0.0 {
            return self.slope_pl(x);
        }
        let cuts = self.pieces(x);
        let mut d = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            d += self.slope_pl(0.5 * (a + b)) * (self.cdf(x - a) - self.cdf(x - b));
        }
        d
    }

    /// Smallest linear piece length.
    pub fn min_piece(&self) -> f64 {
        (0..self.xs.len()).map(|j| {
            let (x0, _, x1, _) = self.segment(j);
            x1 - x0
        }).fold(f64::INFINITY, f64::min)
    }

    fn min_slope(&self) -> f64 {
        (0..self.xs.len()).map(|j| {
            let (x0, y0, x1, y1) = self.segment(j);
            (y1 - y0) / (x1 - x0)
        }).fold(f64::INFINITY, f64::min)
    }

    fn max_slope(&self) -> f64 {
        (0..self.xs.len()).map(|j| {
            let (x0, y0, x1, y1) = self.segment(j);
            (y1 - y0) / (x1 - x0)
        }).fold(0.0, f64::max)
    }
}

/// The two-stage isotopy `Φ_t = φ_t ∘ ψ_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseDiffeo {
    pub psi: SmoothCircleMap,
    pub phi: SmoothCircleMap,
}

fn blend(t: f64, x: f64, fx: f64) -> f64 {
    (1.0 - t) * x + t * fx
}

impl PiecewiseDiffeo {
    pub fn identity(period: f64) -> Self {
        Self { psi: SmoothCircleMap::identity(period), phi: SmoothCircleMap::identity(period) }
    }

    pub fn period(&self) -> f64 {
        self.psi.period
    }

    pub fn is_identity(&self) -> bool {
        self.psi.is_identity() && self.phi.is_identity()
    }

    /// `Φ_t(x)` as a lift.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let y = blend(t, x, self.psi.eval(x));
        blend(t, y, self.phi.eval(y))
    }

    pub fn derivative(&self, t: f64, x: f64) -> f64 {
        let y = blend(t, x, self.psi.eval(x));
        let dy = blend(t, 1.0, self.psi.derivative(x));
        blend(t, 1.0, self.phi.derivative(y)) * dy
    }

    /// Minimum of `Φ_t'` over `samples` equispaced points.
    pub fn min_derivative(&self, t: f64, samples: usize) -> f64 {
        let l = self.period();
        (0..samples).map(|k| self.derivative(t, l * k as f64 / samples as f64)).fold(f64::INFINITY, f64::min)
    }

    /// `Φ₁⁻¹(y)` by bisection on the lift.
    pub fn inverse(&self, y: f64) -> f64 {
        let l = self.period();
        let (mut lo, mut hi) = (y - 2.0 * l, y + 2.0 * l);
        while self.eval(1.0, lo) > y {
            lo -= l;
        }
        while self.eval(1.0, hi) < y {
            hi += l;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval(1.0, mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * (1.0 + libm::fabs(mid)) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Points of `[0, L)` where `Φ₁` changes character; quadrature breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let l = self.period();
        let mut pts = vec![0.0];
        let red = |v: f64| v - libm::floor(v / l) * l;
        for (x, _) in self.psi.nodes() {
            for s in [-1.0, 0.0, 1.0] {
                pts.push(red(x + s * self.psi.width));
            }
        }
        // ψ₁ is increasing; pull φ's kinks back through it.
        for (u, _) in self.phi.nodes() {
            for s in [-1.0, 0.0, 1.0] {
                let target = u + s * self.phi.width;
                let (mut lo, mut hi) = (target - 2.0 * l, target + 2.0 * l);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if self.psi.eval(mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                pts.push(red(0.5 * (lo + hi)));
            }
        }
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        pts.dedup_by(|a, b| libm::fabs(*a - *b) < 1e-14);
        pts
    }
}

/// Realizes the plan as a smooth two-stage isotopy.
pub fn realize_diffeo(plan: &RearrangementPlan) -> Result<PiecewiseDiffeo, RearrangeError> {
    let l = plan.period;
    if plan.identity {
        return Ok(PiecewiseDiffeo::identity(l));
    }
    let k = plan.arc_count();
    let m = plan.margin;
    let mut psi_x = Vec::with_capacity(2 * k);
    let mut psi_y = Vec::with_capacity(2 * k);
    let mut phi_x = Vec::with_capacity(2 * k);
    let mut phi_y = Vec::with_capacity(2 * k);
    for i in 0..k {
        let (a, b) = plan.arc(i);
        let (c, d) = plan.targets[i];
        let core = (d - c) - 2.0 * m;
        let mid = plan.points[i];
        // Uᵢ: core of the target length centred at bᵢ, with margins inside Δᵢ.
        let (u0, u1) = (mid - 0.5 * core, mid + 0.5 * core);
        psi_x.extend([a + plan.tau, b - plan.tau]);
        psi_y.extend([u0, u1]);
        phi_x.extend([u0 - m, u1 + m]);
        phi_y.extend([c, d]);
    }
    // Lifts must start inside one period window; targets may sit a period later.
    let shift = libm::floor(phi_y[0] / l) * l;
    for y in &mut phi_y {
        *y -= shift;
    }
    let psi_pl = SmoothCircleMap::new(l, psi_x.clone(), psi_y.clone(), 0.0);
    let phi_pl = SmoothCircleMap::new(l, phi_x.clone(), phi_y.clone(), 0.0);
    // Points of the bulk near its edges must stay within half a margin of Uᵢ.
    let mut w_psi = (0.25 * psi_pl.min_piece()).min(0.5 * m / psi_pl.max_slope());
    let mut w_phi = (0.25 * phi_pl.min_piece()).min(0.5 * m);
    for attempt in 0..2 {
        let map = PiecewiseDiffeo {
            psi: SmoothCircleMap::new(l, psi_x.clone(), psi_y.clone(), w_psi),
            phi: SmoothCircleMap::new(l, phi_x.clone(), phi_y.clone(), w_phi),
        };
        let min = map.min_derivative(1.0, 10_000).min(psi_pl.min_slope() * phi_pl.min_slope());
        if min >= 1e-6 {
            return Ok(map);
        }
        if attempt == 1 {
            return Err(RearrangeError::DerivativeCollapse { min });
        }
        w_psi *= 0.5;
        w_phi *= 0.5;
    }
    unreachable!()
}

/// `‖f ∘ Φ₁ − f₁‖_p` by composite Simpson between the map's breakpoints.
pub fn rearrange_error(f: &dyn Fn(f64) -> f64, f1: &dyn Fn(f64) -> f64, phi: &PiecewiseDiffeo, p: f64) -> f64 {
    let l = phi.period();
    let mut pts = phi.breakpoints();
    pts.push(l);
    let integrand = |x: f64| libm::pow(libm::fabs(f(phi.eval(1.0, x)) - f1(x)), p);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let sweep = libm::fabs(phi.eval(1.0, b) - phi.eval(1.0, a));
        let pieces = 16 * (1 + libm::ceil(256.0 * (sweep + (b - a)) / l) as usize).min(4096);
        let h = (b - a) / pieces as f64;
        let mut s = integrand(a) + integrand(b);
        for j in 1..pieces {
            s += if j % 2 == 1 { 4.0 } else { 2.0 } * integrand(a + j as f64 * h);
        }
        total += s * h / 3.0;
    }
    libm::pow(total, 1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn sin(x: f64) -> f64 {
        libm::sin(x)
    }
    fn zero(_: f64) -> f64 {
        0.0
    }

    #[test]
    fn feasibility_examples() {
        assert!(feasibility(&sin, &zero, 2.0 * PI, 4096, 1e-12));
        assert!(!feasibility(&sin, &|_| 2.0, 2.0 * PI, 4096, 1e-12));
        assert!(feasibility(&sin, &sin, 2.0 * PI, 4096, 1e-12));
        let cfg = RearrangeConfig::default();
        assert!(matches!(build_plan(&sin, &|_| 2.0, 0.1, 2.0, &cfg), Err(RearrangeError::Infeasible { .. })));
        assert_eq!(build_plan(&sin, &zero, 0.0, 2.0, &cfg), Err(RearrangeError::BadParameters));
        assert_eq!(build_plan(&sin, &zero, 0.1, 1.0, &cfg), Err(RearrangeError::BadParameters));
    }

    #[test]
    fn sin_to_zero_plan_targets_the_zeros() {
        let plan = build_plan(&sin, &zero, 0.1, 2.0, &RearrangeConfig::default()).unwrap();
        assert!(!plan.identity);
        assert!((2.0 * plan.delta - 0.1 / libm::sqrt(4.0 * PI)).abs() < 1e-15);
        assert!(plan.budget() < 0.5 * 0.01);
        for &(c, d) in &plan.targets {
            for j in 0..=100 {
                let y = c + (d - c) * j as f64 / 100.0;
                assert!(libm::sin(y).abs() < plan.delta);
            }
            let r = c - libm::floor(c / PI + 0.5) * PI;
            assert!(r.abs() < 0.05, "target near a zero of sin, got {c}");
        }
    }

    #[test]
    fn achieved_error_below_epsilon() {
        let mut last = f64::INFINITY;
        for eps in [0.2, 0.1, 0.05] {
            let plan = build_plan(&sin, &zero, eps, 2.0, &RearrangeConfig::default()).unwrap();
            let phi = realize_diffeo(&plan).unwrap();
            let err = rearrange_error(&sin, &zero, &phi, 2.0);
            assert!(err < eps, "eps {eps}: error {err}");
            assert!(err <= last);
            last = err;
            for t in [0.0, 0.25, 0.5, 1.0] {
                assert!(phi.min_derivative(t, 10_000) > 0.0);
            }
            for x in [0.0, 1.0, 3.0, 6.0] {
                assert_eq!(phi.eval(0.0, x), x);
            }
        }
    }

    #[test]
    fn identity_plan_for_equal_functions() {
        let plan = build_plan(&sin, &sin, 0.1, 2.0, &RearrangeConfig::default()).unwrap();
        assert!(plan.identity);
        assert_eq!(plan.omega_length(), 0.0);
        let phi = realize_diffeo(&plan).unwrap();
        assert!(phi.is_identity());
        for t in [0.0, 0.5, 1.0] {
            assert_eq!(phi.eval(t, 1.234), 1.234);
        }
        assert_eq!(rearrange_error(&sin, &sin, &phi, 2.0), 0.0);
    }

    #[test]
    fn halving_epsilon_at_most_doubles_arcs() {
        let f1 = |x: f64| 0.5 * libm::cos(3.0 * x);
        let cfg = RearrangeConfig::default();
        let a = build_plan(&sin, &f1, 0.2, 2.0, &cfg);
        let b = build_plan(&sin, &f1, 0.1, 2.0, &cfg);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                assert!((a.delta - 2.0 * b.delta).abs() < 1e-15);
                assert!(b.arc_count() <= 2 * a.arc_count() + 1);
            }
            // sin visits each level twice per turn; three oscillations cannot be matched in order.
            (Err(e), _) | (_, Err(e)) => assert!(matches!(e, RearrangeError::OrderInfeasible { .. })),
        }
        let a = build_plan(&sin, &|x| 0.5 * libm::sin(x), 0.2, 2.0, &cfg).unwrap();
        let b = build_plan(&sin, &|x| 0.5 * libm::sin(x), 0.1, 2.0, &cfg).unwrap();
        assert!(b.arc_count() <= 2 * a.arc_count() + 1);
    }

    #[test]
    fn order_infeasible_and_arc_cap() {
        let cfg = RearrangeConfig::default();
        let f1 = |x: f64| 0.9 * libm::sin(5.0 * x);
        assert!(matches!(build_plan(&sin, &f1, 0.05, 2.0, &cfg), Err(RearrangeError::OrderInfeasible { .. })));
        let small = RearrangeConfig { max_arcs: 4, ..cfg };
        match build_plan(&sin, &|x| 0.5 * libm::sin(x), 0.05, 2.0, &small) {
            Err(RearrangeError::ArcCap { required: Some(r), cap: 4 }) => assert!(r > 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scaled_target_is_matched() {
        let f1 = |x: f64| 0.5 * libm::sin(x) + 0.2;
        for eps in [0.2, 0.1] {
            let plan = build_plan(&sin, &f1, eps, 3.0, &RearrangeConfig::default()).unwrap();
            assert!(plan.budget() < 0.5 * libm::pow(eps, 3.0));
            let phi = realize_diffeo(&plan).unwrap();
            assert!(phi.min_derivative(1.0, 10_000) > 0.0);
            assert!(rearrange_error(&sin, &f1, &phi, 3.0) < eps);
        }
    }

    #[test]
    fn realized_map_inverts() {
        let plan = build_plan(&sin, &zero, 0.1, 2.0, &RearrangeConfig::default()).unwrap();
        let phi = realize_diffeo(&plan).unwrap();
        for j in 0..200 {
            let x = 2.0 * PI * j as f64 / 200.0;
            assert!((phi.inverse(phi.eval(1.0, x)) - x).abs() < 1e-6);
        }
    }

    #[test]
    fn two_arc_compression_is_monotone() {
        let l = 2.0 * PI;
        let map = SmoothCircleMap::new(l, vec![0.5, 3.0], vec![1.0, 1.2], 0.1);
        let mut prev = map.eval(0.0);
        for j in 1..=10_000 {
            let x = l * j as f64 / 10_000.0;
            let v = map.eval(x);
            assert!(v > prev);
            assert!(map.derivative(x) > 0.0);
            prev = v;
        }
        for x in [0.0, 0.45, 0.5, 3.02] {
            assert!((map.eval(x + l) - map.eval(x) - l).abs() < 1e-12);
        }
        // Away from kinks the smoothing leaves the linear map untouched.
        assert_eq!(map.eval(1.5), map.eval_pl(1.5));
        // Derivative agrees with a difference quotient of the quadrature values.
        for x in [0.45, 0.5, 0.57, 2.95, 3.05] {
            let h = 1e-5;
            let fd = (map.eval(x + h) - map.eval(x - h)) / (2.0 * h);
            assert!((fd - map.derivative(x)).abs() < 1e-6, "{x}: {fd} vs {}", map.derivative(x));
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let gl = gauss_legendre(16);
        let s: f64 = gl.iter().map(|&(x, w)| w * x.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
        assert!((gl.iter().map(|g| g.1).sum::<f64>() - 2.0).abs() < 1e-14);
    }

    struct Lcg(u64);
    impl Lcg {
        fn next(&mut self) -> f64 {
            self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (self.0 >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    #[test]
    fn infeasible_targets_bound_the_error_from_below() {
        let l = 2.0 * PI;
        let (eta, p) = (0.3, 2.0);
        // f₁ = 1 + η on [0, 1), 0 elsewhere: measure m = 1 above sup f + η.
        let f1 = |x: f64| {
            let r = x - libm::floor(x / l) * l;
            if r < 1.0 {
                1.0 + eta
            } else {
                0.0
            }
        };
        let mut rng = Lcg(11);
        for _ in 0..100 {
            let n = 2 + (rng.next() * 6.0) as usize;
            let mut xs: Vec<f64> = (0..n).map(|_| rng.next() * l).collect();
            let mut ys: Vec<f64> = (0..n).map(|_| rng.next() * l).collect();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs.dedup();
            ys.dedup();
            let k = xs.len().min(ys.len());
            xs.truncate(k);
            ys.truncate(k);
            let map = SmoothCircleMap::new(l, xs, ys, 0.0);
            let phi = PiecewiseDiffeo { psi: map, phi: SmoothCircleMap::identity(l) };
            let err = rearrange_error(&sin, &f1, &phi, p);
            assert!(err >= eta * libm::pow(1.0, 1.0 / p) - 1e-9, "{err}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn random_levels_are_reached(c in -0.8f64..0.8, eps in 0.08f64..0.3, p in 1.5f64..4.0) {
            let f1 = move |_: f64| c;
            let plan = build_plan(&sin, &f1, eps, p, &RearrangeConfig::default()).unwrap();
            prop_assert!(plan.budget() < 0.5 * libm::pow(eps, p));
            let phi = realize_diffeo(&plan).unwrap();
            prop_assert!(phi.min_derivative(1.0, 10_000) > 0.0);
            prop_assert!(phi.min_derivative(0.5, 10_000) > 0.0);
            let err = rearrange_error(&sin, &f1, &phi, p);
            prop_assert!(err < eps, "error {} for eps {}", err, eps);
        }
    }
}
