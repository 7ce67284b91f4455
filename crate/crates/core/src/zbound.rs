//! Intersection-form arithmetic and the scale-invariant upper bound
//!
//! `Z(class) = 4π c₁·[ω]^{n−1}/(n−1)! / ([ω]ⁿ/n!)^{(n−1)/n}`
//!
//! for 4-manifolds (`n = 2`) and products `X × Σ` of a 4-manifold with a
//! surface (`n = 3`). A class on the product is `π₁*a + l·c`, `c` the
//! pulled-back area class of `Σ`, and the formulas used are
//!
//! * `[ω]³ = 3 (aQa) l`
//! * `c₁·[ω]² = f (aQa) + 2l (c₁Qa)` with `f = ⟨c₁(Σ), [Σ]⟩`.
//!
//! Classes in the positive cone of products of the form `Q = diag(1, −1, …)`,
//! `c₁ = (3, −1, …)`, `f = −2` admit an analytic upper bound which is
//! evaluated alongside the optimizer as a [`Certificate`].

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use thiserror::Error;

use crate::linalg::{dot, norm};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZError {
    #[error("rank mismatch: model has rank {model}, class has {class}")]
    RankMismatch { model: usize, class: usize },
    #[error("class on a product model needs a fiber coefficient (and none on a 4-manifold model)")]
    FiberMismatch,
    #[error("class is not in the positive cone: top power {0:e}")]
    NotInCone(f64),
    #[error("intersection form must be a symmetric {rank}x{rank} matrix")]
    BadForm { rank: usize },
    #[error("intersection form is degenerate")]
    DegenerateForm,
    #[error("c1 has {got} entries, rank is {rank}")]
    BadC1 { rank: usize, got: usize },
    #[error("half-dimension must be 2 or 3, got {0}")]
    BadHalfDimension(usize),
    #[error("product models (n = 3) need a fiber Chern number and 4-manifold models must not have one")]
    MissingFiber,
    #[error("operation needs a 4-manifold model")]
    NotFourManifold,
    #[error("h-function needs a < 0 and b < 0, got a = {a}, b = {b}")]
    HSign { a: f64, b: f64 },
    #[error("y-ratio needs 0 <= m < 9, got {0}")]
    YRange(usize),
}

/// Second cohomology of a 4-manifold, optionally times a surface.
#[derive(Debug, Clone, PartialEq)]
pub struct CohomologyModel {
    pub name: String,
    rank: usize,
    q: Vec<i64>,
    c1: Vec<i64>,
    fiber_chern: Option<i64>,
    pub euler: i64,
    pub signature: i64,
    n: usize,
}

fn integer_det(rank: usize, q: &[i64]) -> i128 {
    // Fraction-free Bareiss elimination.
    let mut m: Vec<i128> = q.iter().map(|&v| v as i128).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..rank {
        if m[k * rank + k] == 0 {
            let Some(p) = (k + 1..rank).find(|&r| m[r * rank + k] != 0) else {
                return 0;
            };
            for c in 0..rank {
                m.swap(k * rank + c, p * rank + c);
            }
            sign = -sign;
        }
        for i in k + 1..rank {
            for j in k + 1..rank {
                m[i * rank + j] = (m[i * rank + j] * m[k * rank + k] - m[i * rank + k] * m[k * rank + j]) / prev;
            }
        }
        prev = m[k * rank + k];
    }
    sign * m[rank * rank - 1]
}

impl CohomologyModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        rank: usize,
        q: Vec<i64>,
        c1: Vec<i64>,
        fiber_chern: Option<i64>,
        euler: i64,
        signature: i64,
        n: usize,
    ) -> Result<Self, ZError> {
        if rank == 0 || q.len() != rank * rank {
            return Err(ZError::BadForm { rank });
        }
        for i in 0..rank {
            for j in 0..i {
                if q[i * rank + j] != q[j * rank + i] {
                    return Err(ZError::BadForm { rank });
                }
            }
        }
        if integer_det(rank, &q) == 0 {
            return Err(ZError::DegenerateForm);
        }
        if c1.len() != rank {
            return Err(ZError::BadC1 { rank, got: c1.len() });
        }
        if n != 2 && n != 3 {
            return Err(ZError::BadHalfDimension(n));
        }
        if (n == 3) != fiber_chern.is_some() {
            return Err(ZError::MissingFiber);
        }
        Ok(Self { name: name.into(), rank, q, c1, fiber_chern, euler, signature, n })
    }

    /// `CP²`: `Q = (1)`, `c₁ = 3H`.
    pub fn cp2() -> Self {
        Self::new("cp2", 1, vec![1], vec![3], None, 3, 1, 2).expect("valid model")
    }

    /// `CP²` with reversed orientation. `c₁ = 0` is a placeholder: no integer class works.
    pub fn cp2_reversed() -> Self {
        Self::new("cp2-reversed", 1, vec![-1], vec![0], None, 3, -1, 2).expect("valid model")
    }

    /// `T⁴`: three hyperbolic planes, `c₁ = 0`.
    pub fn torus4() -> Self {
        let mut q = vec![0; 36];
        for p in 0..3 {
            q[(2 * p) * 6 + 2 * p + 1] = 1;
            q[(2 * p + 1) * 6 + 2 * p] = 1;
        }
        Self::new("torus4", 6, q, vec![0; 6], None, 0, 0, 2).expect("valid model")
    }

    /// `Q = diag(1, −1×m)`, `c₁ = (3, −1×m)`, times a genus-2 surface.
    fn blown_up_plane_times_genus2(name: &str, m: usize) -> Self {
        let rank = m + 1;
        let mut q = vec![0; rank * rank];
        q[0] = 1;
        for i in 1..rank {
            q[i * rank + i] = -1;
        }
        let mut c1 = vec![-1; rank];
        c1[0] = 3;
        Self::new(name, rank, q, c1, Some(-2), 3 + m as i64, 1 - m as i64, 3).expect("valid model")
    }

    /// Barlow surface times a genus-2 surface; default seed lies in the `n₀ < 0` component.
    pub fn barlow() -> Self {
        Self::blown_up_plane_times_genus2("barlow", 8)
    }

    /// `CP² # 8 CP²-bar` times a genus-2 surface; default seed lies in the `n₀ > 0` component.
    pub fn r8() -> Self {
        Self::blown_up_plane_times_genus2("r8", 8)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn q(&self, i: usize, j: usize) -> i64 {
        self.q[i * self.rank + j]
    }

    pub fn c1(&self) -> &[i64] {
        &self.c1
    }

    pub fn fiber_chern(&self) -> Option<i64> {
        self.fiber_chern
    }

    /// Half the real dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `xᵀQy`.
    pub fn pair(&self, x: &[f64], y: &[f64]) -> f64 {
        let r = self.rank;
        let mut s = 0.0;
        for i in 0..r {
            let mut row = 0.0;
            for j in 0..r {
                row += self.q[i * r + j] as f64 * y[j];
            }
            s += x[i] * row;
        }
        s
    }

    fn q_times(&self, x: &[f64]) -> Vec<f64> {
        let r = self.rank;
        (0..r).map(|i| (0..r).map(|j| self.q[i * r + j] as f64 * x[j]).sum()).collect()
    }

    fn c1_f64(&self) -> Vec<f64> {
        self.c1.iter().map(|&v| v as f64).collect()
    }

    /// Number of positive eigenvalues of `Q` (the positive index `b⁺`).
    pub fn positive_index(&self) -> usize {
        let m = crate::linalg::Matrix::from_fn(self.rank, self.rank, |i, j| self.q(i, j) as f64);
        crate::linalg::symmetric_eigen(&m).values.iter().filter(|&&v| v > 0.0).count()
    }

    /// The default seed shipped with the named models, if any.
    pub fn default_seed(&self) -> Option<SymplecticClass> {
        let m = self.rank.checked_sub(1)?;
        match self.name.as_str() {
            "cp2" => Some(SymplecticClass::four(vec![1.0])),
            "barlow" => {
                let mut base = vec![1.0; m + 1];
                base[0] = -3.0;
                Some(SymplecticClass::product(base, 1.0))
            }
            "r8" => {
                let mut base = vec![0.0; m + 1];
                base[0] = 1.0;
                Some(SymplecticClass::product(base, 1.0))
            }
            _ => None,
        }
    }

    /// Whether the model is `diag(1, −1×m)`, `c₁ = (3, −1×m)`, `f = −2`, `n = 3`.
    pub fn is_blown_up_plane_product(&self) -> bool {
        if self.n != 3 || self.fiber_chern != Some(-2) || self.rank < 2 {
            return false;
        }
        let r = self.rank;
        for i in 0..r {
            for j in 0..r {
                let expected = if i != j {
                    0
                } else if i == 0 {
                    1
                } else {
                    -1
                };
                if self.q(i, j) != expected {
                    return false;
                }
            }
        }
        self.c1[0] == 3 && self.c1[1..].iter().all(|&v| v == -1)
    }
}

/// A cohomology class `Σ nᵢ Eᵢ (+ l·c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticClass {
    pub base: Vec<f64>,
    pub fiber: Option<f64>,
}

impl SymplecticClass {
    pub fn four(base: Vec<f64>) -> Self {
        Self { base, fiber: None }
    }

    pub fn product(base: Vec<f64>, l: f64) -> Self {
        Self { base, fiber: Some(l) }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { base: self.base.iter().map(|v| v * c).collect(), fiber: self.fiber.map(|l| l * c) }
    }

    /// All coordinates, fiber last.
    pub fn coords(&self) -> Vec<f64> {
        let mut v = self.base.clone();
        v.extend(self.fiber);
        v
    }

    pub fn euclidean_norm(&self) -> f64 {
        norm(&self.coords())
    }

    fn from_coords(coords: &[f64], has_fiber: bool) -> Self {
        if has_fiber {
            let (base, l) = coords.split_at(coords.len() - 1);
            Self::product(base.to_vec(), l[0])
        } else {
            Self::four(coords.to_vec())
        }
    }
}

fn check(model: &CohomologyModel, class: &SymplecticClass) -> Result<(), ZError> {
    if class.base.len() != model.rank {
        return Err(ZError::RankMismatch { model: model.rank, class: class.base.len() });
    }
    if (model.n == 3) != class.fiber.is_some() {
        return Err(ZError::FiberMismatch);
    }
    Ok(())
}

/// `[ω]ⁿ` evaluated on the fundamental class.
pub fn top_power(model: &CohomologyModel, class: &SymplecticClass) -> Result<f64, ZError> {
    check(model, class)?;
    let aqa = model.pair(&class.base, &class.base);
    Ok(match class.fiber {
        Some(l) => 3.0 * aqa * l,
        None => aqa,
    })
}

/// `c₁·[ω]^{n−1}` evaluated on the fundamental class.
pub fn chern_pairing(model: &CohomologyModel, class: &SymplecticClass) -> Result<f64, ZError> {
    check(model, class)?;
    let c1qa = model.pair(&model.c1_f64(), &class.base);
    Ok(match (class.fiber, model.fiber_chern) {
        (Some(l), Some(f)) => f as f64 * model.pair(&class.base, &class.base) + 2.0 * l * c1qa,
        _ => c1qa,
    })
}

/// `4π/(n−1)! · (n!)^{(n−1)/n}`.
pub fn z_constant(n: usize) -> f64 {
    let nf = n as f64;
    let fact_n1: f64 = (1..n).map(|k| k as f64).product();
    let fact_n = fact_n1 * nf;
    4.0 * PI / fact_n1 * libm::pow(fact_n, (nf - 1.0) / nf)
}

/// The Z upper bound of a class in the positive cone.
pub fn eval_zbound(model: &CohomologyModel, class: &SymplecticClass) -> Result<f64, ZError> {
    let t = top_power(model, class)?;
    if !(t > 0.0) {
        return Err(ZError::NotInCone(t));
    }
    let p = chern_pairing(model, class)?;
    let nf = model.n as f64;
    Ok(z_constant(model.n) * p / libm::pow(t, (nf - 1.0) / nf))
}

/// Value and gradient of [`eval_zbound`] with respect to [`SymplecticClass::coords`].
pub fn eval_zbound_gradient(model: &CohomologyModel, class: &SymplecticClass) -> Result<(f64, Vec<f64>), ZError> {
    let t = top_power(model, class)?;
    if !(t > 0.0) {
        return Err(ZError::NotInCone(t));
    }
    let p = chern_pairing(model, class)?;
    let qa = model.q_times(&class.base);
    let qc = model.q_times(&model.c1_f64());
    let r = model.rank;
    let (grad_t, grad_p): (Vec<f64>, Vec<f64>) = match (class.fiber, model.fiber_chern) {
        (Some(l), Some(f)) => {
            let aqa = dot(&class.base, &qa);
            let c1qa = dot(&qc, &class.base);
            let f = f as f64;
            let mut gt: Vec<f64> = qa.iter().map(|v| 6.0 * l * v).collect();
            gt.push(3.0 * aqa);
            let mut gp: Vec<f64> = (0..r).map(|i| 2.0 * f * qa[i] + 2.0 * l * qc[i]).collect();
            gp.push(2.0 * c1qa);
            (gt, gp)
        }
        _ => (qa.iter().map(|v| 2.0 * v).collect(), qc),
    };
    let nf = model.n as f64;
    let e = (nf - 1.0) / nf;
    let k = z_constant(model.n);
    let te = libm::pow(t, -e);
    let value = k * p * te;
    let grad = grad_p.iter().zip(&grad_t).map(|(gp, gt)| k * (te * gp - e * p * te / t * gt)).collect();
    Ok((value, grad))
}

/// `c₁² = 2χ + 3τ` for the model's stored `c₁`.
pub fn ac_check(model: &CohomologyModel) -> Result<bool, ZError> {
    if model.n != 2 {
        return Err(ZError::NotFourManifold);
    }
    let c1 = model.c1_f64();
    Ok(model.pair(&c1, &c1) as i64 == 2 * model.euler + 3 * model.signature)
}

/// Whether some integer class with entries bounded by `bound` has square `2χ + 3τ`.
pub fn ac_candidate_exists(model: &CohomologyModel, bound: i64) -> Result<bool, ZError> {
    if model.n != 2 {
        return Err(ZError::NotFourManifold);
    }
    let target = 2 * model.euler + 3 * model.signature;
    let r = model.rank;
    let mut x = vec![-bound; r];
    loop {
        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        if model.pair(&xf, &xf) as i64 == target {
            return Ok(true);
        }
        let mut i = 0;
        while i < r {
            if x[i] < bound {
                x[i] += 1;
                break;
            }
            x[i] = -bound;
            i += 1;
        }
        if i == r {
            return Ok(false);
        }
    }
}

/// `h(x) = (2/3^{2/3}) (a/x² + x/b)`.
pub fn h_function(a: f64, b: f64, x: f64) -> f64 {
    2.0 / libm::cbrt(9.0) * (a / (x * x) + x / b)
}

/// Maximizer `x* = (2ab)^{1/3}` and maximum `(6a/b²)^{1/3}` of [`h_function`] on `x > 0`.
pub fn h_function_max(a: f64, b: f64) -> Result<(f64, f64), ZError> {
    if !(a < 0.0 && b < 0.0) {
        return Err(ZError::HSign { a, b });
    }
    Ok((libm::cbrt(2.0 * a * b), libm::cbrt(6.0 * a / (b * b))))
}

/// `(3 − √m √y)² / (1 − y)`.
pub fn y_ratio(m: usize, y: f64) -> f64 {
    let s = 3.0 - libm::sqrt(m as f64 * y);
    s * s / (1.0 - y)
}

/// Minimizer `m/9` and minimum `9 − m` of [`y_ratio`] on `[0, 1)`.
pub fn y_ratio_min(m: usize) -> Result<(f64, f64), ZError> {
    if m >= 9 {
        return Err(ZError::YRange(m));
    }
    Ok((m as f64 / 9.0, (9 - m) as f64))
}

/// The analytic bound chain evaluated at one class.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// Number of exceptional classes.
    pub m: usize,
    /// `A = n₀² − Σ nᵢ²`.
    pub a: f64,
    /// `B = 3n₀ + Σ nᵢ`.
    pub b: f64,
    /// `y = Σ nᵢ² / n₀²`.
    pub y: f64,
    pub l: f64,
    /// Z bound from maximizing `h` over `l`: `−12π (B²/A)^{1/3}`.
    pub h_bound: f64,
    pub y_ratio: f64,
    pub y_ratio_min: f64,
    /// `−12π (9 − m)^{1/3}`, valid for every class in the component.
    pub global_bound: f64,
    /// `B ≤ (3 − √m) n₀ < 0`.
    pub sign_ok: bool,
}

/// Certificate for classes with `A > 0`, `n₀ < 0` on a blown-up plane product with `m < 9`.
pub fn certificate(model: &CohomologyModel, class: &SymplecticClass) -> Option<Certificate> {
    if !model.is_blown_up_plane_product() || check(model, class).is_err() {
        return None;
    }
    let m = model.rank - 1;
    let n0 = class.base[0];
    let rest = &class.base[1..];
    let sum_sq: f64 = rest.iter().map(|v| v * v).sum();
    let a = n0 * n0 - sum_sq;
    let l = class.fiber?;
    if m >= 9 || !(a > 0.0) || !(n0 < 0.0) || !(l > 0.0) {
        return None;
    }
    let b = 3.0 * n0 + rest.iter().sum::<f64>();
    let y = sum_sq / (n0 * n0);
    let h_bound = -12.0 * PI * libm::cbrt(b * b / a);
    let global_bound = -12.0 * PI * libm::cbrt((9 - m) as f64);
    let sign_ok = b <= (3.0 - libm::sqrt(m as f64)) * n0 + 1e-12 * n0.abs() && b < 0.0;
    Some(Certificate { m, a, b, y, l, h_bound, y_ratio: y_ratio(m, y), y_ratio_min: (9 - m) as f64, global_bound, sign_ok })
}

/// Integer isometries of `diag(1, −1×m)` fixing `c₁ = (3, −1×m)`: the reflection in
/// `E₀ − E₁ − E₂ − E₃`, as a row-major matrix.
pub fn cremona_reflection(m: usize) -> Vec<i64> {
    assert!(m >= 3);
    let r = m + 1;
    let mut v = vec![0i64; r];
    v[0] = 1;
    v[1] = -1;
    v[2] = -1;
    v[3] = -1;
    // R(x) = x + (xᵀQv) v, Qv = (1, 1, 1, 1, 0, …).
    let qv: Vec<i64> = (0..r).map(|i| if i == 0 { v[0] } else { -v[i] }).collect();
    let mut out = vec![0i64; r * r];
    for i in 0..r {
        for j in 0..r {
            out[i * r + j] = i64::from(i == j) + v[i] * qv[j];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Maximum number of quasi-Newton iterations.
    pub budget: usize,
    pub grad_tol: f64,
    /// Barrier: steps with `[ω]ⁿ <= barrier · ‖class‖ⁿ` are rejected.
    pub barrier: f64,
    /// Values above this along a scaling ray are reported as `+∞`.
    pub unbounded_threshold: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { budget: 5000, grad_tol: 1e-8, barrier: 1e-9, unbounded_threshold: 1e6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZBoundResult {
    /// Best value found, `+∞` when a scaling ray is unbounded.
    pub value: f64,
    /// Normalized maximizer (`l = ±2` on products, unit `Q`-norm on 4-manifolds).
    pub argmax: SymplecticClass,
    pub unbounded: bool,
    pub converged: bool,
    /// Set when the budget ran out before the gradient tolerance was met.
    pub budget_exhausted: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    pub certificate: Option<Certificate>,
    /// Iterates at which the certificate applied and its sign condition held, and all such iterates.
    pub sign_checks: (usize, usize),
}

fn normalize(model: &CohomologyModel, class: &SymplecticClass) -> SymplecticClass {
    match class.fiber {
        Some(l) => class.scaled(2.0 / l.abs()),
        None => {
            let t = model.pair(&class.base, &class.base);
            class.scaled(1.0 / libm::sqrt(t))
        }
    }
}

/// Cone component membership relative to the seed.
struct Component<'a> {
    model: &'a CohomologyModel,
    seed_q: Option<Vec<f64>>,
    barrier: f64,
}

impl Component<'_> {
    fn contains(&self, class: &SymplecticClass) -> bool {
        let Ok(t) = top_power(self.model, class) else { return false };
        let scale = libm::pow(class.euclidean_norm(), self.model.n as f64);
        if !(t > self.barrier * scale) {
            return false;
        }
        match &self.seed_q {
            Some(sq) => dot(sq, &class.base) > 0.0,
            None => true,
        }
    }

    fn segment_ok(&self, from: &SymplecticClass, to: &SymplecticClass) -> bool {
        const SAMPLES: usize = 16;
        let a = from.coords();
        let b = to.coords();
        let has_fiber = from.fiber.is_some();
        (1..=SAMPLES).all(|k| {
            let s = k as f64 / SAMPLES as f64;
            let p: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + s * (y - x)).collect();
            self.contains(&SymplecticClass::from_coords(&p, has_fiber))
        })
    }
}

/// Searches coordinate scaling rays from `class` for values above the threshold.
fn ray_unbounded(model: &CohomologyModel, class: &SymplecticClass, threshold: f64) -> Option<SymplecticClass> {
    let coords = class.coords();
    let has_fiber = class.fiber.is_some();
    for i in 0..coords.len() {
        if coords[i] == 0.0 {
            continue;
        }
        for up in [true, false] {
            for k in 1..=64 {
                let mut c = coords.clone();
                let f = libm::ldexp(1.0, if up { k } else { -k });
                c[i] *= f;
                let cand = SymplecticClass::from_coords(&c, has_fiber);
                if let Ok(z) = eval_zbound(model, &cand) {
                    if z > threshold {
                        return Some(cand);
                    }
                }
            }
        }
    }
    None
}

/// Maximizes [`eval_zbound`] over the cone component of `seed`.
///
/// The class is kept on the slice `l = ±2` (products) or on the affine slice
/// through the seed where its largest coordinate is fixed (4-manifolds), and a
/// BFGS iteration with Armijo backtracking runs on the remaining coordinates.
/// Before optimizing, coordinate scaling rays are probed for unboundedness.
pub fn optimize_zbound(
    model: &CohomologyModel,
    seed: &SymplecticClass,
    config: &OptimizerConfig,
) -> Result<ZBoundResult, ZError> {
    let t0 = top_power(model, seed)?;
    if !(t0 > 0.0) {
        return Err(ZError::NotInCone(t0));
    }
    let start = normalize(model, seed);
    let seed_q = (model.positive_index() == 1).then(|| model.q_times(&start.base));
    let comp = Component { model, seed_q, barrier: config.barrier };
    if !comp.contains(&start) {
        return Err(ZError::NotInCone(t0));
    }

    if let Some(ray) = ray_unbounded(model, &start, config.unbounded_threshold) {
        return Ok(ZBoundResult {
            value: f64::INFINITY,
            argmax: ray,
            unbounded: true,
            converged: true,
            budget_exhausted: false,
            iterations: 0,
            grad_norm: f64::NAN,
            certificate: None,
            sign_checks: (0, 0),
        });
    }

    let has_fiber = start.fiber.is_some();
    let coords0 = start.coords();
    let dim = coords0.len();
    // Index held fixed by the slice.
    let fixed = if has_fiber {
        dim - 1
    } else {
        (0..dim).max_by(|&i, &j| coords0[i].abs().total_cmp(&coords0[j].abs())).unwrap_or(0)
    };
    let free: Vec<usize> = (0..dim).filter(|&i| i != fixed).collect();
    let embed = |x: &[f64]| {
        let mut c = coords0.clone();
        for (k, &i) in free.iter().enumerate() {
            c[i] = x[k];
        }
        SymplecticClass::from_coords(&c, has_fiber)
    };
    let eval = |x: &[f64]| -> (f64, Vec<f64>) {
        let (v, g) = eval_zbound_gradient(model, &embed(x)).expect("iterate stays in the cone");
        (v, free.iter().map(|&i| g[i]).collect())
    };

    let nf = free.len();
    let mut x: Vec<f64> = free.iter().map(|&i| coords0[i]).collect();
    let (mut val, mut grad) = eval(&x);
    let mut h_inv = identity(nf);
    let mut iterations = 0;
    let mut converged = norm(&grad) < config.grad_tol;
    let mut sign_checks = (0, 0);
    let mut tally = |cls: &SymplecticClass| {
        if let Some(cert) = certificate(model, cls) {
            sign_checks.1 += 1;
            if cert.sign_ok {
                sign_checks.0 += 1;
            }
        }
    };
    tally(&embed(&x));

    while !converged && iterations < config.budget {
        iterations += 1;
        // Ascent direction d = H⁻¹ ∇Z.
        let mut dir = mat_vec(&h_inv, &grad);
        let mut slope = dot(&dir, &grad);
        if !(slope > 0.0) {
            h_inv = identity(nf);
            dir = grad.clone();
            slope = dot(&grad, &grad);
        }
        let current = embed(&x);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..80 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let cls = embed(&trial);
            if comp.contains(&cls) && comp.segment_ok(&current, &cls) {
                let (tv, tg) = eval(&trial);
                // Near the optimum the Armijo increase drops below the rounding of |Z|.
                if tv >= val + 1e-4 * step * slope - 8.0 * f64::EPSILON * val.abs() {
                    accepted = Some((trial, tv, tg));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((x_new, v_new, g_new)) = accepted else {
            if h_inv != identity(nf) {
                h_inv = identity(nf);
                continue;
            }
            break;
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        // Minimizing −Z: y = ∇(−Z)_new − ∇(−Z)_old.
        let y: Vec<f64> = grad.iter().zip(&g_new).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * norm(&s) * norm(&y) {
            if iterations == 1 {
                let scale = sy / dot(&y, &y);
                h_inv = identity(nf).into_iter().map(|v| v * scale).collect();
            }
            bfgs_update(&mut h_inv, &s, &y, sy);
        }
        x = x_new;
        val = v_new;
        grad = g_new;
        tally(&embed(&x));
        converged = norm(&grad) < config.grad_tol;
    }

    let argmax = normalize(model, &embed(&x));
    Ok(ZBoundResult {
        value: val,
        certificate: certificate(model, &argmax),
        argmax,
        unbounded: false,
        budget_exhausted: !converged && iterations >= config.budget,
        converged,
        iterations,
        grad_norm: norm(&grad),
        sign_checks,
    })
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn mat_vec(m: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| dot(&m[i * n..(i + 1) * n], v)).collect()
}

/// Inverse-Hessian BFGS update for a minimization with step `s`, gradient change `y`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    let rho = 1.0 / sy;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += (1.0 + yhy * rho) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}
