//! Curvature of left-invariant almost-Kähler metrics on Lie groups.
//!
//! A structure is given on an orthonormal frame `e_1..e_2n` by its structure
//! constants `[e_i, e_j] = Σ_k c_ij^k e_k` and the matrix of `J`
//! (`J e_a = Σ_r J[r][a] e_r`). The symplectic form is `ω(X, Y) = g(JX, Y)`.
//! Indices are 0-based in the API and 1-based in error messages.
//!
//! Conventions used throughout:
//!
//! * `Γ[i][j][k] = ⟨∇_{e_i} e_j, e_k⟩`
//! * connection forms `ω_ij(X) = ⟨∇_X e_j, e_i⟩`
//! * `R(X, Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_{[X,Y]}`, curvature forms
//!   `Ω_ij(X, Y) = ⟨R(X, Y) e_j, e_i⟩ = (dω + ω∧ω)_ij(X, Y)`
//! * `K_ij = ⟨R(e_i, e_j) e_j, e_i⟩`, `Ric(X, Y) = Σ_a ⟨R(e_a, X) Y, e_a⟩`
//! * `s* = s + ½|∇J|²`

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::{Rational, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LieError {
    #[error("dimension must be even and positive, got {0}")]
    BadDimension(usize),
    #[error("{what}: expected {expected} entries, got {got}")]
    BadLength { what: &'static str, expected: usize, got: usize },
    #[error("index out of range in bracket ({i}, {j}, {k}) for dimension {dim}")]
    IndexOutOfRange { i: usize, j: usize, k: usize, dim: usize },
    #[error("structure constants not antisymmetric: c({}, {}, {})", .i + 1, .j + 1, .k + 1)]
    NotAntisymmetric { i: usize, j: usize, k: usize },
    #[error("Jacobi identity fails for (e{}, e{}, e{}) in component {}", .i + 1, .j + 1, .k + 1, .l + 1)]
    Jacobi { i: usize, j: usize, k: usize, l: usize },
    #[error("J² ≠ −I")]
    NotAlmostComplex,
    #[error("J is not orthogonal for the frame metric")]
    NotOrthogonal,
    #[error("ω is not closed: dω(e{}, e{}, e{}) ≠ 0", .a + 1, .b + 1, .c + 1)]
    NotClosed { a: usize, b: usize, c: usize },
    #[error("lattice volumes must be positive and finite")]
    BadVolume,
    #[error("no lattice volumes given")]
    MissingVolumes,
    #[error("internal consistency failure: {0} routes disagree")]
    RouteDisagreement(&'static str),
}

#[inline]
fn i3(n: usize, i: usize, j: usize, k: usize) -> usize {
    (i * n + j) * n + k
}

#[inline]
fn i4(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * n + k) * n + l
}

/// Orthonormal-frame description of a left-invariant almost-Kähler structure.
#[derive(Debug, Clone, PartialEq)]
pub struct LieFrameSpec<T> {
    name: String,
    dim: usize,
    c: Vec<T>,
    j: Vec<T>,
    volumes: Vec<f64>,
}

impl<T: Scalar> LieFrameSpec<T> {
    /// Validates and builds a spec. `c` is indexed `[i][j][k]`, `j` row-major.
    pub fn new(name: impl Into<String>, dim: usize, c: Vec<T>, j: Vec<T>, volumes: Vec<f64>) -> Result<Self, LieError> {
        if dim == 0 || dim % 2 != 0 {
            return Err(LieError::BadDimension(dim));
        }
        if c.len() != dim * dim * dim {
            return Err(LieError::BadLength { what: "structure constants", expected: dim * dim * dim, got: c.len() });
        }
        if j.len() != dim * dim {
            return Err(LieError::BadLength { what: "J matrix", expected: dim * dim, got: j.len() });
        }
        if volumes.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(LieError::BadVolume);
        }
        let spec = Self { name: name.into(), dim, c, j, volumes };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds from nonzero brackets `(i, j, k, v)` meaning `c_ij^k = v` (and `c_ji^k = −v`).
    pub fn from_brackets(
        name: impl Into<String>,
        dim: usize,
        brackets: &[(usize, usize, usize, T)],
        j: Vec<T>,
        volumes: Vec<f64>,
    ) -> Result<Self, LieError> {
        let mut c = vec![T::zero(); dim * dim * dim];
        for &(a, b, k, v) in brackets {
            if a >= dim || b >= dim || k >= dim {
                return Err(LieError::IndexOutOfRange { i: a, j: b, k, dim });
            }
            if a == b && !v.is_negligible() {
                return Err(LieError::NotAntisymmetric { i: a, j: b, k });
            }
            c[i3(dim, a, b, k)] = v;
            c[i3(dim, b, a, k)] = -v;
        }
        Self::new(name, dim, c, j, volumes)
    }

    fn validate(&self) -> Result<(), LieError> {
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if !(self.c(i, j, k) + self.c(j, i, k)).is_negligible() {
                        return Err(LieError::NotAntisymmetric { i, j, k });
                    }
                }
            }
        }
        // [[e_i,e_j],e_k] + cyclic = 0, component l.
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    for l in 0..n {
                        let mut sum = T::zero();
                        for m in 0..n {
                            sum = sum
                                + self.c(i, j, m) * self.c(m, k, l)
                                + self.c(j, k, m) * self.c(m, i, l)
                                + self.c(k, i, m) * self.c(m, j, l);
                        }
                        if !sum.is_negligible() {
                            return Err(LieError::Jacobi { i, j, k, l });
                        }
                    }
                }
            }
        }
        for r in 0..n {
            for col in 0..n {
                let mut sq = T::zero();
                let mut gram = T::zero();
                for m in 0..n {
                    sq = sq + self.j(r, m) * self.j(m, col);
                    gram = gram + self.j(m, r) * self.j(m, col);
                }
                let delta = if r == col { T::one() } else { T::zero() };
                if !(sq + delta).is_negligible() {
                    return Err(LieError::NotAlmostComplex);
                }
                if !(gram - delta).is_negligible() {
                    return Err(LieError::NotOrthogonal);
                }
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let mut sum = T::zero();
                    for k in 0..n {
                        sum = sum - self.c(a, b, k) * self.omega(k, c) + self.c(a, c, k) * self.omega(k, b)
                            - self.c(b, c, k) * self.omega(k, a);
                    }
                    if !sum.is_negligible() {
                        return Err(LieError::NotClosed { a, b, c });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `c_ij^k`.
    pub fn c(&self, i: usize, j: usize, k: usize) -> T {
        self.c[i3(self.dim, i, j, k)]
    }

    /// Entry `J[r][col]`; column `a` holds the components of `J e_a`.
    pub fn j(&self, r: usize, col: usize) -> T {
        self.j[r * self.dim + col]
    }

    /// `ω(e_a, e_b) = ⟨J e_a, e_b⟩`.
    pub fn omega(&self, a: usize, b: usize) -> T {
        self.j(b, a)
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// Product of the lattice volume factors.
    pub fn total_volume(&self) -> Result<f64, LieError> {
        if self.volumes.is_empty() {
            return Err(LieError::MissingVolumes);
        }
        Ok(self.volumes.iter().product())
    }

    pub fn with_volumes(mut self, volumes: Vec<f64>) -> Result<Self, LieError> {
        if volumes.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(LieError::BadVolume);
        }
        self.volumes = volumes;
        Ok(self)
    }

    pub fn to_float(&self) -> LieFrameSpec<f64> {
        LieFrameSpec {
            name: self.name.clone(),
            dim: self.dim,
            c: self.c.iter().map(|v| v.to_f64()).collect(),
            j: self.j.iter().map(|v| v.to_f64()).collect(),
            volumes: self.volumes.clone(),
        }
    }

    /// `J` as a float matrix.
    pub fn j_matrix(&self) -> Matrix {
        Matrix::from_fn(self.dim, self.dim, |r, c| self.j(r, c).to_f64())
    }

    /// Direct sum with a flat factor of dimension `2 * pairs`, `J` the standard
    /// block on the new directions and unit circle volumes.
    pub fn with_flat_factor(&self, pairs: usize) -> Self {
        let old = self.dim;
        let n = old + 2 * pairs;
        let mut c = vec![T::zero(); n * n * n];
        let mut j = vec![T::zero(); n * n];
        for a in 0..old {
            for b in 0..old {
                j[a * n + b] = self.j(a, b);
                for k in 0..old {
                    c[i3(n, a, b, k)] = self.c(a, b, k);
                }
            }
        }
        for p in 0..pairs {
            let a = old + 2 * p;
            j[(a + 1) * n + a] = T::one();
            j[a * n + a + 1] = -T::one();
        }
        let mut volumes = self.volumes.clone();
        volumes.extend(core::iter::repeat(1.0).take(2 * pairs));
        Self { name: alloc::format!("{}+R{}", self.name, 2 * pairs), dim: n, c, j, volumes }
    }
}

impl LieFrameSpec<f64> {
    /// The structure for the metric `λ² g` on the frame `e_i / λ`.
    ///
    /// Brackets scale by `1/λ` and every volume factor is multiplied so that the
    /// total volume scales by `λ^dim`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        assert!(lambda > 0.0 && lambda.is_finite());
        let per_factor = if self.volumes.is_empty() {
            1.0
        } else {
            libm::pow(lambda, self.dim as f64 / self.volumes.len() as f64)
        };
        Self {
            name: self.name.clone(),
            dim: self.dim,
            c: self.c.iter().map(|v| v / lambda).collect(),
            j: self.j.clone(),
            volumes: self.volumes.iter().map(|v| v * per_factor).collect(),
        }
    }
}

fn standard_j<T: Scalar>(dim: usize) -> Vec<T> {
    let mut j = vec![T::zero(); dim * dim];
    for p in 0..dim / 2 {
        let a = 2 * p;
        j[(a + 1) * dim + a] = T::one();
        j[a * dim + a + 1] = -T::one();
    }
    j
}

/// Flat torus `ℝ^dim / ℤ^dim` with the standard `J` block.
pub fn abelian<T: Scalar>(dim: usize) -> LieFrameSpec<T> {
    LieFrameSpec::new(alloc::format!("abelian{dim}"), dim, vec![T::zero(); dim * dim * dim], standard_j(dim), vec![1.0; dim])
        .expect("abelian spec is valid")
}

/// Kodaira-Thurston nilmanifold with `t`-period `d`: `[e1, e2] = e3`,
/// `J e4 = e1`, `J e2 = e3`. The Heisenberg quotient has unit volume.
pub fn kodaira_thurston<T: Scalar>(d: f64) -> Result<LieFrameSpec<T>, LieError> {
    let n = 4;
    let mut j = vec![T::zero(); n * n];
    j[3] = T::one(); // J[0][3]: J e4 has e1-component 1
    j[3 * n] = -T::one(); // J e1 = −e4
    j[2 * n + 1] = T::one(); // J e2 = e3
    j[n + 2] = -T::one(); // J e3 = −e2
    LieFrameSpec::from_brackets("kodaira-thurston", n, &[(0, 1, 2, T::one())], j, vec![1.0, d])
}

/// Kodaira-Thurston times a flat `ℝ^{dim−4}` torus.
pub fn kt_product<T: Scalar>(dim: usize, d: f64) -> Result<LieFrameSpec<T>, LieError> {
    if dim < 4 || dim % 2 != 0 {
        return Err(LieError::BadDimension(dim));
    }
    Ok(kodaira_thurston::<T>(d)?.with_flat_factor((dim - 4) / 2))
}

/// `Γ[i][j][k] = ½(c_ij^k − c_jk^i + c_ki^j)`.
pub fn levi_civita<T: Scalar>(spec: &LieFrameSpec<T>) -> Vec<T> {
    let n = spec.dim;
    let half = T::half();
    let mut gamma = vec![T::zero(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                gamma[i3(n, i, j, k)] = half * (spec.c(i, j, k) - spec.c(j, k, i) + spec.c(k, i, j));
            }
        }
    }
    gamma
}

/// Every frame quantity derived from a [`LieFrameSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData<T> {
    dim: usize,
    gamma: Vec<T>,
    connection_forms: Vec<T>,
    curvature_forms: Vec<T>,
    sectional: Vec<T>,
    ricci: Vec<T>,
    ricci_anti: Vec<T>,
    scalar: T,
    nabla_j: Vec<T>,
    norm_nabla_j_sq: T,
    star_scalar: T,
}

/// Square matrices over `T`, row-major, used inside the curvature computation.
fn mat_mul<T: Scalar>(n: usize, a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); n * n];
    for r in 0..n {
        for m in 0..n {
            let x = a[r * n + m];
            if x.is_negligible() && T::EXACT {
                continue;
            }
            for c in 0..n {
                out[r * n + c] = out[r * n + c] + x * b[m * n + c];
            }
        }
    }
    out
}

/// Computes all curvature data, checking the independent routes against each other.
pub fn curvature<T: Scalar>(spec: &LieFrameSpec<T>) -> Result<CurvatureData<T>, LieError> {
    let n = spec.dim;
    let gamma = levi_civita(spec);

    // ω_ij(e_k) = Γ[k][j][i]; A_k[i][j] = ω_ij(e_k) is also the matrix of ∇_{e_k}.
    let mut connection_forms = vec![T::zero(); n * n * n];
    let mut a_mats: Vec<Vec<T>> = vec![vec![T::zero(); n * n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = gamma[i3(n, k, j, i)];
                connection_forms[i3(n, i, j, k)] = v;
                a_mats[k][i * n + j] = v;
            }
        }
    }

    // Cartan route: Ω_ij(e_a, e_b) = −Σ_k c_ab^k ω_ij(e_k) + Σ_m (ω_im(e_a) ω_mj(e_b) − ω_im(e_b) ω_mj(e_a)).
    let mut curvature_forms = vec![T::zero(); n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut v = T::zero();
                    for k in 0..n {
                        v = v - spec.c(a, b, k) * connection_forms[i3(n, i, j, k)];
                    }
                    for m in 0..n {
                        v = v + connection_forms[i3(n, i, m, a)] * connection_forms[i3(n, m, j, b)]
                            - connection_forms[i3(n, i, m, b)] * connection_forms[i3(n, m, j, a)];
                    }
                    curvature_forms[i4(n, i, j, a, b)] = v;
                }
            }
        }
    }

    // Direct route: R(e_a, e_b) = A_a A_b − A_b A_a − Σ_k c_ab^k A_k as operators.
    for a in 0..n {
        for b in 0..n {
            let ab = mat_mul(n, &a_mats[a], &a_mats[b]);
            let ba = mat_mul(n, &a_mats[b], &a_mats[a]);
            for i in 0..n {
                for j in 0..n {
                    let mut v = ab[i * n + j] - ba[i * n + j];
                    for k in 0..n {
                        v = v - spec.c(a, b, k) * a_mats[k][i * n + j];
                    }
                    if !v.agrees_with(curvature_forms[i4(n, i, j, a, b)]) {
                        return Err(LieError::RouteDisagreement("curvature"));
                    }
                }
            }
        }
    }
    let riem = |a: usize, b: usize, c: usize, d: usize| curvature_forms[i4(n, d, c, a, b)];

    let mut sectional = vec![T::zero(); n * n];
    let mut ricci = vec![T::zero(); n * n];
    let mut scalar = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sectional[i * n + j] = riem(i, j, j, i);
                scalar = scalar + sectional[i * n + j];
            }
            let mut r = T::zero();
            for a in 0..n {
                r = r + riem(a, i, j, a);
            }
            ricci[i * n + j] = r;
        }
    }
    let mut trace = T::zero();
    for i in 0..n {
        trace = trace + ricci[i * n + i];
    }
    if !trace.agrees_with(scalar) {
        return Err(LieError::RouteDisagreement("Ricci trace and sectional sum"));
    }

    // r⁻ = ½(r − JᵀrJ).
    let jm: Vec<T> = (0..n * n).map(|idx| spec.j(idx / n, idx % n)).collect();
    let jt: Vec<T> = (0..n * n).map(|idx| spec.j(idx % n, idx / n)).collect();
    let conj = mat_mul(n, &mat_mul(n, &jt, &ricci), &jm);
    let half = T::half();
    let ricci_anti: Vec<T> = ricci.iter().zip(&conj).map(|(&r, &c)| half * (r - c)).collect();

    // Vector route: (∇_i J) e_j = ∇_i (J e_j) − J ∇_i e_j, components k.
    let mut nabla_j = vec![T::zero(); n * n * n];
    let mut norm_vec = T::zero();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut v = T::zero();
                for m in 0..n {
                    v = v + spec.j(m, j) * gamma[i3(n, i, m, k)] - spec.j(k, m) * gamma[i3(n, i, j, m)];
                }
                nabla_j[i3(n, i, j, k)] = v;
                norm_vec = norm_vec + v * v;
            }
        }
    }
    // Form route: Σ_k ‖[A_k, J]‖²_F.
    let mut norm_forms = T::zero();
    for a in a_mats.iter() {
        let aj = mat_mul(n, a, &jm);
        let ja = mat_mul(n, &jm, a);
        for (x, y) in aj.iter().zip(&ja) {
            let d = *x - *y;
            norm_forms = norm_forms + d * d;
        }
    }
    if !norm_vec.agrees_with(norm_forms) {
        return Err(LieError::RouteDisagreement("|∇J|²"));
    }
    let star_scalar = scalar + half * norm_vec;

    // Curvature trace Σ_ij ⟨R(e_i, e_j) J e_j, J e_i⟩, which equals s* for almost-Kähler structures.
    let mut star_trace = T::zero();
    for i in 0..n {
        for j in 0..n {
            for p in 0..n {
                let jp = spec.j(p, j);
                if T::EXACT && jp.is_negligible() {
                    continue;
                }
                for q in 0..n {
                    star_trace = star_trace + jp * spec.j(q, i) * riem(i, j, p, q);
                }
            }
        }
    }
    if !star_trace.agrees_with(star_scalar) {
        return Err(LieError::RouteDisagreement("star-scalar"));
    }

    Ok(CurvatureData {
        dim: n,
        gamma,
        connection_forms,
        curvature_forms,
        sectional,
        ricci,
        ricci_anti,
        scalar,
        nabla_j,
        norm_nabla_j_sq: norm_vec,
        star_scalar,
    })
}

impl<T: Scalar> CurvatureData<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `⟨∇_{e_i} e_j, e_k⟩`.
    pub fn gamma(&self, i: usize, j: usize, k: usize) -> T {
        self.gamma[i3(self.dim, i, j, k)]
    }

    /// `ω_ij(e_k)`.
    pub fn connection_form(&self, i: usize, j: usize, k: usize) -> T {
        self.connection_forms[i3(self.dim, i, j, k)]
    }

    /// `Ω_ij(e_a, e_b)`.
    pub fn curvature_form(&self, i: usize, j: usize, a: usize, b: usize) -> T {
        self.curvature_forms[i4(self.dim, i, j, a, b)]
    }

    /// `⟨R(e_a, e_b) e_c, e_d⟩`.
    pub fn riemann(&self, a: usize, b: usize, c: usize, d: usize) -> T {
        self.curvature_forms[i4(self.dim, d, c, a, b)]
    }

    pub fn sectional(&self, i: usize, j: usize) -> T {
        self.sectional[i * self.dim + j]
    }

    pub fn ricci(&self, i: usize, j: usize) -> T {
        self.ricci[i * self.dim + j]
    }

    /// J-anti-invariant part of the Ricci tensor.
    pub fn ricci_anti(&self, i: usize, j: usize) -> T {
        self.ricci_anti[i * self.dim + j]
    }

    pub fn scalar(&self) -> T {
        self.scalar
    }

    /// `⟨(∇_{e_i} J) e_j, e_k⟩`.
    pub fn nabla_j(&self, i: usize, j: usize, k: usize) -> T {
        self.nabla_j[i3(self.dim, i, j, k)]
    }

    pub fn norm_nabla_j_sq(&self) -> T {
        self.norm_nabla_j_sq
    }

    /// Recomputes `|∇J|²` from the stored `(∇_{e_i} J) e_j` components.
    pub fn norm_nabla_j_sq_from_components(&self) -> T {
        self.nabla_j.iter().fold(T::zero(), |acc, &v| acc + v * v)
    }

    pub fn star_scalar(&self) -> T {
        self.star_scalar
    }

    /// `½(s + s*)`.
    pub fn hermitian_scalar(&self) -> T {
        T::half() * (self.scalar + self.star_scalar)
    }

    pub fn ricci_matrix(&self) -> Matrix {
        Matrix::from_fn(self.dim, self.dim, |i, j| self.ricci(i, j).to_f64())
    }

    pub fn ricci_anti_matrix(&self) -> Matrix {
        Matrix::from_fn(self.dim, self.dim, |i, j| self.ricci_anti(i, j).to_f64())
    }
}

/// `s · Vol^{1/n}`, the normalized total scalar curvature of a homogeneous metric.
pub fn z_ratio<T: Scalar>(spec: &LieFrameSpec<T>, curv: &CurvatureData<T>) -> Result<f64, LieError> {
    let vol = spec.total_volume()?;
    let n = (spec.dim / 2) as f64;
    Ok(curv.scalar().to_f64() * libm::pow(vol, 1.0 / n))
}

/// Both sides of the integrated Hermitian scalar curvature identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlairReport {
    /// `½(s + s*) · Vol`.
    pub lhs: f64,
    /// `4π c₁·[ω]^{n−1} / (n−1)!`.
    pub rhs: f64,
    pub discrepancy: f64,
    pub matches: bool,
}

/// Compares `∫ ½(s + s*)` with `4π c₁·[ω]^{n−1}/(n−1)!`; `c1_dot_omega_power` is supplied by the caller.
pub fn blair_check<T: Scalar>(
    spec: &LieFrameSpec<T>,
    curv: &CurvatureData<T>,
    c1_dot_omega_power: f64,
) -> Result<BlairReport, LieError> {
    let vol = spec.total_volume()?;
    let half_dim = spec.dim / 2;
    let factorial: f64 = (1..half_dim).map(|k| k as f64).product();
    let lhs = curv.hermitian_scalar().to_f64() * vol;
    let rhs = 4.0 * core::f64::consts::PI * c1_dot_omega_power / factorial;
    let discrepancy = lhs - rhs;
    Ok(BlairReport { lhs, rhs, discrepancy, matches: discrepancy.abs() <= 1e-10 * rhs.abs().max(1.0) })
}

/// Exact Kodaira-Thurston data, convenient for callers that need the tables.
pub fn kt_exact() -> (LieFrameSpec<Rational>, CurvatureData<Rational>) {
    let spec = kodaira_thurston::<Rational>(1.0).expect("KT spec is valid");
    let curv = curvature(&spec).expect("KT curvature routes agree");
    (spec, curv)
}
