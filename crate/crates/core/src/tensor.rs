//! Pointwise algebra of compatible triples `(g, ω, J)` in frame components.
//!
//! All objects are `2n × 2n` matrices of components with respect to a fixed
//! frame. Conventions:
//!
//! * `g(X, Y) = Xᵀ G Y`, `ω(X, Y) = Xᵀ Ω Y`, `J X` is the matrix product.
//! * compatibility means `g(X, Y) = ω(X, J Y)`, i.e. `G = Ω J`.
//! * for a symmetric tensor `A`, `A(J·, J·)` has matrix `Jᵀ A J`.

use alloc::boxed::Box;
use alloc::vec::Vec;

use thiserror::Error;

use crate::linalg::{symmetric_eigen, Matrix};
use crate::smooth::Cutoff;

/// Tolerance on `J² = -I` used by the splitting operations.
pub const ACS_TOL: f64 = 1e-12;
/// Tolerance for the compatibility checks `J² = -I` and `JᵀGJ = G`.
pub const COMPAT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("expected a square matrix of even dimension, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not skew-symmetric")]
    NotSkew,
    #[error("metric is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("J² deviates from -I by {0:e}")]
    NotAlmostComplex(f64),
    #[error("J does not preserve g: |JᵀGJ - G| = {0:e}")]
    NotIsometry(f64),
    #[error("symplectic form is degenerate")]
    Degenerate,
    #[error("logarithm undefined: g⁻¹g̃ has non-positive eigenvalue {0:e}")]
    LogUndefined(f64),
    #[error("recovered tensor is not J-anti-invariant (deviation {0:e})")]
    NotAntiInvariant(f64),
    #[error("{role} metric is not compatible with ω: {source}")]
    Incompatible {
        role: &'static str,
        #[source]
        source: Box<TensorError>,
    },
    #[error("cutoff blend failed at sample {index}: {source}")]
    Blend {
        index: usize,
        #[source]
        source: Box<TensorError>,
    },
}

fn check_even_square(m: &Matrix) -> Result<usize, TensorError> {
    if !m.is_square() || m.rows() % 2 != 0 || m.rows() == 0 {
        return Err(TensorError::BadShape { rows: m.rows(), cols: m.cols() });
    }
    Ok(m.rows())
}

fn same_dim(a: usize, b: usize) -> Result<(), TensorError> {
    if a != b {
        return Err(TensorError::DimensionMismatch { left: a, right: b });
    }
    Ok(())
}

/// Symmetric positive-definite frame components of a Riemannian metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix(Matrix);

impl MetricMatrix {
    pub fn new(m: Matrix) -> Result<Self, TensorError> {
        check_even_square(&m)?;
        if !m.is_exactly_symmetric() {
            return Err(TensorError::NotSymmetric);
        }
        let min = symmetric_eigen(&m).values[0];
        if !(min > 0.0) {
            return Err(TensorError::NotPositiveDefinite(min));
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    fn sqrt_and_inv_sqrt(&self) -> (Matrix, Matrix) {
        let e = symmetric_eigen(&self.0);
        (e.map_spectrum(libm::sqrt), e.map_spectrum(|l| 1.0 / libm::sqrt(l)))
    }
}

/// Skew-symmetric frame components of a 2-form, flagged when degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    m: Matrix,
    nondegenerate: bool,
}

impl SymplecticMatrix {
    pub fn new(m: Matrix) -> Result<Self, TensorError> {
        check_even_square(&m)?;
        if !m.is_exactly_skew() {
            return Err(TensorError::NotSkew);
        }
        let scale = m.max_abs();
        let det = m.determinant();
        let nondegenerate = scale > 0.0 && det.abs() > 1e-12 * libm::pow(scale, m.rows() as f64);
        Ok(Self { m, nondegenerate })
    }

    /// `Σ dx_{2i-1} ∧ dx_{2i}`.
    pub fn standard(dim: usize) -> Self {
        assert!(dim % 2 == 0 && dim > 0);
        let mut m = Matrix::zeros(dim, dim);
        for i in 0..dim / 2 {
            m[(2 * i, 2 * i + 1)] = 1.0;
            m[(2 * i + 1, 2 * i)] = -1.0;
        }
        Self { m, nondegenerate: true }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.nondegenerate
    }
}

/// Almost-complex structure `J` with `J² = -I`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcsMatrix(Matrix);

impl AcsMatrix {
    pub fn new(m: Matrix, tol: f64) -> Result<Self, TensorError> {
        check_even_square(&m)?;
        let dev = square_plus_identity_dev(&m);
        if dev > tol {
            return Err(TensorError::NotAlmostComplex(dev));
        }
        Ok(Self(m))
    }

    /// `J e_{2i-1} = e_{2i}`, `J e_{2i} = -e_{2i-1}`.
    pub fn standard(dim: usize) -> Self {
        assert!(dim % 2 == 0 && dim > 0);
        let mut m = Matrix::zeros(dim, dim);
        for i in 0..dim / 2 {
            m[(2 * i + 1, 2 * i)] = 1.0;
            m[(2 * i, 2 * i + 1)] = -1.0;
        }
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }
}

fn square_plus_identity_dev(j: &Matrix) -> f64 {
    j.mul(j).add(&Matrix::identity(j.rows())).max_abs()
}

/// Symmetric frame components of a symmetric (0,2)-tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor(Matrix);

impl SymTensor {
    pub fn new(m: Matrix) -> Result<Self, TensorError> {
        check_even_square(&m)?;
        if !m.is_exactly_symmetric() {
            return Err(TensorError::NotSymmetric);
        }
        Ok(Self(m))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(Matrix::zeros(dim, dim))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    /// `|A + JᵀAJ|_max`: zero exactly when `A` is J-anti-invariant.
    pub fn anti_invariance_defect(&self, j: &AcsMatrix) -> f64 {
        self.0.add(&conjugate(&self.0, j)).max_abs()
    }

    /// `|A - JᵀAJ|_max`: zero exactly when `A` is J-invariant.
    pub fn invariance_defect(&self, j: &AcsMatrix) -> f64 {
        self.0.sub(&conjugate(&self.0, j)).max_abs()
    }
}

impl From<MetricMatrix> for SymTensor {
    fn from(g: MetricMatrix) -> Self {
        SymTensor(g.0)
    }
}

/// `JᵀAJ`, the components of `A(J·, J·)`.
fn conjugate(a: &Matrix, j: &AcsMatrix) -> Matrix {
    j.0.transpose().mul(a).mul(&j.0)
}

fn split(a: &SymTensor, j: &AcsMatrix, sign: f64) -> Result<SymTensor, TensorError> {
    same_dim(a.dim(), j.dim())?;
    let dev = square_plus_identity_dev(&j.0);
    if dev > ACS_TOL {
        return Err(TensorError::NotAlmostComplex(dev));
    }
    let out = a.0.add(&conjugate(&a.0, j).scale(sign)).scale(0.5);
    Ok(SymTensor(out.symmetrized()))
}

/// `A⁻ = ½(A − A(J·, J·))`.
pub fn anti_invariant_part(a: &SymTensor, j: &AcsMatrix) -> Result<SymTensor, TensorError> {
    split(a, j, -1.0)
}

/// `A⁺ = ½(A + A(J·, J·))`.
pub fn invariant_part(a: &SymTensor, j: &AcsMatrix) -> Result<SymTensor, TensorError> {
    split(a, j, 1.0)
}

/// `g · e^h`, i.e. `g(X, e^ĥ Y)` with `ĥ = g⁻¹h`.
///
/// Evaluated as `g^½ exp(g^-½ h g^-½) g^½`, which is symmetric and positive
/// definite by construction.
pub fn exp_metric(g: &MetricMatrix, h: &SymTensor) -> Result<MetricMatrix, TensorError> {
    same_dim(g.dim(), h.dim())?;
    let (sqrt, inv_sqrt) = g.sqrt_and_inv_sqrt();
    let inner = inv_sqrt.mul(&h.0).mul(&inv_sqrt).symmetrized();
    let exp_inner = symmetric_eigen(&inner).map_spectrum(libm::exp);
    MetricMatrix::new(sqrt.mul(&exp_inner).mul(&sqrt).symmetrized())
}

/// The almost-complex structure `J = Ω⁻¹G` of a compatible pair, or why it fails.
pub fn check_compatibility(g: &MetricMatrix, omega: &SymplecticMatrix) -> Result<AcsMatrix, TensorError> {
    same_dim(g.dim(), omega.dim())?;
    if !omega.nondegenerate {
        return Err(TensorError::Degenerate);
    }
    let inv = omega.m.inverse().ok_or(TensorError::Degenerate)?;
    let j = inv.mul(&g.0);
    let scale = g.0.max_abs().max(1.0);
    let dev = square_plus_identity_dev(&j);
    if dev > COMPAT_TOL * scale {
        return Err(TensorError::NotAlmostComplex(dev));
    }
    let iso = j.transpose().mul(&g.0).mul(&j).sub(&g.0).max_abs();
    if iso > COMPAT_TOL * scale {
        return Err(TensorError::NotIsometry(iso));
    }
    Ok(AcsMatrix(j))
}

/// The unique J-anti-invariant `h` with `g · e^h = g̃`, both metrics ω-compatible.
pub fn log_recover(
    g: &MetricMatrix,
    g_tilde: &MetricMatrix,
    omega: &SymplecticMatrix,
) -> Result<SymTensor, TensorError> {
    same_dim(g.dim(), g_tilde.dim())?;
    let j = check_compatibility(g, omega)
        .map_err(|e| TensorError::Incompatible { role: "reference", source: Box::new(e) })?;
    check_compatibility(g_tilde, omega)
        .map_err(|e| TensorError::Incompatible { role: "target", source: Box::new(e) })?;
    let (sqrt, inv_sqrt) = g.sqrt_and_inv_sqrt();
    let inner = inv_sqrt.mul(&g_tilde.0).mul(&inv_sqrt).symmetrized();
    let eig = symmetric_eigen(&inner);
    let min = eig.values[0];
    if !(min > 0.0) {
        return Err(TensorError::LogUndefined(min));
    }
    let log_inner = eig.map_spectrum(libm::log);
    let h = SymTensor(sqrt.mul(&log_inner).mul(&sqrt).symmetrized());
    let defect = h.anti_invariance_defect(&j);
    if defect > COMPAT_TOL * h.0.max_abs().max(1.0) {
        return Err(TensorError::NotAntiInvariant(defect));
    }
    Ok(h)
}

/// Pointwise `g_inner · e^{η(r) h}` where `g_inner · e^h = g_outer`.
///
/// Samples with `η = 0` return `g_inner` unchanged. Every produced metric is
/// re-checked for compatibility with `omega`.
pub fn cutoff_blend(
    outer: &[MetricMatrix],
    inner: &[MetricMatrix],
    omega: &SymplecticMatrix,
    cutoff: &Cutoff,
    radii: &[f64],
) -> Result<Vec<MetricMatrix>, TensorError> {
    same_dim(outer.len(), inner.len())?;
    same_dim(outer.len(), radii.len())?;
    let blend_err = |index: usize| move |e: TensorError| TensorError::Blend { index, source: Box::new(e) };
    let mut out = Vec::with_capacity(outer.len());
    for (index, ((g_out, g_in), &r)) in outer.iter().zip(inner).zip(radii).enumerate() {
        let eta = cutoff.eval(r);
        if eta == 0.0 {
            out.push(g_in.clone());
            continue;
        }
        let h = log_recover(g_in, g_out, omega).map_err(blend_err(index))?;
        let blended = exp_metric(g_in, &SymTensor(h.0.scale(eta))).map_err(blend_err(index))?;
        check_compatibility(&blended, omega).map_err(blend_err(index))?;
        out.push(blended);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    /// Frame of the Kodaira-Thurston example: J e4 = e1, J e2 = e3.
    fn kt_j() -> AcsMatrix {
        let mut m = Matrix::zeros(4, 4);
        m[(0, 3)] = 1.0;
        m[(3, 0)] = -1.0;
        m[(2, 1)] = 1.0;
        m[(1, 2)] = -1.0;
        AcsMatrix::new(m, 0.0).unwrap()
    }

    /// ω(e4, e1) = 1, ω(e2, e3) = 1.
    fn kt_omega() -> SymplecticMatrix {
        let mut m = Matrix::zeros(4, 4);
        m[(3, 0)] = 1.0;
        m[(0, 3)] = -1.0;
        m[(1, 2)] = 1.0;
        m[(2, 1)] = -1.0;
        SymplecticMatrix::new(m).unwrap()
    }

    fn sym(n: usize, entries: &[f64]) -> SymTensor {
        SymTensor::new(Matrix::from_row_slice(n, n, entries)).unwrap()
    }

    /// Symplectic transvection `x ↦ x + c ω(v, x) v` for the standard form.
    fn transvection(v: &[f64], c: f64) -> Matrix {
        let n = v.len();
        let omega = SymplecticMatrix::standard(n);
        let row = Matrix::from_row_slice(1, n, v).mul(omega.matrix());
        Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } + c * v[i] * row[(0, j)])
    }

    /// Compatible metric `SᵀS` for a random symplectic `S` (standard ω).
    fn compatible_metric(params: &[f64]) -> MetricMatrix {
        let n = 4;
        let mut s = Matrix::identity(n);
        for chunk in params.chunks(n + 1) {
            s = s.mul(&transvection(&chunk[..n], chunk[n]));
        }
        MetricMatrix::new(s.transpose().mul(&s).symmetrized()).unwrap()
    }

    fn anti_invariant_from(raw: &[f64], j: &AcsMatrix) -> SymTensor {
        let a = SymTensor(Matrix::from_fn(4, 4, |r, c| raw[r.min(c) * 4 + r.max(c)]));
        anti_invariant_part(&a, j).unwrap()
    }

    #[test]
    fn metric_has_no_anti_invariant_part() {
        let j = AcsMatrix::standard(4);
        let g = SymTensor::from(MetricMatrix::identity(4));
        assert_eq!(anti_invariant_part(&g, &j).unwrap(), SymTensor::zeros(4));
        assert_eq!(invariant_part(&g, &j).unwrap(), g);
    }

    #[test]
    fn kt_ricci_anti_invariant_part() {
        let ricci = sym(4, &[-0.5, 0., 0., 0., 0., -0.5, 0., 0., 0., 0., 0.5, 0., 0., 0., 0., 0.]);
        let minus = anti_invariant_part(&ricci, &kt_j()).unwrap();
        let expected = sym(4, &[-0.25, 0., 0., 0., 0., -0.5, 0., 0., 0., 0., 0.5, 0., 0., 0., 0., 0.25]);
        assert_eq!(minus, expected);
        // ½(A + JᵀAJ) evaluated by hand is zero for this anti-invariant tensor.
        assert_eq!(invariant_part(&expected, &kt_j()).unwrap(), SymTensor::zeros(4));
    }

    #[test]
    fn split_rejects_bad_inputs() {
        let a = SymTensor::zeros(4);
        let j6 = AcsMatrix::standard(6);
        assert!(matches!(anti_invariant_part(&a, &j6), Err(TensorError::DimensionMismatch { .. })));
        // Forged through the tolerance-free constructor path.
        let sloppy = AcsMatrix(AcsMatrix::standard(4).matrix().scale(1.0 + 1e-9));
        assert!(matches!(anti_invariant_part(&a, &sloppy), Err(TensorError::NotAlmostComplex(_))));
    }

    #[test]
    fn exp_metric_of_diagonal_tensor() {
        let (a, b) = (0.3, -0.7);
        let g = MetricMatrix::identity(4);
        let h = SymTensor::new(Matrix::from_diagonal(&[a, -a, b, -b])).unwrap();
        let out = exp_metric(&g, &h).unwrap();
        let expected = Matrix::from_diagonal(&[libm::exp(a), libm::exp(-a), libm::exp(b), libm::exp(-b)]);
        assert!(out.matrix().max_abs_diff(&expected) < 1e-14);
        assert!(check_compatibility(&out, &SymplecticMatrix::standard(4)).is_ok());
        assert_eq!(exp_metric(&g, &SymTensor::zeros(4)).unwrap().matrix().max_abs_diff(g.matrix()), 0.0);
    }

    #[test]
    fn compatibility_examples() {
        let j = check_compatibility(&MetricMatrix::identity(4), &SymplecticMatrix::standard(4)).unwrap();
        assert_eq!(j, AcsMatrix::standard(4));

        let j = check_compatibility(&MetricMatrix::identity(4), &kt_omega()).unwrap();
        assert!(j.matrix().max_abs_diff(kt_j().matrix()) < 1e-15);

        let g = MetricMatrix::new(Matrix::from_diagonal(&[2.0, 1.0, 1.0, 1.0])).unwrap();
        assert!(matches!(
            check_compatibility(&g, &SymplecticMatrix::standard(4)),
            Err(TensorError::NotAlmostComplex(_))
        ));

        let degenerate = SymplecticMatrix::new(Matrix::zeros(4, 4)).unwrap();
        assert!(!degenerate.is_nondegenerate());
        assert_eq!(check_compatibility(&MetricMatrix::identity(4), &degenerate), Err(TensorError::Degenerate));
    }

    #[test]
    fn constructors_validate() {
        assert!(matches!(MetricMatrix::new(Matrix::from_diagonal(&[1.0, -1.0])), Err(TensorError::NotPositiveDefinite(_))));
        assert!(matches!(MetricMatrix::new(Matrix::identity(3)), Err(TensorError::BadShape { .. })));
        let mut skewish = Matrix::zeros(2, 2);
        skewish[(0, 1)] = 1.0;
        assert_eq!(SymplecticMatrix::new(skewish.clone()), Err(TensorError::NotSkew));
        assert_eq!(SymTensor::new(skewish), Err(TensorError::NotSymmetric));
    }

    #[test]
    fn log_recover_examples() {
        let omega = SymplecticMatrix::standard(4);
        let g = compatible_metric(&[0.3, -0.2, 0.5, 0.1, 0.8, -0.4, 0.2, 0.1, 0.6, -0.5]);
        assert!(log_recover(&g, &g, &omega).unwrap().matrix().max_abs() < 1e-13);

        let j = check_compatibility(&g, &omega).unwrap();
        let h0 = anti_invariant_from(&[0.2, -0.1, 0.3, 0.05, 0.0, 0.4, -0.2, 0.0, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -0.3], &j);
        let g_tilde = exp_metric(&g, &h0).unwrap();
        let h = log_recover(&g, &g_tilde, &omega).unwrap();
        assert!(h.matrix().max_abs_diff(h0.matrix()) < 1e-10);

        let doubled = MetricMatrix::new(g.matrix().scale(2.0)).unwrap();
        assert!(matches!(log_recover(&g, &doubled, &omega), Err(TensorError::Incompatible { role: "target", .. })));
    }

    #[test]
    fn cutoff_blend_regions() {
        let omega = SymplecticMatrix::standard(4);
        let inner = compatible_metric(&[0.1, 0.4, -0.3, 0.2, 0.7, 0.5, 0.0, 0.1, -0.2, 0.3]);
        let outer = compatible_metric(&[-0.4, 0.1, 0.2, 0.6, -0.5, 0.2, 0.3, -0.1, 0.4, 0.9]);
        let cutoff = Cutoff::new(1.0, 2.0);
        let radii = [0.5, 1.5, 3.0];
        let out = cutoff_blend(&vec![outer.clone(); 3], &vec![inner.clone(); 3], &omega, &cutoff, &radii).unwrap();
        assert_eq!(out[0], inner);
        assert!(out[2].matrix().max_abs_diff(outer.matrix()) < 1e-12);
        assert!((cutoff.eval(1.5) - 0.5).abs() < 1e-15);
        assert!(check_compatibility(&out[1], &omega).is_ok());
        assert!(symmetric_eigen(out[1].matrix()).values[0] > 0.0);

        let wrong = MetricMatrix::new(outer.matrix().scale(3.0)).unwrap();
        let err = cutoff_blend(&[wrong], &[inner], &omega, &cutoff, &[1.5]).unwrap_err();
        assert!(matches!(err, TensorError::Blend { index: 0, .. }));
    }

    proptest! {
        #[test]
        fn splitting_is_a_complementary_projection(raw in prop::collection::vec(-3.0f64..3.0, 16)) {
            let j = kt_j();
            let a = SymTensor(Matrix::from_fn(4, 4, |r, c| raw[r.min(c) * 4 + r.max(c)]));
            let plus = invariant_part(&a, &j).unwrap();
            let minus = anti_invariant_part(&a, &j).unwrap();
            prop_assert!(plus.matrix().add(minus.matrix()).max_abs_diff(a.matrix()) < 1e-14);
            prop_assert!(invariant_part(&plus, &j).unwrap().matrix().max_abs_diff(plus.matrix()) < 1e-14);
            prop_assert!(anti_invariant_part(&minus, &j).unwrap().matrix().max_abs_diff(minus.matrix()) < 1e-14);
            prop_assert!(invariant_part(&minus, &j).unwrap().matrix().max_abs() < 1e-14);
            prop_assert!(anti_invariant_part(&plus, &j).unwrap().matrix().max_abs() < 1e-14);
            prop_assert!(minus.anti_invariance_defect(&j) < 1e-14);
        }

        #[test]
        fn exp_preserves_compatibility_and_inverts(
            params in prop::collection::vec(-0.6f64..0.6, 10),
            raw in prop::collection::vec(-1.0f64..1.0, 16),
        ) {
            let omega = SymplecticMatrix::standard(4);
            let g = compatible_metric(&params);
            let j = check_compatibility(&g, &omega).unwrap();
            let h = anti_invariant_from(&raw, &j);
            let g2 = exp_metric(&g, &h).unwrap();
            prop_assert!(check_compatibility(&g2, &omega).is_ok());
            let back = log_recover(&g, &g2, &omega).unwrap();
            prop_assert!(back.matrix().max_abs_diff(h.matrix()) < 1e-10);
        }
    }
}
