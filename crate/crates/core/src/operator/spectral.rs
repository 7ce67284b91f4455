//! Smallest eigenpairs of the normal operator and the principal-symbol check.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use thiserror::Error;

use super::{KtGrid, KtOperator, OperatorError, SparseOperator, Topology, Variant};
use crate::linalg::{axpy, dot, norm, symmetric_eigen, Cholesky, Matrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("eigen-iteration did not converge after {iterations} sweeps (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("shifted normal operator is not positive definite")]
    Singular,
    #[error("wavevector must be nonzero")]
    ZeroWavevector,
    #[error("plane waves with a z-mode are not invariant on the twisted grid")]
    NotInvariant,
    #[error("requested {k} eigenpairs of a {n}-dimensional operator")]
    TooManyPairs { k: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralMethod {
    Dense,
    Iterative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenConfig {
    pub k: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Largest unknown count handled with a dense factorization.
    pub dense_limit: usize,
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self { k: 4, tol: 1e-8, max_iter: 400, dense_limit: 4096, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `‖Mv − λv‖` for unit `v`.
    pub residuals: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub n: usize,
    pub nt: usize,
    pub unknowns: usize,
    pub method: SpectralMethod,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub method: SpectralMethod,
    pub iterations: usize,
}

struct SplitMix(u64);

impl SplitMix {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }
}

fn orthonormalize(vs: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for mut v in vs.drain(..) {
        for _ in 0..2 {
            for u in &out {
                let c = dot(u, &v);
                axpy(-c, u, &mut v);
            }
        }
        let nv = norm(&v);
        if nv > 1e-300 {
            v.iter_mut().for_each(|x| *x /= nv);
            out.push(v);
        }
    }
    *vs = out;
}

/// Preconditioned conjugate gradients for `(M + σ) x = b`.
fn cg(apply: &dyn Fn(&[f64]) -> Vec<f64>, diag: &[f64], b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) {
    let mut r: Vec<f64> = b.to_vec();
    let ax = apply(x);
    axpy(-1.0, &ax, &mut r);
    let bn = norm(b).max(f64::MIN_POSITIVE);
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        if norm(&r) <= rel_tol * bn {
            break;
        }
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        z = r.iter().zip(diag).map(|(r, d)| r / d).collect();
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
}

/// The `k` smallest eigenpairs of `Aᵀ diag(w) A` by shift-invert subspace
/// iteration with Rayleigh-Ritz extraction.
///
/// The shifted solves use a dense Cholesky factor up to `dense_limit`
/// unknowns and Jacobi-preconditioned CG above.
pub fn smallest_eigenpairs(a: &SparseOperator, weights: &[f64], cfg: &EigenConfig) -> Result<EigenPairs, SpectralError> {
    let n = a.ncols();
    if cfg.k == 0 || cfg.k > n {
        return Err(SpectralError::TooManyPairs { k: cfg.k, n });
    }
    let block = (2 * cfg.k + 6).min(n);
    let diag = a.normal_diagonal(weights);
    let sigma = 1e-6 * diag.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let dense = n <= cfg.dense_limit;
    let dense_m = dense.then(|| a.normal_dense(weights));
    let apply = |x: &[f64]| a.normal_mul_vec(weights, x);
    let factor = match dense_m {
        Some(m) => {
            let shifted = m.add(&Matrix::identity(n).scale(sigma));
            Some(Cholesky::factor(&shifted).ok_or(SpectralError::Singular)?)
        }
        None => None,
    };
    let shifted_apply = |x: &[f64]| -> Vec<f64> {
        let mut y = apply(x);
        axpy(sigma, x, &mut y);
        y
    };
    let pre: Vec<f64> = diag.iter().map(|d| d + sigma).collect();
    let solve = |b: &[f64]| -> Vec<f64> {
        match &factor {
            Some(f) => {
                let mut x = b.to_vec();
                f.solve_in_place(&mut x);
                x
            }
            None => {
                let mut x = vec![0.0; n];
                cg(&shifted_apply, &pre, b, &mut x, 1e-12, 20 * n);
                x
            }
        }
    };

    let mut rng = SplitMix(cfg.seed);
    let mut x: Vec<Vec<f64>> = (0..block).map(|_| (0..n).map(|_| rng.next()).collect()).collect();
    orthonormalize(&mut x);
    let mut worst = f64::INFINITY;
    for iter in 1..=cfg.max_iter {
        let mut y: Vec<Vec<f64>> = x.iter().map(|v| solve(v)).collect();
        orthonormalize(&mut y);
        let my: Vec<Vec<f64>> = y.iter().map(|v| apply(v)).collect();
        let b = y.len();
        let h = Matrix::from_fn(b, b, |i, j| 0.5 * (dot(&y[i], &my[j]) + dot(&y[j], &my[i])));
        let eig = symmetric_eigen(&h);
        let combine = |basis: &[Vec<f64>], col: usize| -> Vec<f64> {
            let mut v = vec![0.0; n];
            for (i, bv) in basis.iter().enumerate() {
                axpy(eig.vectors[(i, col)], bv, &mut v);
            }
            v
        };
        let new_x: Vec<Vec<f64>> = (0..b).map(|c| combine(&y, c)).collect();
        let new_mx: Vec<Vec<f64>> = (0..b).map(|c| combine(&my, c)).collect();
        let kk = cfg.k.min(b);
        let residuals: Vec<f64> = (0..kk)
            .map(|c| {
                let mut r = new_mx[c].clone();
                axpy(-eig.values[c], &new_x[c], &mut r);
                norm(&r) / norm(&new_x[c])
            })
            .collect();
        worst = residuals.iter().cloned().fold(0.0, f64::max);
        x = new_x;
        if worst < cfg.tol {
            let method = if dense { SpectralMethod::Dense } else { SpectralMethod::Iterative };
            x.truncate(kk);
            return Ok(EigenPairs { values: eig.values[..kk].to_vec(), residuals, vectors: x, method, iterations: iter });
        }
    }
    Err(SpectralError::NotConverged { iterations: cfg.max_iter, residual: worst })
}

/// Smallest eigenvalues of the weighted normal operator of the adjoint.
///
/// The nilmanifold uses the twisted grid of the given size; the flat variant
/// the torus of period 2π.
pub fn kernel_gap(n: usize, nt: usize, d: f64, variant: Variant, cfg: &EigenConfig) -> Result<SpectralReport, SpectralError> {
    let grid = match variant {
        Variant::KodairaThurston => KtGrid::kodaira_thurston(n, nt, d).map_err(OperatorError::from)?,
        Variant::Flat => KtGrid::flat_torus(n, 2.0 * PI).map_err(OperatorError::from)?,
    };
    let op = KtOperator::new(grid, variant)?;
    let a = op.assemble_adjoint();
    let pairs = smallest_eigenpairs(&a, &op.row_weights(), cfg)?;
    Ok(SpectralReport {
        eigenvalues: pairs.values,
        residuals: pairs.residuals,
        eigenvectors: pairs.vectors,
        n: op.grid().n(),
        nt: op.grid().nt(),
        unknowns: a.ncols(),
        method: pairs.method,
        iterations: pairs.iterations,
    })
}

/// Physical wavevector of integer mode numbers on a grid.
fn wavevector(grid: &KtGrid, modes: [i64; 4]) -> [f64; 4] {
    let l = grid.lengths();
    core::array::from_fn(|a| 2.0 * PI * modes[a] as f64 / l[a])
}

/// `⟨δδ(adjoint ψ), ψ⟩ / (½|ξ|⁴‖ψ‖²)` for the plane wave `ψ = cos(ξ·x)`.
pub fn symbol_check(op: &KtOperator, modes: [i64; 4]) -> Result<f64, SpectralError> {
    if modes.iter().all(|&m| m == 0) {
        return Err(SpectralError::ZeroWavevector);
    }
    let grid = op.grid();
    if grid.topology() == Topology::Twisted && modes[2] != 0 {
        return Err(SpectralError::NotInvariant);
    }
    let xi = wavevector(grid, modes);
    let psi = grid.sample(|p| libm::cos((0..4).map(|a| xi[a] * p[a]).sum::<f64>()));
    let h = op.adjoint_ds(&psi)?;
    let cell = grid.cell_volume();
    let num = h.pairing(&h, cell);
    let xi2: f64 = xi.iter().map(|x| x * x).sum();
    Ok(num / (0.5 * xi2 * xi2 * dot(&psi, &psi) * cell))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSample {
    pub modes: [i64; 4],
    pub xi_norm: f64,
    pub ratio: f64,
    /// Same plane wave on the same grid with the structure constants switched off.
    pub flat_ratio: f64,
}

/// Symbol ratios along a list of modes, paired with the flat ratio on the same grid.
///
/// `flat_ratio` isolates the stencil error, so `ratio / flat_ratio − 1`
/// measures the lower-order curvature contribution alone.
pub fn symbol_sweep(op: &KtOperator, modes: &[[i64; 4]]) -> Result<Vec<SymbolSample>, SpectralError> {
    let flat = KtOperator::with_kappa(op.grid().clone(), 0.0);
    modes
        .iter()
        .map(|&m| {
            let xi = wavevector(op.grid(), m);
            Ok(SymbolSample {
                modes: m,
                xi_norm: libm::sqrt(xi.iter().map(|x| x * x).sum()),
                ratio: symbol_check(op, m)?,
                flat_ratio: symbol_check(&flat, m)?,
            })
        })
        .collect()
}
