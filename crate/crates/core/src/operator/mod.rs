//! Finite-difference realization of the linearized scalar curvature operator
//! on the Kodaira-Thurston block.
//!
//! The structure is `[e1, e2] = κ e3` on the frame `e1 = ∂x`,
//! `e2 = ∂y + κx ∂z`, `e3 = ∂z`, `e4 = ∂t` with `J e4 = e1`, `J e2 = e3`;
//! `κ = 1` is the nilmanifold and `κ = 0` the flat torus. J-anti-invariant
//! symmetric tensors are stored through their six free components
//! `(11, 22, 12, 13, 23, 14)`; the rest follow from `h44 = −h11`,
//! `h33 = −h22`, `h34 = h12`, `h24 = −h13`.
//!
//! [`KtOperator::adjoint_ds`] evaluates `(∇dψ)⁻ − r⁻ψ` from compact
//! second-order stencils. [`KtOperator::forward_ds`] is its exact discrete
//! transpose for the weighted pairing, and
//! [`KtOperator::double_divergence`] is an independent discretization of
//! `δδh − ⟨r, h⟩` built from composed frame derivatives.

mod grid;
mod sparse;
mod spectral;

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

pub use grid::{GridError, KtGrid, Topology};
pub use sparse::SparseOperator;
pub use spectral::{
    kernel_gap, smallest_eigenpairs, EigenPairs, symbol_check, symbol_sweep, EigenConfig, SpectralError, SpectralMethod,
    SpectralReport, SymbolSample,
};

use crate::lie::{curvature, levi_civita, LieFrameSpec};

/// Pairing weights of the six free components in the full tensor norm.
pub const COMPONENT_WEIGHTS: [f64; 6] = [2.0, 2.0, 4.0, 4.0, 2.0, 2.0];
/// Frame index pairs of the six free components.
pub const COMPONENTS: [(usize, usize); 6] = [(0, 0), (1, 1), (0, 1), (0, 2), (1, 2), (0, 3)];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("the nilmanifold operator needs a twisted or open grid, the flat one a periodic or open grid")]
    TopologyMismatch,
    #[error("field has {got} values, grid has {expected} nodes")]
    FieldLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    KodairaThurston,
    Flat,
}

/// Six component fields of a J-anti-invariant symmetric tensor field.
#[derive(Debug, Clone, PartialEq)]
pub struct AntiInvariantField {
    pub comps: [Vec<f64>; 6],
}

impl AntiInvariantField {
    pub fn zeros(len: usize) -> Self {
        Self { comps: core::array::from_fn(|_| vec![0.0; len]) }
    }

    pub fn len(&self) -> usize {
        self.comps[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps[0].is_empty()
    }

    /// Components stacked component-major, matching the rows of [`KtOperator::assemble_adjoint`].
    pub fn to_flat(&self) -> Vec<f64> {
        self.comps.concat()
    }

    pub fn from_flat(v: &[f64]) -> Self {
        let n = v.len() / 6;
        Self { comps: core::array::from_fn(|c| v[c * n..(c + 1) * n].to_vec()) }
    }

    /// `Σ_nodes ⟨h, k⟩ · cell` with the full tensor inner product.
    pub fn pairing(&self, other: &Self, cell: f64) -> f64 {
        let mut s = 0.0;
        for c in 0..6 {
            s += COMPONENT_WEIGHTS[c] * crate::linalg::dot(&self.comps[c], &other.comps[c]);
        }
        s * cell
    }

    /// Full 4×4 tensor at one node.
    pub fn full(&self, node: usize) -> [[f64; 4]; 4] {
        let c: [f64; 6] = core::array::from_fn(|k| self.comps[k][node]);
        [
            [c[0], c[2], c[3], c[5]],
            [c[2], c[1], c[4], -c[3]],
            [c[3], c[4], -c[1], c[2]],
            [c[5], -c[3], c[2], -c[0]],
        ]
    }
}

/// Building blocks of the stencils.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Partial {
    Id,
    D(usize),
    DD(usize, usize),
}

/// A short linear combination of [`Partial`]s.
#[derive(Debug, Clone, Copy)]
struct Terms {
    items: [(Partial, f64); 8],
    len: usize,
}

impl Terms {
    fn new() -> Self {
        Self { items: [(Partial::Id, 0.0); 8], len: 0 }
    }

    fn push(&mut self, p: Partial, c: f64) -> &mut Self {
        if c != 0.0 {
            self.items[self.len] = (p, c);
            self.len += 1;
        }
        self
    }

    fn add(&mut self, other: &Terms, scale: f64) -> &mut Self {
        for &(p, c) in other.iter() {
            self.push(p, c * scale);
        }
        self
    }

    fn iter(&self) -> core::slice::Iter<'_, (Partial, f64)> {
        self.items[..self.len].iter()
    }
}

fn unit(a: usize, s: i64) -> [i64; 4] {
    let mut o = [0; 4];
    o[a] = s;
    o
}

/// Offsets and weights of a partial derivative stencil.
fn taps(p: Partial, h: &[f64; 4], out: &mut [([i64; 4], f64); 4]) -> usize {
    match p {
        Partial::Id => {
            out[0] = ([0; 4], 1.0);
            1
        }
        Partial::D(a) => {
            let w = 0.5 / h[a];
            out[0] = (unit(a, 1), w);
            out[1] = (unit(a, -1), -w);
            2
        }
        Partial::DD(a, b) if a == b => {
            let w = 1.0 / (h[a] * h[a]);
            out[0] = (unit(a, 1), w);
            out[1] = ([0; 4], -2.0 * w);
            out[2] = (unit(a, -1), w);
            3
        }
        Partial::DD(a, b) => {
            let w = 0.25 / (h[a] * h[b]);
            let mut k = 0;
            for (sa, sb, sign) in [(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)] {
                let mut o = [0; 4];
                o[a] = sa;
                o[b] = sb;
                out[k] = (o, sign * w);
                k += 1;
            }
            4
        }
    }
}

/// Linearized scalar curvature operator and its adjoint on a [`KtGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct KtOperator {
    grid: KtGrid,
    kappa: f64,
    gamma: [[[f64; 4]; 4]; 4],
    ricci: [[f64; 4]; 4],
    r_minus: [f64; 6],
}

/// `J e4 = e1`, `J e2 = e3` as a row-major matrix.
fn kt_j() -> Vec<f64> {
    let mut j = vec![0.0; 16];
    j[3] = 1.0;
    j[12] = -1.0;
    j[9] = 1.0;
    j[6] = -1.0;
    j
}

impl KtOperator {
    pub fn new(grid: KtGrid, variant: Variant) -> Result<Self, OperatorError> {
        let ok = match variant {
            Variant::KodairaThurston => grid.topology() != Topology::Periodic,
            Variant::Flat => grid.topology() != Topology::Twisted,
        };
        if !ok {
            return Err(OperatorError::TopologyMismatch);
        }
        let kappa = match variant {
            Variant::KodairaThurston => 1.0,
            Variant::Flat => 0.0,
        };
        Ok(Self::with_kappa(grid, kappa))
    }

    /// Operator for `[e1, e2] = κ e3` on any grid.
    pub fn with_kappa(grid: KtGrid, kappa: f64) -> Self {
        let brackets: Vec<(usize, usize, usize, f64)> = if kappa != 0.0 { vec![(0, 1, 2, kappa)] } else { vec![] };
        let spec = LieFrameSpec::from_brackets("block", 4, &brackets, kt_j(), vec![])
            .expect("the block structure is almost-Kähler for every κ");
        let g = levi_civita(&spec);
        let curv = curvature(&spec).expect("curvature routes agree");
        let gamma = core::array::from_fn(|i| core::array::from_fn(|j| core::array::from_fn(|k| g[(i * 4 + j) * 4 + k])));
        let ricci = core::array::from_fn(|i| core::array::from_fn(|j| curv.ricci(i, j)));
        let r_minus = core::array::from_fn(|c| curv.ricci_anti(COMPONENTS[c].0, COMPONENTS[c].1));
        Self { grid, kappa, gamma, ricci, r_minus }
    }

    pub fn grid(&self) -> &KtGrid {
        &self.grid
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `r⁻` on the six free components.
    pub fn r_minus(&self) -> [f64; 6] {
        self.r_minus
    }

    /// `⟨∇_{e_i} e_j, e_k⟩` of the frame structure.
    pub fn gamma(&self, i: usize, j: usize, k: usize) -> f64 {
        self.gamma[i][j][k]
    }

    fn check(&self, f: &[f64]) -> Result<(), OperatorError> {
        if f.len() != self.grid.len() {
            return Err(OperatorError::FieldLength { expected: self.grid.len(), got: f.len() });
        }
        Ok(())
    }

    fn eval(&self, values: &[f64], node: usize, terms: &Terms) -> Option<f64> {
        let h = self.grid.spacing();
        let mut buf = [([0i64; 4], 0.0); 4];
        let mut s = 0.0;
        for &(p, c) in terms.iter() {
            let n = taps(p, &h, &mut buf);
            for &(off, w) in &buf[..n] {
                s += c * w * values[self.grid.neighbor(node, off)?];
            }
        }
        Some(s)
    }

    fn row_taps(&self, node: usize, terms: &Terms) -> Option<Vec<(usize, f64)>> {
        let h = self.grid.spacing();
        let mut buf = [([0i64; 4], 0.0); 4];
        let mut out = Vec::with_capacity(24);
        for &(p, c) in terms.iter() {
            let n = taps(p, &h, &mut buf);
            for &(off, w) in &buf[..n] {
                out.push((self.grid.neighbor(node, off)?, c * w));
            }
        }
        Some(out)
    }

    fn x_of(&self, node: usize) -> f64 {
        self.grid.coords(node)[0]
    }

    /// Frame derivative `e_a` as stencil terms at a point with first coordinate `x`.
    fn frame_terms(&self, a: usize, x: f64) -> Terms {
        let mut t = Terms::new();
        t.push(Partial::D(a), 1.0);
        if a == 1 {
            t.push(Partial::D(2), self.kappa * x);
        }
        t
    }

    /// `∇dψ(e_a, e_b)` from the closed-form coordinate expressions.
    fn hessian_terms(&self, a: usize, b: usize, x: f64) -> Terms {
        use Partial::{D, DD};
        let k = self.kappa;
        let (a, b) = (a.min(b), a.max(b));
        let mut t = Terms::new();
        match (a, b) {
            (0, 0) => t.push(DD(0, 0), 1.0),
            (1, 1) => t.push(DD(1, 1), 1.0).push(DD(1, 2), 2.0 * k * x).push(DD(2, 2), k * k * x * x),
            (2, 2) => t.push(DD(2, 2), 1.0),
            (3, 3) => t.push(DD(3, 3), 1.0),
            (0, 1) => t.push(DD(0, 1), 1.0).push(DD(0, 2), k * x).push(D(2), 0.5 * k),
            (0, 2) => t.push(DD(0, 2), 1.0).push(D(1), 0.5 * k).push(D(2), 0.5 * k * k * x),
            (0, 3) => t.push(DD(0, 3), 1.0),
            (1, 2) => t.push(DD(1, 2), 1.0).push(DD(2, 2), k * x).push(D(0), -0.5 * k),
            (1, 3) => t.push(DD(1, 3), 1.0).push(DD(2, 3), k * x),
            (2, 3) => t.push(DD(2, 3), 1.0),
            _ => unreachable!(),
        };
        t
    }

    /// Free component `c` of `(∇dψ)⁻ − r⁻ψ`.
    fn component_terms(&self, c: usize, x: f64) -> Terms {
        let h = |a, b| self.hessian_terms(a, b, x);
        let mut t = Terms::new();
        match c {
            0 => t.add(&h(0, 0), 0.5).add(&h(3, 3), -0.5),
            1 => t.add(&h(1, 1), 0.5).add(&h(2, 2), -0.5),
            2 => t.add(&h(0, 1), 0.5).add(&h(2, 3), 0.5),
            3 => t.add(&h(0, 2), 0.5).add(&h(1, 3), -0.5),
            4 => t.add(&h(1, 2), 1.0),
            5 => t.add(&h(0, 3), 1.0),
            _ => unreachable!(),
        };
        t.push(Partial::Id, -self.r_minus[c]);
        t
    }

    /// Nodes where every stencil stays inside the grid.
    pub fn interior_mask(&self) -> Vec<bool> {
        (0..self.grid.len())
            .map(|node| [[1, 1, 1, 1], [-1, -1, -1, -1]].iter().all(|_| {
                (0..4).all(|a| self.grid.neighbor(node, unit(a, 1)).is_some() && self.grid.neighbor(node, unit(a, -1)).is_some())
            }))
            .collect()
    }

    /// `e_1ψ … e_4ψ` with centered differences; zero where a stencil leaves an open grid.
    pub fn frame_derivatives(&self, psi: &[f64]) -> Result<[Vec<f64>; 4], OperatorError> {
        self.check(psi)?;
        Ok(core::array::from_fn(|a| self.apply_pointwise(psi, |node, x| self.frame_terms(a, x).into_eval(self, psi, node))))
    }

    fn apply_pointwise(&self, _psi: &[f64], f: impl Fn(usize, f64) -> Option<f64>) -> Vec<f64> {
        (0..self.grid.len()).map(|node| f(node, self.x_of(node)).unwrap_or(0.0)).collect()
    }

    /// All ten entries `∇dψ(e_a, e_b)`, `a <= b`, from the closed-form expressions.
    pub fn hessian(&self, psi: &[f64]) -> Result<[[Vec<f64>; 4]; 4], OperatorError> {
        self.check(psi)?;
        let mut out: [[Vec<f64>; 4]; 4] = Default::default();
        for a in 0..4 {
            for b in a..4 {
                let v = self.apply_pointwise(psi, |node, x| self.hessian_terms(a, b, x).into_eval(self, psi, node));
                if a != b {
                    out[b][a] = v.clone();
                }
                out[a][b] = v;
            }
        }
        Ok(out)
    }

    /// `∇dψ(e_a, e_b) = e_a(e_b ψ) − (∇_{e_a} e_b) ψ` with composed centered differences.
    pub fn hessian_definitional(&self, psi: &[f64]) -> Result<[[Vec<f64>; 4]; 4], OperatorError> {
        let d = self.frame_derivatives(psi)?;
        let mut out: [[Vec<f64>; 4]; 4] = Default::default();
        for a in 0..4 {
            for b in 0..4 {
                let dd = self.apply_pointwise(psi, |node, x| self.frame_terms(a, x).into_eval(self, &d[b], node));
                out[a][b] = (0..self.grid.len())
                    .map(|node| dd[node] - (0..4).map(|k| self.gamma[a][b][k] * d[k][node]).sum::<f64>())
                    .collect();
            }
        }
        Ok(out)
    }

    /// `(∇dψ)⁻ − r⁻ψ` on the six free components.
    pub fn adjoint_ds(&self, psi: &[f64]) -> Result<AntiInvariantField, OperatorError> {
        self.check(psi)?;
        Ok(AntiInvariantField {
            comps: core::array::from_fn(|c| {
                self.apply_pointwise(psi, |node, x| self.component_terms(c, x).into_eval(self, psi, node))
            }),
        })
    }

    /// Discrete L² norms of the six kernel equations at `ψ`.
    pub fn kernel_system_residual(&self, psi: &[f64]) -> Result<[f64; 6], OperatorError> {
        let r = self.adjoint_ds(psi)?;
        let cell = self.grid.cell_volume();
        Ok(core::array::from_fn(|c| libm::sqrt(crate::linalg::dot(&r.comps[c], &r.comps[c]) * cell)))
    }

    /// The adjoint as a sparse `6n × n` matrix, rows component-major.
    ///
    /// Rows at nodes whose stencil leaves an open grid are empty.
    pub fn assemble_adjoint(&self) -> SparseOperator {
        let n = self.grid.len();
        let rows = (0..6).flat_map(move |c| {
            (0..n).map(move |node| self.row_taps(node, &self.component_terms(c, self.x_of(node))).unwrap_or_default())
        });
        SparseOperator::from_rows(n, rows, 2)
    }

    /// Row weights of the assembled adjoint for the tensor pairing.
    pub fn row_weights(&self) -> Vec<f64> {
        let n = self.grid.len();
        (0..6).flat_map(|c| core::iter::repeat(COMPONENT_WEIGHTS[c]).take(n)).collect()
    }

    /// The exact transpose of [`Self::adjoint_ds`] for the weighted pairing,
    /// a discretization of `δδh − ⟨r, h⟩`.
    pub fn forward_ds(&self, h: &AntiInvariantField) -> Result<Vec<f64>, OperatorError> {
        self.check(&h.comps[0])?;
        let mut out = vec![0.0; self.grid.len()];
        for (c, comp) in h.comps.iter().enumerate() {
            for (node, &v) in comp.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                if let Some(taps) = self.row_taps(node, &self.component_terms(c, self.x_of(node))) {
                    for (col, w) in taps {
                        out[col] += COMPONENT_WEIGHTS[c] * w * v;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `δδh − ⟨r, h⟩` from composed frame derivatives and connection terms.
    pub fn double_divergence(&self, h: &AntiInvariantField) -> Result<Vec<f64>, OperatorError> {
        self.check(&h.comps[0])?;
        let n = self.grid.len();
        let full: Vec<[[f64; 4]; 4]> = (0..n).map(|node| h.full(node)).collect();
        let entry = |a: usize, b: usize| -> Vec<f64> { full.iter().map(|m| m[a][b]).collect() };
        let g = &self.gamma;
        // (δh)_b = Σ_c (∇_c h)(c, b).
        let mut div: [Vec<f64>; 4] = Default::default();
        for b in 0..4 {
            let mut acc = vec![0.0; n];
            for c in 0..4 {
                let hcb = entry(c, b);
                let d = self.apply_pointwise(&hcb, |node, x| self.frame_terms(c, x).into_eval(self, &hcb, node));
                for node in 0..n {
                    let m = &full[node];
                    let mut v = d[node];
                    for k in 0..4 {
                        v -= g[c][c][k] * m[k][b] + g[c][b][k] * m[c][k];
                    }
                    acc[node] += v;
                }
            }
            div[b] = acc;
        }
        let mut out = vec![0.0; n];
        for a in 0..4 {
            let d = self.apply_pointwise(&div[a], |node, x| self.frame_terms(a, x).into_eval(self, &div[a], node));
            for node in 0..n {
                out[node] += d[node] - (0..4).map(|k| g[a][a][k] * div[k][node]).sum::<f64>();
            }
        }
        for (node, o) in out.iter_mut().enumerate() {
            let m = &full[node];
            for a in 0..4 {
                for b in 0..4 {
                    *o -= self.ricci[a][b] * m[a][b];
                }
            }
        }
        Ok(out)
    }
}

impl Terms {
    fn into_eval(self, op: &KtOperator, values: &[f64], node: usize) -> Option<f64> {
        op.eval(values, node, &self)
    }
}

/// Smooth fields on the nilmanifold used as test data.
pub mod fields {
    use core::f64::consts::PI;

    /// `cos(2π(m x + n y)) · cos(2π p t / d + phase)`: z-independent, hence invariant.
    pub fn z_independent(m: i32, n: i32, p: i32, d: f64, phase: f64) -> impl Fn([f64; 4]) -> f64 {
        move |x: [f64; 4]| {
            libm::cos(2.0 * PI * (m as f64 * x[0] + n as f64 * x[1])) * libm::cos(2.0 * PI * p as f64 * x[3] / d + phase)
        }
    }

    /// Theta-type invariant field `Re Σ_k φ(x + k − x0) e^{2πi(q(z + k y) + r y)}`, `φ` a Gaussian.
    pub fn theta(q: i32, r: i32, x0: f64, width: f64, t_mode: i32, d: f64) -> impl Fn([f64; 4]) -> f64 {
        move |x: [f64; 4]| {
            let mut s = 0.0;
            for k in -6..=6 {
                let u = x[0] + k as f64 - x0;
                let phase = 2.0 * PI * (q as f64 * (x[2] + k as f64 * x[1]) + r as f64 * x[1]);
                s += libm::exp(-u * u / (2.0 * width * width)) * libm::cos(phase);
            }
            s * libm::cos(2.0 * PI * t_mode as f64 * x[3] / d)
        }
    }
}

#[cfg(test)]
mod tests;
