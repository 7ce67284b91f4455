//! Uniform 4-D grids on the Kodaira-Thurston nilmanifold, the flat torus and open patches.

use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid needs at least 3 points per direction, got {0}")]
    TooSmall(usize),
    #[error("periods and spacings must be positive and finite")]
    BadPeriod,
}

/// How indices leaving the box are identified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// `(x, y, z, t) ~ (x + 1, y, y + z, t)` in x, plain periodic in y, z, t.
    Twisted,
    /// Plain periodic in all four directions.
    Periodic,
    /// No identifications: stencils that leave the box are undefined.
    Open,
}

/// Node layout `i + N (j + N (k + N l))` with `i, j, k < N` and `l < Nt`.
#[derive(Debug, Clone, PartialEq)]
pub struct KtGrid {
    n: usize,
    nt: usize,
    lengths: [f64; 4],
    origin: [f64; 4],
    topology: Topology,
}

impl KtGrid {
    /// The nilmanifold with unit Heisenberg periods and `t`-period `d`.
    pub fn kodaira_thurston(n: usize, nt: usize, d: f64) -> Result<Self, GridError> {
        Self::build(n, nt, [1.0, 1.0, 1.0, d], [0.0; 4], Topology::Twisted)
    }

    /// Flat torus `(ℝ / Lℤ)⁴` with `N` points in every direction.
    pub fn flat_torus(n: usize, period: f64) -> Result<Self, GridError> {
        Self::build(n, n, [period; 4], [0.0; 4], Topology::Periodic)
    }

    /// Box `origin + [0, N h)³ × [0, Nt h_t)` with no identifications.
    pub fn patch(n: usize, nt: usize, h: f64, ht: f64, origin: [f64; 4]) -> Result<Self, GridError> {
        Self::build(n, nt, [n as f64 * h, n as f64 * h, n as f64 * h, nt as f64 * ht], origin, Topology::Open)
    }

    fn build(n: usize, nt: usize, lengths: [f64; 4], origin: [f64; 4], topology: Topology) -> Result<Self, GridError> {
        if n < 3 || nt < 3 {
            return Err(GridError::TooSmall(n.min(nt)));
        }
        if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) || origin.iter().any(|o| !o.is_finite()) {
            return Err(GridError::BadPeriod);
        }
        Ok(Self { n, nt, lengths, origin, topology })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n * self.nt
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Box side lengths (periods for the closed topologies).
    pub fn lengths(&self) -> [f64; 4] {
        self.lengths
    }

    /// Grid spacing per direction.
    pub fn spacing(&self) -> [f64; 4] {
        let n = self.n as f64;
        [self.lengths[0] / n, self.lengths[1] / n, self.lengths[2] / n, self.lengths[3] / self.nt as f64]
    }

    /// Volume attached to each node by the trapezoidal rule.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn index(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        i + self.n * (j + self.n * (k + self.n * l))
    }

    pub fn multi_index(&self, node: usize) -> [usize; 4] {
        let n = self.n;
        [node % n, (node / n) % n, (node / (n * n)) % n, node / (n * n * n)]
    }

    /// Coordinates of a node inside the fundamental box.
    pub fn coords(&self, node: usize) -> [f64; 4] {
        let m = self.multi_index(node);
        let h = self.spacing();
        core::array::from_fn(|a| self.origin[a] + m[a] as f64 * h[a])
    }

    /// The node reached from `node` by the integer offset, after identifications.
    pub fn neighbor(&self, node: usize, offset: [i64; 4]) -> Option<usize> {
        let m = self.multi_index(node);
        let n = self.n as i64;
        let nt = self.nt as i64;
        let (mut i, j, mut k, l) = (m[0] as i64 + offset[0], m[1] as i64 + offset[1], m[2] as i64 + offset[2], m[3] as i64 + offset[3]);
        match self.topology {
            Topology::Open => {
                if [i, j, k].iter().any(|&v| v < 0 || v >= n) || l < 0 || l >= nt {
                    return None;
                }
            }
            Topology::Twisted => {
                // ψ(x + 1, y, z) = ψ(x, y, z − y) with y = j h, z = k h.
                while i >= n {
                    i -= n;
                    k -= j;
                }
                while i < 0 {
                    i += n;
                    k += j;
                }
            }
            Topology::Periodic => {
                i = i.rem_euclid(n);
            }
        }
        Some(self.index(i as usize, j.rem_euclid(n) as usize, k.rem_euclid(n) as usize, l.rem_euclid(nt) as usize))
    }

    /// Point of the universal cover reached by an offset, without identifications.
    pub fn cover_coords(&self, node: usize, offset: [i64; 4]) -> [f64; 4] {
        let base = self.coords(node);
        let h = self.spacing();
        core::array::from_fn(|a| base[a] + offset[a] as f64 * h[a])
    }

    /// Samples `f(x, y, z, t)` at every node.
    pub fn sample(&self, f: impl Fn([f64; 4]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|node| f(self.coords(node))).collect()
    }

    /// Index permutation realizing the shift by `steps` grid cells in z (or t when `in_t`).
    pub fn shift_map(&self, steps: i64, in_t: bool) -> Vec<usize> {
        let off = if in_t { [0, 0, 0, steps] } else { [0, 0, steps, 0] };
        (0..self.len()).map(|node| self.neighbor(node, off).expect("shifts stay on closed grids")).collect()
    }
}
