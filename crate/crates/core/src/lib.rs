//! Computational core for left-invariant almost-Kähler geometry.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO. It provides:
//!
//! * [`tensor`]: pointwise linear algebra of compatible triples `(g, ω, J)`,
//!   the J-invariant / J-anti-invariant splitting of symmetric 2-tensors and
//!   the exponential parametrization of ω-compatible metrics.
//! * [`lie`]: exact (rational) or floating curvature of left-invariant metrics
//!   described by structure constants on an orthonormal frame.
//! * [`zbound`]: intersection-form arithmetic and the scale-invariant upper
//!   bound for the total scalar curvature of almost-Kähler metrics, with its
//!   optimizer over the symplectic cone.
//! * [`operator`]: finite-difference realization of the linearized scalar
//!   curvature operator on the Kodaira-Thurston nilmanifold, its adjoint and
//!   spectral certificates.
//! * [`rearrange`]: a circle version of the rearrangement construction that
//!   approximates a target function by `f ∘ φ` with `φ` isotopic to the
//!   identity.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod linalg;
pub mod lie;
pub mod operator;
pub mod rearrange;
pub mod scalar;
pub mod smooth;
pub mod tensor;
pub mod zbound;

pub use scalar::{Rational, Scalar};
