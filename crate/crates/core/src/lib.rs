//! Numerical laboratory for Bergman kernel functions of high tensor powers
//! of hermitian line bundles.
//!
//! The crate has two computational backends:
//!
//! * the **model case** on `C^n` with a quadratic fiber metric
//!   `φ₀ = Σ λᵢ|zᵢ|²`, handled by exact polynomial operator algebra
//!   ([`model`]) and a block Galerkin discretization of the `∂̄`-Laplacian
//!   ([`spectral`]);
//! * the **projective line**, where spaces of holomorphic sections (and, via
//!   Serre duality, harmonic `(0,1)`-forms) are orthonormalized against
//!   quadrature Gram matrices ([`manifold`]).
//!
//! [`geometry`] supplies fiber-metric potentials, curvature signatures and the
//! Morse density `π⁻ⁿ·1_{X(q)}·∏|λᵢ|`; [`scaling`] holds the `z ↦ z/√k`
//! rescaling diagnostics. The [`cli`] module drives batch runs from a JSON
//! configuration and writes CSV/JSON reports.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod manifold;
pub mod model;
pub mod numerics;
pub mod scaling;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
