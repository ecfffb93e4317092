use num_complex::Complex64;

use super::form::{dbar_adjoint_gaussian, dbar_gaussian, MultiIndex, MultiIndexForm};
use super::polynomial::{Monomial, Polynomial};
use super::ModelWeight;
use crate::error::{Error, Result};

const HARMONIC_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-10;

/// Holomorphic data of one component `f_I dz̄^I` of a harmonic form.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedComponent {
    pub index: MultiIndex,
    /// `F_I` as a holomorphic polynomial in `ζ`, where `ζᵢ = z̄ᵢ` for `i ∈ I`
    /// and `ζᵢ = zᵢ` otherwise.
    pub f: Polynomial,
    /// Coefficients of `Φ_I = Σ_{i∈I}(−λᵢ)|zᵢ|² + Σ_{i∉I} λᵢ|zᵢ|²`.
    pub phi: Vec<f64>,
}

impl ReducedComponent {
    pub fn zeta(&self, z: &[Complex64]) -> Vec<Complex64> {
        z.iter()
            .enumerate()
            .map(|(i, zi)| {
                if self.index.contains(i) {
                    zi.conj()
                } else {
                    *zi
                }
            })
            .collect()
    }

    /// `|F_I(ζ)|² e^{-Φ_I(z)}`.
    pub fn weighted_norm_sqr(&self, z: &[Complex64]) -> f64 {
        let phi: f64 = self
            .phi
            .iter()
            .zip(z)
            .map(|(c, zi)| c * zi.norm_sqr())
            .sum();
        self.f.eval(&self.zeta(z)).norm_sqr() * (-phi).exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedForm {
    pub components: Vec<ReducedComponent>,
    /// Largest relative gap in `|f_I|²e^{-φ₀} = |F_I|²e^{-Φ_I}` on the test points.
    pub norm_identity_residual: f64,
}

/// Rewrites each component `f_I = p_I·e^{Σ_{i∈I} λᵢ|zᵢ|²}` of a form solving
/// `∂̄ᵢ*f_I = 0 (i ∈ I)`, `∂̄ᵢf_I = 0 (i ∉ I)` as a holomorphic `F_I(ζ)`.
///
/// The first-order residuals are exact polynomials and are measured by their
/// largest coefficient.
pub fn harmonic_reduce(w: &ModelWeight, alpha: &MultiIndexForm) -> Result<ReducedForm> {
    if alpha.n() != w.dim() {
        return Err(Error::Domain(format!(
            "form lives on C^{} but weight on C^{}",
            alpha.n(),
            w.dim()
        )));
    }
    let n = w.dim();
    let lambda = w.lambda();
    let mut components = Vec::new();
    for (&index, f) in alpha.components() {
        for i in 0..n {
            let expected = if index.contains(i) { lambda[i] } else { 0.0 };
            if f.exponent[i] != expected {
                return Err(Error::Domain(format!(
                    "component {index} has Gaussian exponent {} on axis {}, expected {expected}",
                    f.exponent[i],
                    i + 1
                )));
            }
        }
        let mut residual: f64 = 0.0;
        for i in 0..n {
            let r = if index.contains(i) {
                dbar_adjoint_gaussian(w, i, f)?
            } else {
                dbar_gaussian(w, i, f)?
            };
            residual = residual.max(r.poly.max_abs_coeff());
        }
        if residual > HARMONIC_TOL {
            return Err(Error::NotHarmonic {
                residual,
                tolerance: HARMONIC_TOL,
            });
        }
        // Residual zero means p is antiholomorphic in the I-variables and
        // holomorphic in the rest, so ζ-exponents are read off directly.
        let mut reduced = Polynomial::zero();
        for (m, c) in f.poly.terms() {
            let mut zeta = Monomial::ONE;
            for i in 0..n {
                zeta.z[i] = if index.contains(i) { m.zbar[i] } else { m.z[i] };
            }
            reduced.add_term(zeta, *c);
        }
        let phi = (0..n)
            .map(|i| {
                if index.contains(i) {
                    -lambda[i]
                } else {
                    lambda[i]
                }
            })
            .collect();
        components.push(ReducedComponent {
            index,
            f: reduced,
            phi,
        });
    }

    let mut worst: f64 = 0.0;
    for z in test_points(n) {
        let base = (-w.eval(&z)).exp();
        for comp in &components {
            let lhs = alpha.eval_component(comp.index, &z).norm_sqr() * base;
            let rhs = comp.weighted_norm_sqr(&z);
            let scale = lhs.max(rhs);
            if scale > 0.0 {
                worst = worst.max((lhs - rhs).abs() / scale);
            }
        }
    }
    if worst > NORM_TOL {
        return Err(Error::Invariant(format!(
            "reduced norm identity off by {worst:e}"
        )));
    }
    Ok(ReducedForm {
        components,
        norm_identity_residual: worst,
    })
}

fn test_points(n: usize) -> Vec<Vec<Complex64>> {
    let mut axis = vec![Complex64::new(0.0, 0.0)];
    for r in [0.35, 0.8, 1.3] {
        for t in [0.0, 2.1, -0.9] {
            axis.push(Complex64::from_polar(r, t));
        }
    }
    let mut points = vec![Vec::new()];
    for _ in 0..n {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |a| {
                    let mut q = p.clone();
                    q.push(*a);
                    q
                })
            })
            .collect();
    }
    points
}
