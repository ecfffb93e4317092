//! The flat model `φ₀ = Σ λᵢ|zᵢ|²` on `Cⁿ`: closed-form kernels, the
//! `∂̄`-Laplacian on `(0,q)`-forms with Gaussian-polynomial coefficients, and
//! the reduction of harmonic forms to holomorphic data.

mod form;
mod kernel;
mod polynomial;
mod reduce;

pub use form::{
    commutator_residual, dbar_adjoint_apply, dbar_adjoint_form, dbar_adjoint_gaussian, dbar_form,
    dbar_gaussian, form_inner_product, inner_product, model_laplacian_apply, MultiIndex,
    MultiIndexForm,
};
pub use kernel::{
    fock_kernel, model_component_extremal, model_extremal_origin, model_kernel_origin,
    submean_check, ComponentExtremal, SubmeanReport,
};
pub use polynomial::{random_polynomial, GaussianPoly, Monomial, Polynomial, MAX_VARS};
pub use reduce::{harmonic_reduce, ReducedComponent, ReducedForm};

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default cap on the total degree of polynomials produced by the operators.
pub const DEFAULT_DEGREE_BUDGET: usize = 40;

/// Frozen curvature `λ₁..λₙ`, all nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelWeight {
    lambda: Vec<f64>,
    degree_budget: usize,
}

impl ModelWeight {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() || lambda.len() > MAX_VARS {
            return Err(Error::Domain(format!(
                "model weight needs 1 to {MAX_VARS} coefficients, got {}",
                lambda.len()
            )));
        }
        if let Some(bad) = lambda.iter().find(|l| **l == 0.0 || !l.is_finite()) {
            return Err(Error::Domain(format!(
                "model weight coefficients must be nonzero and finite, got {bad}"
            )));
        }
        Ok(Self {
            lambda,
            degree_budget: DEFAULT_DEGREE_BUDGET,
        })
    }

    pub fn with_degree_budget(mut self, budget: usize) -> Self {
        self.degree_budget = budget;
        self
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn degree_budget(&self) -> usize {
        self.degree_budget
    }

    /// Number of negative coefficients.
    pub fn index(&self) -> usize {
        self.lambda.iter().filter(|l| **l < 0.0).count()
    }

    /// Axes carrying negative coefficients.
    pub fn negative_set(&self) -> MultiIndex {
        MultiIndex::from_axes_unchecked(
            self.lambda
                .iter()
                .enumerate()
                .filter(|(_, l)| **l < 0.0)
                .map(|(i, _)| i),
        )
    }

    /// `∏|λᵢ|/πⁿ`.
    pub fn density(&self) -> f64 {
        self.lambda.iter().map(|l| l.abs()).product::<f64>() / PI.powi(self.dim() as i32)
    }

    /// The weight with every coefficient replaced by its absolute value.
    pub fn abs(&self) -> ModelWeight {
        Self {
            lambda: self.lambda.iter().map(|l| l.abs()).collect(),
            degree_budget: self.degree_budget,
        }
    }

    pub fn eval(&self, z: &[Complex64]) -> f64 {
        self.lambda
            .iter()
            .zip(z)
            .map(|(l, zi)| l * zi.norm_sqr())
            .sum()
    }

    pub(crate) fn check_axis(&self, i: usize) -> Result<()> {
        if i >= self.dim() {
            return Err(Error::Domain(format!(
                "axis {i} out of range for n = {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Outcome of a seeded randomized identity suite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteOutcome {
    pub cases: usize,
    pub max_residual: f64,
}

/// Random nonzero dyadic coefficients `±j/4`, `1 ≤ j ≤ 8`, which keep the
/// operator algebra free of rounding.
pub fn random_dyadic_weight<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ModelWeight {
    let lambda = (0..n)
        .map(|_| {
            let v = rng.gen_range(1..=8) as f64 / 4.0;
            if rng.gen_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect();
    ModelWeight::new(lambda).expect("dyadic coefficients are nonzero")
}

/// Largest coefficient of [`commutator_residual`] over all axis pairs of
/// random polynomials of degree ≤ 6.
pub fn commutator_suite(seed: u64, cases: usize) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.gen_range(1..=MAX_VARS);
        let w = random_dyadic_weight(&mut rng, n);
        let p = random_polynomial(&mut rng, n, 6, 8);
        for i in 0..n {
            for j in 0..n {
                worst = worst.max(commutator_residual(&w, i, j, &p)?.max_abs_coeff());
            }
        }
    }
    Ok(SuiteOutcome {
        cases,
        max_residual: worst,
    })
}
