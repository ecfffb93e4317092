//! Quadrature grids and dense hermitian linear algebra shared by every other
//! module.

mod linalg;
mod quadrature;

pub use linalg::{cholesky_factor, sym_geneig, CholeskyFactor, GenEigen, HermitianMatrix};
pub use quadrature::{
    disc_quadrature, disc_quadrature_panels, gauss_laguerre, gauss_legendre, plane_quadrature,
    Decay, GridDomain, QuadratureGrid,
};

use crate::error::{Error, Result};

/// `∫_{Cⁿ} ∏|zᵢ|^{2aᵢ} e^{-Σλᵢ|zᵢ|²} dA = ∏ π·aᵢ!/λᵢ^{aᵢ+1}`.
pub fn gaussian_moment(a: &[u32], lambda: &[f64]) -> Result<f64> {
    if a.len() != lambda.len() {
        return Err(Error::Domain(format!(
            "moment exponent has {} entries but weight has {}",
            a.len(),
            lambda.len()
        )));
    }
    let mut value = 1.0;
    for (&ai, &li) in a.iter().zip(lambda) {
        if !(li > 0.0) || !li.is_finite() {
            return Err(Error::Domain(format!(
                "gaussian moment needs λ > 0, got {li}"
            )));
        }
        value *= std::f64::consts::PI * factorial(ai) / li.powi(ai as i32 + 1);
    }
    Ok(value)
}

/// `n!` as a float; exact up to `22!`.
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `ln n!`, summed directly so it stays exact-ish well past `170!`.
pub fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Binomial coefficient as a float.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn moment_examples() {
        assert_relative_eq!(
            gaussian_moment(&[0], &[1.0]).unwrap(),
            PI,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            gaussian_moment(&[1], &[2.0]).unwrap(),
            PI / 4.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            gaussian_moment(&[2], &[1.0]).unwrap(),
            2.0 * PI,
            max_relative = 1e-15
        );
    }

    #[test]
    fn moment_rejects_nonpositive_lambda() {
        assert!(matches!(
            gaussian_moment(&[0], &[0.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            gaussian_moment(&[1, 0], &[1.0, -2.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn moment_against_polar_quadrature() {
        // ∫|z|^{2a} e^{-λ|z|²} on a Gauss–Laguerre grid is an independent route.
        let grid = plane_quadrature(24, 8, Decay::Gaussian { exponent: 1.5 }).unwrap();
        for a in 0..6u32 {
            let quad =
                grid.integrate(|z| z.norm_sqr().powi(a as i32) * (-1.5 * z.norm_sqr()).exp());
            assert_relative_eq!(
                quad,
                gaussian_moment(&[a], &[1.5]).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    proptest! {
        #[test]
        fn moment_recurrence(a in proptest::collection::vec(0u32..8, 1..4),
                             seed in proptest::collection::vec(0.2f64..5.0, 3),
                             axis in 0usize..3) {
            let n = a.len();
            let lambda = &seed[..n];
            let i = axis % n;
            let mut b = a.clone();
            b[i] += 1;
            let lhs = gaussian_moment(&b, lambda).unwrap();
            let rhs = (a[i] as f64 + 1.0) / lambda[i] * gaussian_moment(&a, lambda).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
        }
    }
}
