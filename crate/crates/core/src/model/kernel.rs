use std::f64::consts::PI;

use num_complex::Complex64;

use super::form::MultiIndex;
use super::polynomial::Polynomial;
use super::ModelWeight;
use crate::error::{Error, Result};
use crate::numerics::{GridDomain, QuadratureGrid};

/// `∏|λᵢ|/πⁿ` when exactly `q` coefficients are negative, otherwise 0.
pub fn model_kernel_origin(w: &ModelWeight, q: usize) -> f64 {
    if w.index() == q {
        w.density()
    } else {
        0.0
    }
}

/// The extremal function at the origin. Computed through the Fock kernel of
/// `|λ|` rather than the product formula, so that agreement with
/// [`model_kernel_origin`] is a genuine check.
pub fn model_extremal_origin(w: &ModelWeight, q: usize) -> f64 {
    if w.index() != q {
        return 0.0;
    }
    let origin = vec![Complex64::new(0.0, 0.0); w.dim()];
    fock_kernel(&w.abs(), 0, &origin).expect("|λ| is positive")
}

/// Per-component extremal value together with the reindexing that lists the
/// negative axes first.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentExtremal {
    pub value: f64,
    /// `permutation[k]` is the original axis placed at position `k`.
    pub permutation: Vec<usize>,
}

/// `S_I(0)`: `∏|λᵢ|/πⁿ` when `I` is exactly the set of negative axes, else 0.
pub fn model_component_extremal(w: &ModelWeight, q: usize, index: MultiIndex) -> ComponentExtremal {
    let lambda = w.lambda();
    let mut permutation: Vec<usize> = (0..w.dim()).filter(|&i| lambda[i] < 0.0).collect();
    permutation.extend((0..w.dim()).filter(|&i| lambda[i] > 0.0));
    let value = if w.index() == q && index == w.negative_set() {
        w.density()
    } else {
        0.0
    };
    ComponentExtremal { value, permutation }
}

/// Degree-`D` truncation of the Fock-space kernel,
/// `Σ_{|a|≤D} |z^a|²·∏ λᵢ^{aᵢ+1}/(π aᵢ!)·e^{-φ₀(z)}`.
pub fn fock_kernel(w: &ModelWeight, degree: usize, z: &[Complex64]) -> Result<f64> {
    if let Some(bad) = w.lambda().iter().find(|l| **l <= 0.0) {
        return Err(Error::Domain(format!("Fock kernel needs λ > 0, got {bad}")));
    }
    if z.len() != w.dim() {
        return Err(Error::Domain(format!(
            "point has {} coordinates, weight has {}",
            z.len(),
            w.dim()
        )));
    }
    if z.iter().all(|zi| zi.norm_sqr() == 0.0) {
        // Only a = 0 survives; same rounding as the closed form.
        return Ok(w.density());
    }
    // terms[i][a] = (λᵢ|zᵢ|²)^a/a! · λᵢ/π
    let terms: Vec<Vec<f64>> = w
        .lambda()
        .iter()
        .zip(z)
        .map(|(l, zi)| {
            let x = l * zi.norm_sqr();
            let mut t = Vec::with_capacity(degree + 1);
            let mut v = l / PI;
            for a in 0..=degree {
                t.push(v);
                v *= x / (a as f64 + 1.0);
            }
            t
        })
        .collect();
    fn walk(terms: &[Vec<f64>], axis: usize, left: usize) -> f64 {
        if axis == terms.len() {
            return 1.0;
        }
        (0..=left)
            .map(|a| terms[axis][a] * walk(terms, axis + 1, left - a))
            .sum()
    }
    Ok(walk(&terms, 0, degree) * (-w.eval(z)).exp())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubmeanReport {
    /// `|f(0)|²·∫_{Δ_R} e^{-φ₀}`.
    pub lhs: f64,
    /// `∫_{Δ_R} |f|² e^{-φ₀}`.
    pub rhs: f64,
}

impl SubmeanReport {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + 1e-10
    }
}

/// Both sides of the submean inequality on the polydisc of radius `radius`,
/// integrated with the product of `grid` over every axis.
pub fn submean_check(
    f: &Polynomial,
    w: &ModelWeight,
    radius: f64,
    grid: &QuadratureGrid,
) -> Result<SubmeanReport> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!(
            "polydisc radius must be positive, got {radius}"
        )));
    }
    match grid.domain() {
        GridDomain::Disc { radius: r } if (r - radius).abs() <= 1e-12 * radius => {}
        other => {
            return Err(Error::Domain(format!(
                "submean check needs a disc grid of radius {radius}, got {other:?}"
            )))
        }
    }
    if let Some(bad) = w.lambda().iter().find(|l| **l <= 0.0) {
        return Err(Error::Domain(format!(
            "submean check needs λ > 0, got {bad}"
        )));
    }
    if !f.is_holomorphic() || f.vars_used() > w.dim() {
        return Err(Error::Domain(
            "submean check needs a holomorphic polynomial in the weight's variables".into(),
        ));
    }
    let n = w.dim();
    let f0 = f.eval(&vec![Complex64::new(0.0, 0.0); n]).norm_sqr();
    let nodes = grid.nodes();
    let weights = grid.weights();
    let m = nodes.len();
    let mut idx = vec![0usize; n];
    let mut point = vec![Complex64::new(0.0, 0.0); n];
    let (mut mass, mut rhs) = (0.0, 0.0);
    loop {
        let mut wt = 1.0;
        for (k, &i) in idx.iter().enumerate() {
            point[k] = nodes[i];
            wt *= weights[i];
        }
        let g = (-w.eval(&point)).exp() * wt;
        mass += g;
        rhs += f.eval(&point).norm_sqr() * g;
        // Odometer over the n-fold product, last axis fastest.
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(SubmeanReport {
                    lhs: f0 * mass,
                    rhs,
                });
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
        }
    }
}
