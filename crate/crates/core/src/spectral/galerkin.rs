use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    dbar_adjoint_gaussian, dbar_gaussian, inner_product, GaussianPoly, ModelWeight, Monomial,
    MultiIndex, Polynomial, MAX_VARS,
};
use crate::numerics::{sym_geneig, GenEigen, HermitianMatrix};

/// Largest total degree accepted by [`galerkin_assemble`].
pub const MAX_GALERKIN_DEGREE: usize = 40;
/// Largest total number of trial functions accepted by [`galerkin_assemble`].
pub const MAX_BASIS: usize = 60_000;

const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-10;

/// Trial functions `z^a z̄^b·E dz̄^I` sharing a component `I` and a charge
/// `a − b`; the Laplacian preserves both.
#[derive(Clone, Debug)]
pub struct GalerkinBlock {
    pub index: MultiIndex,
    pub charge: [i32; MAX_VARS],
    pub monomials: Vec<Monomial>,
    /// Raw trial function `j` is divided by `scales[j]` so that the Gram
    /// diagonal is one.
    pub scales: Vec<f64>,
    pub gram: HermitianMatrix,
    pub stiffness: HermitianMatrix,
    pub eigen: GenEigen,
}

/// Galerkin discretization of the model `∂̄`-Laplacian on `(0,q)`-forms with
/// polynomial degree at most `D`.
///
/// Every trial function carries `E = exp(Σ_{λᵢ<0} λᵢ|zᵢ|²)`, so all integrals
/// are against the positive Gaussian `e^{-Σ|λᵢ||zᵢ|²}`. The trial space is
/// invariant under the Laplacian, hence the computed eigenvalues are exact
/// Landau levels.
#[derive(Clone, Debug)]
pub struct SpectralSlice {
    weight: ModelWeight,
    q: usize,
    degree: usize,
    exponent: [f64; MAX_VARS],
    blocks: Vec<GalerkinBlock>,
    neutral_only: bool,
}

fn enumerate_monomials(n: usize, degree: usize) -> Vec<Monomial> {
    fn walk(n: usize, axis: usize, left: usize, cur: &mut Monomial, out: &mut Vec<Monomial>) {
        if axis == n {
            out.push(*cur);
            return;
        }
        for a in 0..=left {
            for b in 0..=left - a {
                cur.z[axis] = a as u16;
                cur.zbar[axis] = b as u16;
                walk(n, axis + 1, left - a - b, cur, out);
            }
        }
        cur.z[axis] = 0;
        cur.zbar[axis] = 0;
    }
    let mut out = Vec::new();
    let mut cur = Monomial::ONE;
    walk(n, 0, degree, &mut cur, &mut out);
    out
}

fn basis_count(n: usize, degree: usize) -> usize {
    // Monomials of degree ≤ D in 2n real-indexed exponents: C(D + 2n, 2n).
    let mut c: u128 = 1;
    for i in 0..2 * n {
        c = c * (degree + 2 * n - i) as u128 / (i as u128 + 1);
    }
    c.min(usize::MAX as u128) as usize
}

/// Assembles and diagonalizes every `(I, charge)` block.
pub fn galerkin_assemble(w: &ModelWeight, q: usize, degree: usize) -> Result<SpectralSlice> {
    assemble(w, q, degree, false)
}

/// Only the charge-zero blocks, which carry every eigenform that is nonzero
/// at the origin. The result can be evaluated at `z = 0` only.
pub fn galerkin_assemble_neutral(
    w: &ModelWeight,
    q: usize,
    degree: usize,
) -> Result<SpectralSlice> {
    assemble(w, q, degree, true)
}

fn neutral_count(n: usize, degree: usize) -> usize {
    // a = b with |a| ≤ D/2: C(⌊D/2⌋ + n, n).
    let h = degree / 2;
    (1..=n).fold(1usize, |c, i| c * (h + i) / i)
}

fn assemble(w: &ModelWeight, q: usize, degree: usize, neutral_only: bool) -> Result<SpectralSlice> {
    let n = w.dim();
    if q > n {
        return Err(Error::Domain(format!(
            "form degree {q} exceeds dimension {n}"
        )));
    }
    if degree < 2 {
        return Err(Error::Domain(format!(
            "Galerkin degree must be at least 2, got {degree}"
        )));
    }
    if degree > MAX_GALERKIN_DEGREE {
        return Err(Error::Capacity(format!(
            "Galerkin degree {degree} exceeds {MAX_GALERKIN_DEGREE}"
        )));
    }
    let indices = MultiIndex::all(n, q);
    let per_index = if neutral_only {
        neutral_count(n, degree)
    } else {
        basis_count(n, degree)
    };
    let total = per_index.saturating_mul(indices.len());
    if total > MAX_BASIS {
        return Err(Error::Capacity(format!(
            "{total} trial functions exceed the limit of {MAX_BASIS}"
        )));
    }
    let w = w.clone().with_degree_budget(degree + 2);
    let mut exponent = [0.0; MAX_VARS];
    for (i, l) in w.lambda().iter().enumerate() {
        if *l < 0.0 {
            exponent[i] = *l;
        }
    }

    let mut grouped: BTreeMap<(MultiIndex, [i32; MAX_VARS]), Vec<Monomial>> = BTreeMap::new();
    for index in &indices {
        for m in enumerate_monomials(n, degree) {
            let mut charge = [0; MAX_VARS];
            for i in 0..n {
                charge[i] = m.z[i] as i32 - m.zbar[i] as i32;
            }
            if neutral_only && charge != [0; MAX_VARS] {
                continue;
            }
            grouped.entry((*index, charge)).or_default().push(m);
        }
    }

    let blocks = grouped
        .into_iter()
        .map(|((index, charge), monomials)| assemble_block(&w, &exponent, index, charge, monomials))
        .collect::<Result<Vec<_>>>()?;
    let slice = SpectralSlice {
        weight: w,
        q,
        degree,
        exponent,
        blocks,
        neutral_only,
    };
    if let Some(low) = slice.eigenvalues().first() {
        if *low < -NEGATIVE_EIGENVALUE_TOL {
            return Err(Error::Invariant(format!(
                "Galerkin eigenvalue {low:e} is negative"
            )));
        }
    }
    Ok(slice)
}

fn assemble_block(
    w: &ModelWeight,
    exponent: &[f64; MAX_VARS],
    index: MultiIndex,
    charge: [i32; MAX_VARS],
    monomials: Vec<Monomial>,
) -> Result<GalerkinBlock> {
    let n = w.dim();
    let one = Complex64::new(1.0, 0.0);
    let trial: Vec<GaussianPoly> = monomials
        .iter()
        .map(|m| GaussianPoly::new(Polynomial::term(*m, one), &exponent[..n]))
        .collect();
    // First-order pieces of the energy form: ∂̄ᵢ* on axes in I, ∂̄ᵢ elsewhere.
    let pieces: Vec<Vec<GaussianPoly>> = trial
        .iter()
        .map(|f| {
            (0..n)
                .map(|i| {
                    if index.contains(i) {
                        dbar_adjoint_gaussian(w, i, f)
                    } else {
                        dbar_gaussian(w, i, f)
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let m = trial.len();
    let mut raw_gram = vec![Complex64::new(0.0, 0.0); m * m];
    let mut raw_stiff = vec![Complex64::new(0.0, 0.0); m * m];
    for j in 0..m {
        for l in j..m {
            // Entry (j, l) pairs coefficient l against test function j.
            raw_gram[j * m + l] = inner_product(w, &trial[l], &trial[j])?;
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..n {
                s += inner_product(w, &pieces[l][i], &pieces[j][i])?;
            }
            raw_stiff[j * m + l] = s;
        }
    }
    let scales: Vec<f64> = (0..m).map(|j| raw_gram[j * m + j].re.sqrt()).collect();
    let gram = HermitianMatrix::from_fn(m, |j, l| raw_gram[j * m + l] / (scales[j] * scales[l]));
    let stiffness =
        HermitianMatrix::from_fn(m, |j, l| raw_stiff[j * m + l] / (scales[j] * scales[l]));
    let eigen = sym_geneig(&stiffness, &gram)?;
    Ok(GalerkinBlock {
        index,
        charge,
        monomials,
        scales,
        gram,
        stiffness,
        eigen,
    })
}

impl GalerkinBlock {
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Coefficient of `dz̄^I` of eigenform `j` at `z`, without the Gaussian
    /// factor `E`.
    fn eigenform_polynomial_at(&self, j: usize, values: &[Complex64]) -> Complex64 {
        let v = self.eigen.vectors.column(j);
        values.iter().zip(v.iter()).map(|(b, c)| b * c).sum()
    }
}

impl SpectralSlice {
    pub fn weight(&self) -> &ModelWeight {
        &self.weight
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_neutral_only(&self) -> bool {
        self.neutral_only
    }

    pub fn blocks(&self) -> &[GalerkinBlock] {
        &self.blocks
    }

    /// Total number of trial functions.
    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(GalerkinBlock::len).sum()
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .blocks
            .iter()
            .flat_map(|b| b.eigen.values.iter().copied())
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn count_below(&self, nu: f64) -> usize {
        self.blocks
            .iter()
            .map(|b| b.eigen.values.iter().filter(|v| **v <= nu).count())
            .sum()
    }

    /// `Σ_{νⱼ ≤ ν} |Ψⱼ(z)|² e^{-φ₀(z)}` over the Galerkin eigenforms.
    pub fn low_energy_bergman(&self, nu: f64, z: &[Complex64]) -> Result<f64> {
        if !(nu >= 0.0) {
            return Err(Error::Domain(format!(
                "energy cutoff must be nonnegative, got {nu}"
            )));
        }
        let n = self.weight.dim();
        if z.len() != n {
            return Err(Error::Domain(format!(
                "point has {} coordinates, weight has {n}",
                z.len()
            )));
        }
        if self.neutral_only && z.iter().any(|c| *c != Complex64::new(0.0, 0.0)) {
            return Err(Error::Domain(
                "a neutral slice can only be evaluated at the origin".into(),
            ));
        }
        let e: f64 = (0..n).map(|i| self.exponent[i] * z[i].norm_sqr()).sum();
        let gauss = (2.0 * e - self.weight.eval(z)).exp();
        let mut total = 0.0;
        for block in &self.blocks {
            let count = block.eigen.values.iter().take_while(|v| **v <= nu).count();
            if count == 0 {
                continue;
            }
            let values: Vec<Complex64> = block
                .monomials
                .iter()
                .zip(&block.scales)
                .map(|(m, s)| m.eval(z) / *s)
                .collect();
            for j in 0..count {
                total += block.eigenform_polynomial_at(j, &values).norm_sqr();
            }
        }
        Ok(total * gauss)
    }
}

/// Free-function form of [`SpectralSlice::low_energy_bergman`].
pub fn low_energy_bergman(slice: &SpectralSlice, nu: f64, z: &[Complex64]) -> Result<f64> {
    slice.low_energy_bergman(nu, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn weight(l: &[f64]) -> ModelWeight {
        ModelWeight::new(l.to_vec()).unwrap()
    }

    fn origin(n: usize) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); n]
    }

    #[test]
    fn monomial_enumeration_counts() {
        assert_eq!(enumerate_monomials(1, 6).len(), basis_count(1, 6));
        assert_eq!(enumerate_monomials(2, 5).len(), basis_count(2, 5));
        assert_eq!(basis_count(1, 6), 28);
    }

    #[test]
    fn landau_levels_for_functions() {
        let s = galerkin_assemble(&weight(&[1.0]), 0, 6).unwrap();
        let ev = s.eigenvalues();
        assert_eq!(ev.iter().filter(|v| v.abs() < 1e-8).count(), 7);
        assert!(ev[7] >= 0.95, "{}", ev[7]);
    }

    #[test]
    fn no_harmonic_forms_for_positive_q1() {
        let s = galerkin_assemble(&weight(&[1.0]), 1, 6).unwrap();
        assert!(s.eigenvalues()[0] >= 0.95);
    }

    #[test]
    fn negative_weight_has_ground_state() {
        let s = galerkin_assemble(&weight(&[-1.0]), 1, 6).unwrap();
        assert!(s.eigenvalues()[0].abs() < 1e-10);
    }

    #[test]
    fn low_energy_examples() {
        let s = galerkin_assemble(&weight(&[1.0]), 0, 16).unwrap();
        assert!((s.low_energy_bergman(0.5, &origin(1)).unwrap() - 1.0 / PI).abs() < 1e-6);
        let s = galerkin_assemble(&weight(&[1.0]), 1, 16).unwrap();
        assert_eq!(s.low_energy_bergman(0.5, &origin(1)).unwrap(), 0.0);
        let s = galerkin_assemble(&weight(&[-1.0]), 1, 16).unwrap();
        assert!((s.low_energy_bergman(0.5, &origin(1)).unwrap() - 1.0 / PI).abs() < 1e-4);
        assert!(s.low_energy_bergman(-0.1, &origin(1)).is_err());
    }

    #[test]
    fn mixed_signature_origin() {
        let w = weight(&[-2.0, 3.0]);
        let s = galerkin_assemble(&w, 1, 8).unwrap();
        assert!((s.low_energy_bergman(1.0, &origin(2)).unwrap() - 6.0 / (PI * PI)).abs() < 1e-10);
        let s0 = galerkin_assemble(&w, 0, 8).unwrap();
        assert!(s0.low_energy_bergman(1.0, &origin(2)).unwrap() <= 1e-8);
    }

    #[test]
    fn off_origin_fock_kernel() {
        // Degree-D truncation of the Fock kernel, evaluated away from 0.
        let w = weight(&[1.5]);
        let s = galerkin_assemble(&w, 0, 10).unwrap();
        let z = [Complex64::new(0.4, -0.3)];
        let expected = crate::model::fock_kernel(&w, 10, &z).unwrap();
        assert!((s.low_energy_bergman(0.75, &z).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn monotone_in_cutoff_and_degree() {
        let w = weight(&[-0.5, 1.25]);
        let z = [Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.4)];
        let s4 = galerkin_assemble(&w, 1, 4).unwrap();
        let s6 = galerkin_assemble(&w, 1, 6).unwrap();
        let mut prev = 0.0;
        for nu in [0.1, 0.3, 0.7, 1.1, 1.4, 2.1] {
            let v = s6.low_energy_bergman(nu, &z).unwrap();
            assert!(v >= prev * (1.0 - 1e-12));
            assert!(v >= s4.low_energy_bergman(nu, &z).unwrap() * (1.0 - 1e-12));
            prev = v;
        }
    }

    #[test]
    fn neutral_slice_agrees_at_origin() {
        let w = weight(&[-1.0, 2.0]);
        let full = galerkin_assemble(&w, 1, 8).unwrap();
        let neutral = galerkin_assemble_neutral(&w, 1, 8).unwrap();
        for nu in [0.5, 2.5, 4.5] {
            let a = full.low_energy_bergman(nu, &origin(2)).unwrap();
            let b = neutral.low_energy_bergman(nu, &origin(2)).unwrap();
            assert!((a - b).abs() <= 1e-13 * a.max(1.0), "{a} {b}");
        }
        assert!(neutral
            .low_energy_bergman(0.5, &[Complex64::new(0.1, 0.0), Complex64::new(0.0, 0.0)])
            .is_err());
        assert_eq!(neutral.dimension(), 2 * neutral_count(2, 8));
    }

    #[test]
    fn three_variables_at_origin() {
        let w = weight(&[-1.0, 2.0, 3.0]);
        let s = galerkin_assemble_neutral(&w, 1, 16).unwrap();
        assert!((s.low_energy_bergman(0.5, &origin(3)).unwrap() - 6.0 / PI.powi(3)).abs() < 1e-10);
    }

    #[test]
    fn capacity_and_domain_errors() {
        assert!(matches!(
            galerkin_assemble(&weight(&[1.0]), 0, 1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            galerkin_assemble(&weight(&[1.0]), 0, 41),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(
            galerkin_assemble(&weight(&[1.0, 1.0, 1.0]), 1, 16),
            Err(Error::Capacity(_))
        ));
        assert!(galerkin_assemble(&weight(&[1.0]), 2, 4).is_err());
    }
}
