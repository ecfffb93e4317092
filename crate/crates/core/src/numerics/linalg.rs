use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense conjugate-symmetric matrix.
///
/// Every constructor enforces `a[(i, j)] == conj(a[(j, i)])` bit-for-bit by
/// filling the lower triangle from the upper one.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    data: DMatrix<Complex64>,
}

impl HermitianMatrix {
    /// Builds from the upper triangle; `f` is only called for `i <= j`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = DMatrix::from_element(dim, dim, ZERO);
        for j in 0..dim {
            for i in 0..=j {
                let v = f(i, j);
                if i == j {
                    data[(i, i)] = Complex64::new(v.re, 0.0);
                } else {
                    data[(i, j)] = v;
                    data[(j, i)] = v.conj();
                }
            }
        }
        Self { data }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_real_diagonal(&vec![1.0; dim])
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    /// Accepts a general matrix whose deviation from hermitian symmetry is at
    /// most `tol` (absolute, entrywise), then symmetrizes it.
    pub fn try_from_matrix(m: DMatrix<Complex64>, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Domain(format!(
                "matrix is {}x{}, not square",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in i..n {
                let gap = (m[(i, j)] - m[(j, i)].conj()).norm();
                if gap > tol || !gap.is_finite() {
                    return Err(Error::Domain(format!(
                        "entry ({i}, {j}) breaks hermitian symmetry by {gap:e}"
                    )));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| {
            (m[(i, j)] + m[(j, i)].conj()) * 0.5
        }))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `M* A M`.
    pub fn congruence(&self, m: &DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != self.dim() {
            return Err(Error::Domain(format!(
                "congruence by a {}x{} matrix on dimension {}",
                m.nrows(),
                m.ncols(),
                self.dim()
            )));
        }
        let prod = m.adjoint() * &self.data * m;
        Ok(Self::from_fn(prod.nrows(), |i, j| prod[(i, j)]))
    }

    /// Quadratic form `v* A v`, real by symmetry.
    pub fn quadratic_form(&self, v: &DVector<Complex64>) -> f64 {
        (v.adjoint() * &self.data * v)[(0, 0)].re
    }
}

/// Lower-triangular `L` with `L L* = G`.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    l: DMatrix<Complex64>,
}

impl CholeskyFactor {
    pub fn lower(&self) -> &DMatrix<Complex64> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        &self.l * self.l.adjoint()
    }

    /// Solves `L x = b` by forward substitution.
    pub fn solve_lower(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        let n = self.dim();
        let mut x = b.clone();
        for i in 0..n {
            let mut acc = x[i];
            for k in 0..i {
                acc -= self.l[(i, k)] * x[k];
            }
            x[i] = acc / self.l[(i, i)];
        }
        x
    }

    /// Solves `L* x = b` by back substitution.
    pub fn solve_upper_adjoint(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        let n = self.dim();
        let mut x = b.clone();
        for i in (0..n).rev() {
            let mut acc = x[i];
            for k in i + 1..n {
                acc -= self.l[(k, i)].conj() * x[k];
            }
            x[i] = acc / self.l[(i, i)].re;
        }
        x
    }

    /// `L⁻¹ M`, column by column.
    pub fn solve_lower_matrix(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = m.clone();
        for c in 0..m.ncols() {
            let col = self.solve_lower(&m.column(c).into_owned());
            out.set_column(c, &col);
        }
        out
    }

    /// `L⁻*`, the matrix whose columns are an orthonormal basis for `G`.
    pub fn inverse_adjoint(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut out = DMatrix::from_element(n, n, ZERO);
        for c in 0..n {
            let mut e = DVector::from_element(n, ZERO);
            e[c] = Complex64::new(1.0, 0.0);
            out.set_column(c, &self.solve_upper_adjoint(&e));
        }
        out
    }
}

/// Cholesky factorization with a jitter floor of `1e-12 · trace / dim`.
///
/// A pivot at or below the floor is reported rather than regularized.
pub fn cholesky_factor(g: &HermitianMatrix) -> Result<CholeskyFactor> {
    let n = g.dim();
    let mut l = DMatrix::from_element(n, n, ZERO);
    if n == 0 {
        return Ok(CholeskyFactor { l });
    }
    let floor = 1e-12 * g.trace() / n as f64;
    for j in 0..n {
        let mut d = g.get(j, j).re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > floor) || !d.is_finite() {
            return Err(Error::RankDeficient {
                pivot: j,
                value: d,
                floor,
            });
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = g.get(i, j);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(CholeskyFactor { l })
}

/// Eigenpairs of the pencil `A v = ν G v`, ascending in `ν`.
#[derive(Clone, Debug)]
pub struct GenEigen {
    pub values: Vec<f64>,
    /// Columns are `G`-orthonormal eigenvectors, in the order of `values`.
    pub vectors: DMatrix<Complex64>,
}

impl GenEigen {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, j: usize) -> DVector<Complex64> {
        self.vectors.column(j).into_owned()
    }
}

/// Hermitian-definite generalized eigensolver via `C = L⁻¹ A L⁻*`.
///
/// Each eigenvector's phase is fixed so that its largest entry is real and
/// positive, which makes the output independent of the inner solver's phase
/// conventions.
pub fn sym_geneig(a: &HermitianMatrix, g: &HermitianMatrix) -> Result<GenEigen> {
    if a.dim() != g.dim() {
        return Err(Error::Domain(format!(
            "pencil dimensions differ: A is {}, G is {}",
            a.dim(),
            g.dim()
        )));
    }
    let n = a.dim();
    let chol = cholesky_factor(g)?;
    if n == 0 {
        return Ok(GenEigen {
            values: Vec::new(),
            vectors: DMatrix::from_element(0, 0, ZERO),
        });
    }
    let y = chol.solve_lower_matrix(a.as_matrix());
    let c = chol.solve_lower_matrix(&y.adjoint());
    let c = HermitianMatrix::from_fn(n, |i, j| (c[(i, j)] + c[(j, i)].conj()) * 0.5);
    let eig = SymmetricEigen::new(c.into_matrix());

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| {
        eig.eigenvalues[p]
            .total_cmp(&eig.eigenvalues[q])
            .then(p.cmp(&q))
    });

    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::from_element(n, n, ZERO);
    for (slot, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let mut v = chol.solve_upper_adjoint(&eig.eigenvectors.column(src).into_owned());
        let mut pivot = 0;
        for i in 1..n {
            if v[i].norm() > v[pivot].norm() * (1.0 + 1e-12) {
                pivot = i;
            }
        }
        let norm = v[pivot].norm();
        if norm > 0.0 {
            let phase = v[pivot].conj() / norm;
            v *= phase;
        }
        vectors.set_column(slot, &v);
    }
    Ok(GenEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gaussian_moment;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_abs(m: &DMatrix<Complex64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
        let m = random_matrix(rng, n);
        let p = &m * m.adjoint() + DMatrix::identity(n, n) * c(n as f64 * 0.1, 0.0);
        HermitianMatrix::from_fn(n, |i, j| p[(i, j)])
    }

    #[test]
    fn from_fn_is_conjugate_symmetric() {
        let h = HermitianMatrix::from_fn(3, |i, j| c(i as f64 + 1.0, j as f64 - 0.5));
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h.get(i, j), h.get(j, i).conj());
            }
        }
        assert_eq!(h.get(1, 1).im, 0.0);
    }

    #[test]
    fn try_from_matrix_rejects_asymmetry() {
        let m =
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 1.0), c(2.0, 1.0), c(1.0, 0.0)]);
        assert!(HermitianMatrix::try_from_matrix(m, 1e-12).is_err());
    }

    #[test]
    fn cholesky_identity() {
        let l = cholesky_factor(&HermitianMatrix::identity(4)).unwrap();
        assert_eq!(l.lower(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn cholesky_diagonal() {
        let l = cholesky_factor(&HermitianMatrix::from_real_diagonal(&[4.0, 9.0])).unwrap();
        assert_eq!(l.lower()[(0, 0)], c(2.0, 0.0));
        assert_eq!(l.lower()[(1, 1)], c(3.0, 0.0));
        assert_eq!(l.lower()[(1, 0)], c(0.0, 0.0));
    }

    #[test]
    fn cholesky_of_monomial_gram() {
        // Gram of {1, z} under e^{-|z|²}: moments π·0! and π·1!, off-diagonal 0.
        let g00 = gaussian_moment(&[0], &[1.0]).unwrap();
        let g11 = gaussian_moment(&[1], &[1.0]).unwrap();
        let l = cholesky_factor(&HermitianMatrix::from_real_diagonal(&[g00, g11])).unwrap();
        assert!((l.lower()[(0, 0)].re - PI.sqrt()).abs() < 1e-15);
        assert!((l.lower()[(1, 1)].re - PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cholesky_names_failing_pivot() {
        let g = HermitianMatrix::from_fn(3, |i, j| match (i, j) {
            (0, 0) | (1, 1) | (0, 1) => c(1.0, 0.0),
            (2, 2) => c(1.0, 0.0),
            _ => c(0.0, 0.0),
        });
        match cholesky_factor(&g) {
            Err(Error::RankDeficient { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn cholesky_rejects_tiny_pivot_relative_to_trace() {
        let g = HermitianMatrix::from_real_diagonal(&[1.0, 1e-14]);
        assert!(matches!(
            cholesky_factor(&g),
            Err(Error::RankDeficient { pivot: 1, .. })
        ));
    }

    #[test]
    fn triangular_solves_invert_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_spd(&mut rng, 6);
        let chol = cholesky_factor(&g).unwrap();
        let b = DVector::from_fn(6, |i, _| c(i as f64, 1.0 - i as f64));
        let x = chol.solve_lower(&b);
        assert!((chol.lower() * &x - &b).norm() < 1e-12);
        let y = chol.solve_upper_adjoint(&b);
        assert!((chol.lower().adjoint() * &y - &b).norm() < 1e-12);
        let w = chol.inverse_adjoint();
        let should_be_id = w.adjoint() * g.as_matrix() * &w;
        assert!(max_abs(&(should_be_id - DMatrix::identity(6, 6))) < 1e-12);
    }

    #[test]
    fn geneig_identity_pencil() {
        let id = HermitianMatrix::identity(3);
        let e = sym_geneig(&id, &id).unwrap();
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn geneig_sorts_ascending() {
        let a = HermitianMatrix::from_real_diagonal(&[3.0, 1.0]);
        let e = sym_geneig(&a, &HermitianMatrix::identity(2)).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        assert!((e.vectors[(1, 0)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn geneig_landau_pair() {
        // Basis {1, z̄}, λ = 1. Gram diag(π, π); ∂̄1 = 0 and ∂̄z̄ = 1, so the
        // energy form is diag(0, ‖1‖²) = diag(0, π).
        let g = HermitianMatrix::from_real_diagonal(&[PI, PI]);
        let a = HermitianMatrix::from_real_diagonal(&[0.0, PI]);
        let e = sym_geneig(&a, &g).unwrap();
        assert!(e.values[0].abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn geneig_propagates_rank_deficiency() {
        let g = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]);
        let a = HermitianMatrix::identity(2);
        assert!(matches!(
            sym_geneig(&a, &g),
            Err(Error::RankDeficient { pivot: 1, .. })
        ));
    }

    #[test]
    fn geneig_residual_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = random_spd(&mut rng, 12);
        let m = random_matrix(&mut rng, 12);
        let a = HermitianMatrix::from_fn(12, |i, j| m[(i, j)] + m[(j, i)].conj());
        let e = sym_geneig(&a, &g).unwrap();
        let an = a.norm();
        for j in 0..e.len() {
            let v = e.vector(j);
            let r = a.as_matrix() * &v - g.as_matrix() * &v * c(e.values[j], 0.0);
            assert!(r.norm() <= 1e-8 * an);
        }
        let vgv = e.vectors.adjoint() * g.as_matrix() * &e.vectors;
        assert!(max_abs(&(vgv - DMatrix::identity(12, 12))) < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn cholesky_roundtrip(seed in any::<u64>(), n in 1usize..=50) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_spd(&mut rng, n);
            let l = cholesky_factor(&g).unwrap();
            let err = max_abs(&(l.reconstruct() - g.as_matrix()));
            prop_assert!(err <= 1e-10 * max_abs(g.as_matrix()));
        }

        #[test]
        fn geneig_congruence_invariance(seed in any::<u64>(), n in 1usize..=10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_spd(&mut rng, n);
            let h = random_matrix(&mut rng, n);
            let a = HermitianMatrix::from_fn(n, |i, j| h[(i, j)] + h[(j, i)].conj());
            // Near-identity M keeps the congruence well conditioned.
            let m = DMatrix::identity(n, n) + random_matrix(&mut rng, n) * c(0.3 / n as f64, 0.0);
            let e1 = sym_geneig(&a, &g).unwrap();
            let e2 = sym_geneig(&a.congruence(&m).unwrap(), &g.congruence(&m).unwrap()).unwrap();
            let scale = e1.values.iter().fold(1.0f64, |s, v| s.max(v.abs()));
            for (x, y) in e1.values.iter().zip(&e2.values) {
                prop_assert!((x - y).abs() <= 1e-9 * scale);
            }
        }
    }
}
