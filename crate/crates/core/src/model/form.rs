use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use super::polynomial::{GaussianPoly, Polynomial, MAX_VARS};
use super::ModelWeight;
use crate::error::{Error, Result};
use crate::numerics::factorial;

/// Strictly increasing index set `I ⊂ {0, .., n-1}` stored as a bitmask.
///
/// Axes are 0-based; `Display` prints them 1-based, as in `dz̄₁ ∧ dz̄₂`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(u8);

impl MultiIndex {
    pub const EMPTY: MultiIndex = MultiIndex(0);

    /// Accepts axes in any order; duplicates and axes `≥ 3` are rejected.
    pub fn from_axes(axes: &[usize]) -> Result<Self> {
        let mut bits = 0u8;
        for &i in axes {
            if i >= MAX_VARS {
                return Err(Error::Domain(format!("axis {i} out of range")));
            }
            if bits & (1 << i) != 0 {
                return Err(Error::Domain(format!("axis {i} repeated in multi-index")));
            }
            bits |= 1 << i;
        }
        Ok(Self(bits))
    }

    pub(crate) fn from_axes_unchecked(axes: impl IntoIterator<Item = usize>) -> Self {
        Self(axes.into_iter().fold(0u8, |b, i| b | (1 << i)))
    }

    pub fn bits(&self) -> u8 {
        self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        i < 8 && self.0 & (1 << i) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn axes(&self) -> Vec<usize> {
        (0..8).filter(|&i| self.contains(i)).collect()
    }

    pub fn with(&self, i: usize) -> Self {
        Self(self.0 | (1 << i))
    }

    pub fn without(&self, i: usize) -> Self {
        Self(self.0 & !(1 << i))
    }

    /// Highest axis plus one.
    pub fn span(&self) -> usize {
        8 - self.0.leading_zeros() as usize
    }

    /// `(-1)^{#{j ∈ I : j < i}}`, the sign picked up when `dz̄ᵢ` moves past the
    /// smaller entries of `I`.
    pub fn sign_before(&self, i: usize) -> f64 {
        let below = (self.0 & ((1u8 << i) - 1)).count_ones();
        if below % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// All index sets of size `q` in `{0, .., n-1}`, in increasing order.
    pub fn all(n: usize, q: usize) -> Vec<MultiIndex> {
        (0u8..(1u8 << n))
            .filter(|b| b.count_ones() as usize == q)
            .map(MultiIndex)
            .collect()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.axes().iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// `Σ_I f_I dz̄^I` on `Cⁿ`, with Gaussian-polynomial coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiIndexForm {
    n: usize,
    q: usize,
    coeffs: BTreeMap<MultiIndex, GaussianPoly>,
}

impl MultiIndexForm {
    pub fn new(n: usize, q: usize) -> Result<Self> {
        if n == 0 || n > MAX_VARS || q > n {
            return Err(Error::Domain(format!(
                "no (0,{q})-forms on C^{n} in this model"
            )));
        }
        Ok(Self {
            n,
            q,
            coeffs: BTreeMap::new(),
        })
    }

    /// The single-component form `f dz̄^I`.
    pub fn single(n: usize, index: MultiIndex, f: GaussianPoly) -> Result<Self> {
        let mut form = Self::new(n, index.len())?;
        form.insert(index, f)?;
        Ok(form)
    }

    /// A function, viewed as a `(0,0)`-form.
    pub fn function(n: usize, f: GaussianPoly) -> Result<Self> {
        Self::single(n, MultiIndex::EMPTY, f)
    }

    /// Adds `f dz̄^I` to the form.
    pub fn insert(&mut self, index: MultiIndex, f: GaussianPoly) -> Result<()> {
        if index.len() != self.q || index.span() > self.n {
            return Err(Error::Domain(format!(
                "multi-index {index} does not fit a (0,{})-form on C^{}",
                self.q, self.n
            )));
        }
        if f.poly.vars_used() > self.n {
            return Err(Error::Domain(format!(
                "coefficient uses more than {} variables",
                self.n
            )));
        }
        let sum = match self.coeffs.get(&index) {
            Some(old) => old.try_add(&f)?,
            None => f,
        };
        if sum.is_zero() {
            self.coeffs.remove(&index);
        } else {
            self.coeffs.insert(index, sum);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn get(&self, index: MultiIndex) -> Option<&GaussianPoly> {
        self.coeffs.get(&index)
    }

    pub fn components(&self) -> impl Iterator<Item = (&MultiIndex, &GaussianPoly)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs
            .values()
            .map(|f| f.poly.max_abs_coeff())
            .fold(0.0, f64::max)
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .values()
            .map(|f| f.poly.degree())
            .max()
            .unwrap_or(0)
    }

    /// Pointwise value of the coefficient of `dz̄^I`.
    pub fn eval_component(&self, index: MultiIndex, z: &[Complex64]) -> Complex64 {
        self.coeffs
            .get(&index)
            .map_or(Complex64::new(0.0, 0.0), |f| f.eval(z))
    }

    /// `Σ_I |f_I(z)|²`, the Euclidean pointwise norm before the weight.
    pub fn pointwise_norm_sqr(&self, z: &[Complex64]) -> f64 {
        self.coeffs.values().map(|f| f.eval(z).norm_sqr()).sum()
    }
}

fn check_form(w: &ModelWeight, alpha: &MultiIndexForm) -> Result<()> {
    if alpha.n != w.dim() {
        return Err(Error::Domain(format!(
            "form lives on C^{} but weight on C^{}",
            alpha.n,
            w.dim()
        )));
    }
    Ok(())
}

fn budgeted(w: &ModelWeight, f: GaussianPoly) -> Result<GaussianPoly> {
    f.poly.check_degree(w.degree_budget())?;
    Ok(f)
}

/// `∂̄ᵢ f = ∂f/∂z̄ᵢ`.
pub fn dbar_gaussian(w: &ModelWeight, i: usize, f: &GaussianPoly) -> Result<GaussianPoly> {
    w.check_axis(i)?;
    budgeted(w, f.d_zbar(i))
}

/// `∂̄ᵢ* f = -∂f/∂zᵢ + λᵢ z̄ᵢ f`, the formal adjoint of `∂̄ᵢ` in `L²(e^{-φ₀})`.
pub fn dbar_adjoint_gaussian(w: &ModelWeight, i: usize, f: &GaussianPoly) -> Result<GaussianPoly> {
    w.check_axis(i)?;
    let out = f.mul_zbar(i).scale_real(w.lambda()[i]).try_sub(&f.d_z(i))?;
    budgeted(w, out)
}

/// [`dbar_adjoint_gaussian`] on a plain polynomial.
pub fn dbar_adjoint_apply(w: &ModelWeight, i: usize, p: &Polynomial) -> Result<Polynomial> {
    Ok(dbar_adjoint_gaussian(w, i, &GaussianPoly::polynomial(p.clone()))?.poly)
}

/// `(∂̄ᵢ∂̄ⱼ* − ∂̄ⱼ*∂̄ᵢ)p − δᵢⱼλᵢp`, identically zero.
pub fn commutator_residual(
    w: &ModelWeight,
    i: usize,
    j: usize,
    p: &Polynomial,
) -> Result<Polynomial> {
    let f = GaussianPoly::polynomial(p.clone());
    let a = dbar_gaussian(w, i, &dbar_adjoint_gaussian(w, j, &f)?)?;
    let b = dbar_adjoint_gaussian(w, j, &dbar_gaussian(w, i, &f)?)?;
    let mut r = &a.poly - &b.poly;
    if i == j {
        r = &r - &p.scale_real(w.lambda()[i]);
    }
    Ok(r)
}

/// `Δ(f dz̄^I) = (Σ_{i∈I} ∂̄ᵢ∂̄ᵢ* + Σ_{i∉I} ∂̄ᵢ*∂̄ᵢ) f dz̄^I`.
pub fn model_laplacian_apply(w: &ModelWeight, alpha: &MultiIndexForm) -> Result<MultiIndexForm> {
    check_form(w, alpha)?;
    let mut out = MultiIndexForm::new(alpha.n, alpha.q)?;
    for (&index, f) in alpha.components() {
        let mut acc = GaussianPoly {
            poly: Polynomial::zero(),
            exponent: f.exponent,
        };
        for i in 0..w.dim() {
            let term = if index.contains(i) {
                dbar_gaussian(w, i, &dbar_adjoint_gaussian(w, i, f)?)?
            } else {
                dbar_adjoint_gaussian(w, i, &dbar_gaussian(w, i, f)?)?
            };
            acc = acc.try_add(&term)?;
        }
        out.insert(index, acc)?;
    }
    Ok(out)
}

/// `∂̄(Σ f_I dz̄^I) = Σ_I Σ_{i∉I} ∂̄ᵢf_I dz̄ᵢ ∧ dz̄^I`. A top-degree form maps
/// to the zero form of its own degree.
pub fn dbar_form(w: &ModelWeight, alpha: &MultiIndexForm) -> Result<MultiIndexForm> {
    check_form(w, alpha)?;
    if alpha.q == alpha.n {
        return MultiIndexForm::new(alpha.n, alpha.q);
    }
    let mut out = MultiIndexForm::new(alpha.n, alpha.q + 1)?;
    for (&index, f) in alpha.components() {
        for i in (0..w.dim()).filter(|&i| !index.contains(i)) {
            let g = dbar_gaussian(w, i, f)?.scale_real(index.sign_before(i));
            out.insert(index.with(i), g)?;
        }
    }
    Ok(out)
}

/// `∂̄*(Σ f_I dz̄^I) = Σ_I Σ_{i∈I} ±∂̄ᵢ*f_I dz̄^{I∖i}`. The adjoint of a
/// function is reported as the zero `(0,0)`-form.
pub fn dbar_adjoint_form(w: &ModelWeight, alpha: &MultiIndexForm) -> Result<MultiIndexForm> {
    check_form(w, alpha)?;
    if alpha.q == 0 {
        return MultiIndexForm::new(alpha.n, 0);
    }
    let mut out = MultiIndexForm::new(alpha.n, alpha.q - 1)?;
    for (&index, f) in alpha.components() {
        for i in index.axes() {
            let g = dbar_adjoint_gaussian(w, i, f)?.scale_real(index.sign_before(i));
            out.insert(index.without(i), g)?;
        }
    }
    Ok(out)
}

/// `∫ f ḡ e^{-φ₀}` in closed form via Gaussian moments.
///
/// The combined exponent `λᵢ − cᵢ(f) − cᵢ(g)` must be positive on every axis.
pub fn inner_product(w: &ModelWeight, f: &GaussianPoly, g: &GaussianPoly) -> Result<Complex64> {
    let n = w.dim();
    if f.poly.vars_used() > n || g.poly.vars_used() > n {
        return Err(Error::Domain(format!(
            "coefficient uses more than {n} variables"
        )));
    }
    if f.is_zero() || g.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut mu = [0.0; MAX_VARS];
    for i in 0..n {
        mu[i] = w.lambda()[i] - f.exponent[i] - g.exponent[i];
        if !(mu[i] > 0.0) {
            return Err(Error::Domain(format!(
                "inner product diverges: effective exponent {} on axis {i} is not positive",
                mu[i]
            )));
        }
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (mf, cf) in f.poly.terms() {
        for (mg, cg) in g.poly.terms() {
            // f·ḡ contributes z^{a_f + b_g} z̄^{b_f + a_g}.
            let mut moment = 1.0;
            let mut matched = true;
            for i in 0..n {
                let a = mf.z[i] + mg.zbar[i];
                let b = mf.zbar[i] + mg.z[i];
                if a != b {
                    matched = false;
                    break;
                }
                moment *= std::f64::consts::PI * factorial(a as u32) / mu[i].powi(a as i32 + 1);
            }
            if matched {
                acc += cf * cg.conj() * moment;
            }
        }
    }
    Ok(acc)
}

/// `Σ_I ⟨f_I, g_I⟩`, with `|dz̄^I| = 1`.
pub fn form_inner_product(
    w: &ModelWeight,
    alpha: &MultiIndexForm,
    beta: &MultiIndexForm,
) -> Result<Complex64> {
    check_form(w, alpha)?;
    check_form(w, beta)?;
    if alpha.q != beta.q {
        return Err(Error::Domain(format!(
            "cannot pair a (0,{})-form with a (0,{})-form",
            alpha.q, beta.q
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (index, f) in alpha.components() {
        if let Some(g) = beta.get(*index) {
            acc += inner_product(w, f, g)?;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::polynomial::{random_polynomial, Monomial};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn weight(l: &[f64]) -> ModelWeight {
        ModelWeight::new(l.to_vec()).unwrap()
    }

    fn mono(z: &[u16], zb: &[u16], coef: f64) -> Polynomial {
        Polynomial::term(Monomial::from_slices(z, zb), c(coef))
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(
            dbar_adjoint_apply(&weight(&[2.0]), 0, &Polynomial::one()).unwrap(),
            mono(&[], &[1], 2.0)
        );
        let r = dbar_adjoint_apply(&weight(&[1.0]), 0, &Polynomial::z(0)).unwrap();
        assert_eq!(r, &mono(&[], &[], -1.0) + &mono(&[1], &[1], 1.0));
        assert!(dbar_adjoint_apply(&weight(&[1.0]), 0, &Polynomial::zero())
            .unwrap()
            .is_zero());
    }

    #[test]
    fn adjoint_overflow_is_capacity_error() {
        let w = weight(&[1.0]).with_degree_budget(3);
        let p = mono(&[2], &[1], 1.0);
        assert!(matches!(
            dbar_adjoint_apply(&w, 0, &p),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(
            dbar_adjoint_apply(&w, 1, &p),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn laplacian_examples() {
        let w1 = weight(&[1.0]);
        let holo = MultiIndexForm::function(1, GaussianPoly::polynomial(Polynomial::z(0))).unwrap();
        assert!(model_laplacian_apply(&w1, &holo).unwrap().is_zero());

        let zbar =
            MultiIndexForm::function(1, GaussianPoly::polynomial(Polynomial::zbar(0))).unwrap();
        assert_eq!(model_laplacian_apply(&w1, &zbar).unwrap(), zbar);

        let w2 = weight(&[2.0]);
        let i1 = MultiIndex::from_axes(&[0]).unwrap();
        let one =
            MultiIndexForm::single(1, i1, GaussianPoly::polynomial(Polynomial::one())).unwrap();
        let out = model_laplacian_apply(&w2, &one).unwrap();
        assert_eq!(out.get(i1).unwrap().poly, Polynomial::constant(c(2.0)));
    }

    #[test]
    fn commutator_examples() {
        let p = mono(&[1], &[2], 1.0);
        assert!(commutator_residual(&weight(&[3.0]), 0, 0, &p)
            .unwrap()
            .is_zero());
        let p = mono(&[1, 0], &[0, 1], 1.0);
        assert!(commutator_residual(&weight(&[1.0, 4.0]), 0, 1, &p)
            .unwrap()
            .is_zero());
        assert!(
            commutator_residual(&weight(&[1.0]), 0, 0, &Polynomial::zero())
                .unwrap()
                .is_zero()
        );
    }

    #[test]
    fn inner_product_of_monomials() {
        let w = weight(&[2.0]);
        let z = GaussianPoly::polynomial(Polynomial::z(0));
        let one = GaussianPoly::polynomial(Polynomial::one());
        assert!((inner_product(&w, &z, &z).unwrap().re - PI / 4.0).abs() < 1e-15);
        assert_eq!(inner_product(&w, &z, &one).unwrap(), c(0.0));
        // z z̄ pairs with 1.
        let zz = GaussianPoly::polynomial(mono(&[1], &[1], 1.0));
        assert!((inner_product(&w, &zz, &one).unwrap().re - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn inner_product_divergence_detected() {
        let w = weight(&[-1.0]);
        let one = GaussianPoly::polynomial(Polynomial::one());
        assert!(inner_product(&w, &one, &one).is_err());
        let g = GaussianPoly::new(Polynomial::one(), &[-1.0]);
        assert!((inner_product(&w, &g, &g).unwrap().re - PI).abs() < 1e-15);
    }

    #[test]
    fn multi_index_signs() {
        let i = MultiIndex::from_axes(&[0, 2]).unwrap();
        assert_eq!(i.sign_before(0), 1.0);
        assert_eq!(i.sign_before(1), -1.0);
        assert_eq!(i.sign_before(2), -1.0);
        assert_eq!(i.to_string(), "{1,3}");
        assert_eq!(MultiIndex::all(3, 2).len(), 3);
        assert!(MultiIndex::from_axes(&[1, 1]).is_err());
    }

    fn random_form(rng: &mut ChaCha8Rng, n: usize, q: usize, deg: usize) -> MultiIndexForm {
        let mut form = MultiIndexForm::new(n, q).unwrap();
        for index in MultiIndex::all(n, q) {
            if rng.gen_bool(0.8) {
                let p = random_polynomial(rng, n, deg, 5);
                form.insert(index, GaussianPoly::polynomial(p)).unwrap();
            }
        }
        form
    }

    fn random_lambda(rng: &mut ChaCha8Rng, n: usize, positive: bool) -> ModelWeight {
        // Dyadic values keep every coefficient exactly representable.
        let l = (0..n)
            .map(|_| {
                let v = rng.gen_range(1..=12) as f64 / 4.0;
                if positive || rng.gen_bool(0.5) {
                    v
                } else {
                    -v
                }
            })
            .collect();
        ModelWeight::new(l).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn commutators_vanish(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..=3);
            let w = random_lambda(&mut rng, n, false);
            let p = random_polynomial(&mut rng, n, 6, 6);
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            prop_assert!(commutator_residual(&w, i, j, &p).unwrap().is_zero());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn laplacian_is_self_adjoint_and_nonnegative(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..=3);
            let q = rng.gen_range(0..=n);
            let w = random_lambda(&mut rng, n, true);
            let a = random_form(&mut rng, n, q, 6);
            let b = random_form(&mut rng, n, q, 6);
            let la = model_laplacian_apply(&w, &a).unwrap();
            let lb = model_laplacian_apply(&w, &b).unwrap();
            let lhs = form_inner_product(&w, &la, &b).unwrap();
            let rhs = form_inner_product(&w, &a, &lb).unwrap();
            let scale = (form_inner_product(&w, &la, &la).unwrap().re
                * form_inner_product(&w, &b, &b).unwrap().re).sqrt().max(1e-300);
            prop_assert!((lhs - rhs).norm() <= 1e-10 * scale, "{} vs {}", lhs, rhs);
            let energy = form_inner_product(&w, &la, &a).unwrap();
            let norm = form_inner_product(&w, &a, &a).unwrap().re;
            prop_assert!(energy.re >= -1e-10 * norm.max(1e-300));
        }

        #[test]
        fn diagonal_formula_matches_dbar_dbar_star(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..=3);
            let q = rng.gen_range(0..=n);
            let w = random_lambda(&mut rng, n, false);
            let a = random_form(&mut rng, n, q, 5);
            let lap = model_laplacian_apply(&w, &a).unwrap();
            let mut full = MultiIndexForm::new(n, q).unwrap();
            if q > 0 {
                let t = dbar_form(&w, &dbar_adjoint_form(&w, &a).unwrap()).unwrap();
                for (i, f) in t.components() {
                    full.insert(*i, f.clone()).unwrap();
                }
            }
            if q < n {
                let t = dbar_adjoint_form(&w, &dbar_form(&w, &a).unwrap()).unwrap();
                for (i, f) in t.components() {
                    full.insert(*i, f.clone()).unwrap();
                }
            }
            for index in MultiIndex::all(n, q) {
                let x = lap.get(index).map(|f| f.poly.clone()).unwrap_or_default();
                let y = full.get(index).map(|f| f.poly.clone()).unwrap_or_default();
                prop_assert!((&x - &y).is_zero(), "component {}", index);
            }
        }
    }
}
