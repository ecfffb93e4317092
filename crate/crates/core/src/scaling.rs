//! Rescaling `z ↦ z/√k` around a point: scaled weights, their convergence to
//! the quadratic model, norm localization and the scaled Laplacian identity.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Preset;
use crate::model::{
    model_laplacian_apply, random_dyadic_weight, random_polynomial, GaussianPoly, ModelWeight,
    Monomial, MultiIndex, MultiIndexForm, Polynomial, SuiteOutcome,
};
use crate::numerics::disc_quadrature;

/// Radii (excluding the centre) and angles of the deviation grid.
const DEVIATION_RADII: usize = 64;
const DEVIATION_ANGLES: usize = 64;

/// A real polynomial weight `φ` vanishing to second order at 0, together with
/// a tensor power `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingContext {
    k: u64,
    phi: Polynomial,
    phi0: Polynomial,
    scaled: Polynomial,
}

impl ScalingContext {
    pub fn new(phi: Polynomial, k: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::Domain(format!("scaling needs k ≥ 2, got {k}")));
        }
        if phi.is_zero() {
            return Err(Error::Domain("scaling needs a nonzero weight".into()));
        }
        let tol = 1e-12 * phi.max_abs_coeff();
        if (&phi - &phi.conj()).max_abs_coeff() > tol {
            return Err(Error::Domain("weight polynomial is not real-valued".into()));
        }
        if let Some((m, _)) = phi.terms().find(|(m, _)| m.degree() < 2) {
            return Err(Error::Domain(format!(
                "weight must vanish to second order at the centre, found a degree-{} term",
                m.degree()
            )));
        }
        let kf = k as f64;
        let mut phi0 = Polynomial::zero();
        let mut scaled = Polynomial::zero();
        for (m, c) in phi.terms() {
            let deg = m.degree();
            if deg == 2 {
                phi0.add_term(*m, *c);
                scaled.add_term(*m, *c);
            } else {
                scaled.add_term(*m, c * kf.powf(1.0 - deg as f64 / 2.0));
            }
        }
        Ok(Self {
            k,
            phi,
            phi0,
            scaled,
        })
    }

    /// Context for the `gaussian` and `quartic` presets.
    pub fn from_preset(preset: &Preset, k: u64) -> Result<Self> {
        Self::new(preset_polynomial(preset)?, k)
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// `R_k = ln k/√k`.
    pub fn radius(&self) -> f64 {
        let k = self.k as f64;
        k.ln() / k.sqrt()
    }

    /// `√k·R_k = ln k`.
    pub fn scaled_radius(&self) -> f64 {
        (self.k as f64).ln()
    }

    pub fn weight(&self) -> &Polynomial {
        &self.phi
    }

    /// Degree-2 part `φ₀` of the weight.
    pub fn model(&self) -> &Polynomial {
        &self.phi0
    }

    /// `(kφ)^{(k)}(w) = k·φ(w/√k)` as a polynomial in `w`.
    pub fn scaled_polynomial(&self) -> &Polynomial {
        &self.scaled
    }

    pub fn dim(&self) -> usize {
        self.phi.vars_used()
    }
}

/// Polynomial form of the planar presets.
pub fn preset_polynomial(preset: &Preset) -> Result<Polynomial> {
    preset.validate()?;
    let r = |c: f64| Complex64::new(c, 0.0);
    match preset {
        Preset::Gaussian { lambda } => {
            let mut p = Polynomial::zero();
            for (i, l) in lambda.iter().enumerate() {
                p = &p + &Polynomial::z(i).mul_zbar(i).scale(r(*l));
            }
            Ok(p)
        }
        Preset::Quartic { lambda, c } => {
            let mut p = Polynomial::zero();
            p.add_term(Monomial::from_slices(&[1], &[1]), r(*lambda));
            p.add_term(Monomial::from_slices(&[2], &[2]), r(*c));
            Ok(p)
        }
        other => Err(Error::Domain(format!(
            "preset `{}` is not a polynomial weight",
            other.name()
        ))),
    }
}

/// `k·φ(z/√k)` for `|z| ≤ √k·R_k`.
pub fn scaled_weight(ctx: &ScalingContext, z: &[Complex64]) -> Result<f64> {
    let r = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if r > ctx.scaled_radius() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "|z| = {r} lies outside the scaled ball of radius {}",
            ctx.scaled_radius()
        )));
    }
    if z.len() < ctx.dim() {
        return Err(Error::Domain(format!(
            "point has {} coordinates, weight uses {}",
            z.len(),
            ctx.dim()
        )));
    }
    Ok(ctx.scaled.eval(z).re)
}

/// All real partial derivatives `∂_x^a ∂_y^b` with `a + b = order`.
fn real_partials(p: &Polynomial, order: usize) -> Vec<Polynomial> {
    let dx = |q: &Polynomial| &q.d_z(0) + &q.d_zbar(0);
    let dy = |q: &Polynomial| (&q.d_z(0) - &q.d_zbar(0)).scale(Complex64::new(0.0, 1.0));
    let mut level = vec![p.clone()];
    for _ in 0..order {
        // Mixed partials commute, so extending by ∂x only from the first
        // entry and ∂y from all keeps one polynomial per (a, b).
        let mut next = vec![dx(&level[0])];
        next.extend(level.iter().map(dy));
        level = next;
    }
    level
}

/// `sup |∂^α((kφ)^{(k)} − φ₀)|` over `|α| = order` and a polar grid of the
/// scaled ball, boundary circle included. One-variable weights only.
pub fn weight_deviation(ctx: &ScalingContext, order: usize) -> Result<f64> {
    if order > 2 {
        return Err(Error::Domain(format!(
            "derivative order must be ≤ 2, got {order}"
        )));
    }
    if ctx.dim() > 1 {
        return Err(Error::Domain(
            "weight deviation is implemented for one variable".into(),
        ));
    }
    let diff = &ctx.scaled - &ctx.phi0;
    if diff.is_zero() {
        return Ok(0.0);
    }
    let partials = real_partials(&diff, order);
    let r_max = ctx.scaled_radius();
    let mut sup: f64 = partials
        .iter()
        .map(|p| p.eval(&[Complex64::new(0.0, 0.0)]).norm())
        .fold(0.0, f64::max);
    for i in 1..=DEVIATION_RADII {
        let r = r_max * i as f64 / DEVIATION_RADII as f64;
        for l in 0..DEVIATION_ANGLES {
            let z = [Complex64::from_polar(
                r,
                2.0 * PI * l as f64 / DEVIATION_ANGLES as f64,
            )];
            for p in &partials {
                sup = sup.max(p.eval(&z).norm());
            }
        }
    }
    Ok(sup)
}

/// The integer `k` in `range` maximizing `weight_deviation(·, order)` for a
/// fixed weight.
pub fn deviation_turning_point(
    phi: &Polynomial,
    order: usize,
    range: std::ops::RangeInclusive<u64>,
) -> Result<u64> {
    let mut best = (0u64, f64::NEG_INFINITY);
    for k in range {
        let v = weight_deviation(&ScalingContext::new(phi.clone(), k)?, order)?;
        if v > best.1 {
            best = (k, v);
        }
    }
    Ok(best.0)
}

/// `‖α‖²_{kφ, |z|<R_k} / (k^{-1}·‖α(·/√k)‖²_{φ₀, |w|<ln k})` for a section
/// given in the original coordinate. One-variable weights only.
pub fn norm_localization_ratio(
    ctx: &ScalingContext,
    section: impl Fn(Complex64) -> Complex64,
    radial: usize,
    angular: usize,
) -> Result<f64> {
    if ctx.dim() > 1 {
        return Err(Error::Domain(
            "norm localization is implemented for one variable".into(),
        ));
    }
    let k = ctx.k as f64;
    let sk = k.sqrt();
    let inner = disc_quadrature(radial, angular, ctx.radius())?;
    let outer = disc_quadrature(radial, angular, ctx.scaled_radius())?;
    let num = inner.integrate(|z| section(z).norm_sqr() * (-k * ctx.phi.eval(&[z]).re).exp());
    let den = outer.integrate(|w| section(w / sk).norm_sqr() * (-ctx.phi0.eval(&[w]).re).exp()) / k;
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::DegenerateSection(format!("scaled norm is {den:e}")));
    }
    Ok(num / den)
}

fn dilate_form(alpha: &MultiIndexForm, t: f64) -> Result<MultiIndexForm> {
    let mut out = MultiIndexForm::new(alpha.n(), alpha.q())?;
    for (index, f) in alpha.components() {
        let exponent: Vec<f64> = f.exponent.iter().map(|c| c * t * t).collect();
        out.insert(*index, GaussianPoly::new(f.poly.dilate(t), &exponent))?;
    }
    Ok(out)
}

/// Largest coefficient of `Δ_{φ₀}(α^{(k)}) − k⁻¹(Δ_{kφ₀}α)^{(k)}`, where
/// `α^{(k)}(w) = α(w/√k)` componentwise.
pub fn scaled_laplacian_residual(w: &ModelWeight, alpha: &MultiIndexForm, k: u64) -> Result<f64> {
    if k < 1 {
        return Err(Error::Domain("k must be positive".into()));
    }
    let kf = k as f64;
    let t = 1.0 / kf.sqrt();
    let kw = ModelWeight::new(w.lambda().iter().map(|l| l * kf).collect())?
        .with_degree_budget(w.degree_budget());
    let lhs = model_laplacian_apply(w, &dilate_form(alpha, t)?)?;
    let rhs = dilate_form(&model_laplacian_apply(&kw, alpha)?, t)?;
    let mut worst: f64 = 0.0;
    for index in MultiIndex::all(alpha.n(), alpha.q()) {
        let a = lhs.get(index).cloned().unwrap_or_default();
        let b = rhs
            .get(index)
            .map(|f| f.scale_real(1.0 / kf))
            .unwrap_or_default();
        let diff = a.try_sub(&b)?;
        worst = worst.max(diff.poly.max_abs_coeff());
    }
    Ok(worst)
}

/// [`scaled_laplacian_residual`] on random polynomial forms of degree ≤ 5.
pub fn scaled_laplacian_suite(seed: u64, cases: usize) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.gen_range(1..=3);
        let w = random_dyadic_weight(&mut rng, n);
        let q = rng.gen_range(0..=n);
        let mut alpha = MultiIndexForm::new(n, q)?;
        for index in MultiIndex::all(n, q) {
            alpha.insert(
                index,
                GaussianPoly::polynomial(random_polynomial(&mut rng, n, 5, 6)),
            )?;
        }
        let k = rng.gen_range(2..=64);
        worst = worst.max(scaled_laplacian_residual(&w, &alpha, k)?);
    }
    Ok(SuiteOutcome {
        cases,
        max_residual: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quartic() -> Polynomial {
        preset_polynomial(&Preset::Quartic {
            lambda: 1.0,
            c: 1.0,
        })
        .unwrap()
    }

    fn quadratic(l: f64) -> Polynomial {
        preset_polynomial(&Preset::Gaussian { lambda: vec![l] }).unwrap()
    }

    #[test]
    fn context_radii() {
        let ctx = ScalingContext::new(quartic(), 100).unwrap();
        assert!((ctx.radius() - 100f64.ln() / 10.0).abs() < 1e-15);
        assert!((ctx.scaled_radius() - 100f64.ln()).abs() < 1e-15);
        assert!(ScalingContext::new(quartic(), 1).is_err());
    }

    #[test]
    fn rejects_non_normalized_weights() {
        let linear = &quadratic(1.0) + &Polynomial::z(0);
        assert!(ScalingContext::new(linear, 10).is_err());
        let complex = Polynomial::z(0).mul_z(0);
        assert!(ScalingContext::new(complex, 10).is_err());
        let constant = &quadratic(1.0) + &Polynomial::one();
        assert!(ScalingContext::new(constant, 10).is_err());
    }

    #[test]
    fn scaled_weight_examples() {
        let q = ScalingContext::new(quadratic(1.5), 37).unwrap();
        let z = [Complex64::new(0.8, -1.1)];
        assert!((scaled_weight(&q, &z).unwrap() - 1.5 * z[0].norm_sqr()).abs() < 1e-14);
        let ctx = ScalingContext::new(quartic(), 100).unwrap();
        assert!((scaled_weight(&ctx, &[Complex64::new(1.0, 0.0)]).unwrap() - 1.01).abs() < 1e-15);
        assert_eq!(
            scaled_weight(&ctx, &[Complex64::new(0.0, 0.0)]).unwrap(),
            0.0
        );
        assert!(scaled_weight(&ctx, &[Complex64::new(5.0, 0.0)]).is_err());
    }

    #[test]
    fn deviation_examples() {
        for k in [2, 10, 1000] {
            let ctx = ScalingContext::new(quadratic(2.0), k).unwrap();
            for order in 0..=2 {
                assert_eq!(weight_deviation(&ctx, order).unwrap(), 0.0);
            }
        }
        for k in [100u64, 10_000, 1_000_000] {
            let ctx = ScalingContext::new(quartic(), k).unwrap();
            let expected = (k as f64).ln().powi(4) / k as f64;
            let got = weight_deviation(&ctx, 0).unwrap();
            assert!((got / expected - 1.0).abs() < 1e-9);
        }
        let ctx = ScalingContext::new(quartic(), 1_000_000).unwrap();
        assert!((weight_deviation(&ctx, 0).unwrap() - 0.036431).abs() < 5e-7);
        assert!(weight_deviation(&ctx, 3).is_err());
    }

    #[test]
    fn derivative_deviation_matches_formula() {
        // D = |w|⁴/k: |∇D| = 4r³/k, and the largest second partial is 12r²/k.
        let ctx = ScalingContext::new(quartic(), 400).unwrap();
        let r = 400f64.ln();
        assert!(
            (weight_deviation(&ctx, 1).unwrap() / (4.0 * r.powi(3) / 400.0) - 1.0).abs() < 1e-9
        );
        assert!((weight_deviation(&ctx, 2).unwrap() / (12.0 * r * r / 400.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cubic_deviation_scaling() {
        // φ = |z|² + Re(z)|z|², a homogeneous cubic perturbation.
        let mut cubic = quadratic(1.0);
        cubic.add_term(Monomial::from_slices(&[2], &[1]), Complex64::new(0.5, 0.0));
        cubic.add_term(Monomial::from_slices(&[1], &[2]), Complex64::new(0.5, 0.0));
        let ratios: Vec<f64> = [100u64, 1000, 10_000]
            .iter()
            .map(|&k| {
                let kf = k as f64;
                weight_deviation(&ScalingContext::new(cubic.clone(), k).unwrap(), 0).unwrap()
                    / (kf.ln().powi(3) / kf.sqrt())
            })
            .collect();
        let (lo, hi) = ratios
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), &r| (a.min(r), b.max(r)));
        assert!(hi / lo - 1.0 < 0.05, "{ratios:?}");
    }

    #[test]
    fn quartic_turning_point() {
        let k = deviation_turning_point(&quartic(), 0, 3..=200).unwrap();
        assert!((54..=56).contains(&k), "{k}");
        let before = weight_deviation(&ScalingContext::new(quartic(), 30).unwrap(), 0).unwrap();
        let peak = weight_deviation(&ScalingContext::new(quartic(), k).unwrap(), 0).unwrap();
        let after = weight_deviation(&ScalingContext::new(quartic(), 200).unwrap(), 0).unwrap();
        assert!(before < peak && after < peak);
    }

    #[test]
    fn localization_examples() {
        for k in [4u64, 50, 900] {
            let ctx = ScalingContext::new(quadratic(1.0), k).unwrap();
            let r = norm_localization_ratio(&ctx, |_| Complex64::new(1.0, 0.0), 32, 8).unwrap();
            assert!((r - 1.0).abs() < 1e-12, "k = {k}: {r}");
        }
        let gaps: Vec<f64> = [16u64, 256]
            .iter()
            .map(|&k| {
                let ctx = ScalingContext::new(quartic(), k).unwrap();
                (norm_localization_ratio(&ctx, |_| Complex64::new(1.0, 0.0), 48, 8).unwrap() - 1.0)
                    .abs()
            })
            .collect();
        assert!(gaps[1] < gaps[0], "{gaps:?}");
        let ctx = ScalingContext::new(quartic(), 16).unwrap();
        assert!(matches!(
            norm_localization_ratio(&ctx, |_| Complex64::new(0.0, 0.0), 16, 8),
            Err(Error::DegenerateSection(_))
        ));
    }

    #[test]
    fn scaled_laplacian_examples() {
        let w = ModelWeight::new(vec![1.0]).unwrap();
        let holo = MultiIndexForm::function(1, GaussianPoly::polynomial(Polynomial::z(0))).unwrap();
        assert!(scaled_laplacian_residual(&w, &holo, 4).unwrap() <= 1e-12);
        let zbar =
            MultiIndexForm::function(1, GaussianPoly::polynomial(Polynomial::zbar(0))).unwrap();
        assert!(scaled_laplacian_residual(&w, &zbar, 9).unwrap() <= 1e-12);
        let zero = MultiIndexForm::new(1, 0).unwrap();
        assert_eq!(scaled_laplacian_residual(&w, &zero, 9).unwrap(), 0.0);
    }

    #[test]
    fn scaled_laplacian_suite_is_clean() {
        let out = scaled_laplacian_suite(7, 50).unwrap();
        assert_eq!(out.cases, 50);
        assert!(out.max_residual <= 1e-12, "{}", out.max_residual);
    }

    proptest! {
        #[test]
        fn scaled_radius_increases(k in 3u64..100_000) {
            let a = ScalingContext::new(quartic(), k).unwrap().scaled_radius();
            let b = ScalingContext::new(quartic(), k + 1).unwrap().scaled_radius();
            prop_assert!(b > a);
        }
    }
}
