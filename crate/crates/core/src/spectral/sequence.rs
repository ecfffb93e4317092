use std::collections::BTreeMap;

use num_complex::Complex64;

use super::cutoff::CutoffFunction;
use crate::error::{Error, Result};
use crate::model::{
    dbar_adjoint_form, dbar_adjoint_gaussian, dbar_form, dbar_gaussian, form_inner_product,
    model_laplacian_apply, GaussianPoly, ModelWeight, MultiIndex, MultiIndexForm, Polynomial,
};
use crate::numerics::{disc_quadrature_panels, QuadratureGrid};

/// Normalized harmonic ground state
/// `β = (∏|λᵢ|/πⁿ)^{1/2} exp(Σ_{λᵢ<0} λᵢ|wᵢ|²) dw̄^N`, `N` the negative axes.
#[derive(Clone, Debug, PartialEq)]
pub struct Beta {
    weight: ModelWeight,
    form: MultiIndexForm,
    permutation: Vec<usize>,
}

/// Builds `β` for a weight with exactly `q` negative coefficients.
pub fn build_beta(w: &ModelWeight, q: usize) -> Result<Beta> {
    if w.index() != q {
        return Err(Error::SignatureMismatch {
            expected: q,
            found: w.index(),
        });
    }
    let n = w.dim();
    let exponent: Vec<f64> = w
        .lambda()
        .iter()
        .map(|l| if *l < 0.0 { *l } else { 0.0 })
        .collect();
    let c = Complex64::new(w.density().sqrt(), 0.0);
    let form = MultiIndexForm::single(
        n,
        w.negative_set(),
        GaussianPoly::new(Polynomial::constant(c), &exponent),
    )?;
    let lambda = w.lambda();
    let mut permutation: Vec<usize> = (0..n).filter(|&i| lambda[i] < 0.0).collect();
    permutation.extend((0..n).filter(|&i| lambda[i] > 0.0));
    Ok(Beta {
        weight: w.clone(),
        form,
        permutation,
    })
}

impl Beta {
    pub fn weight(&self) -> &ModelWeight {
        &self.weight
    }

    pub fn form(&self) -> &MultiIndexForm {
        &self.form
    }

    /// Axes listed negatives first.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// `|β(w)|²_{φ₀} = Σ_I |β_I(w)|² e^{-φ₀(w)}`.
    pub fn norm_sqr_at(&self, w: &[Complex64]) -> f64 {
        weighted_norm_sqr(&self.weight, &self.form, w)
    }

    /// `‖β‖²` in closed form.
    pub fn norm_sqr(&self) -> Result<f64> {
        Ok(form_inner_product(&self.weight, &self.form, &self.form)?.re)
    }
}

fn weighted_norm_sqr(w: &ModelWeight, form: &MultiIndexForm, z: &[Complex64]) -> f64 {
    let s: f64 = form.components().map(|(_, f)| f.eval(z).norm_sqr()).sum();
    s * (-w.eval(z)).exp()
}

/// First and second derivatives of a cutoff at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct CutoffJet {
    pub value: f64,
    /// `∂χ/∂wᵢ`.
    pub d: Vec<Complex64>,
    /// `∂χ/∂w̄ᵢ`.
    pub dbar: Vec<Complex64>,
    /// `∂²χ/∂wᵢ∂w̄ᵢ`.
    pub laplace: Vec<f64>,
}

impl CutoffJet {
    /// Jet of `w ↦ χ(|w|)`.
    pub fn radial(chi: &CutoffFunction, w: &[Complex64]) -> Self {
        let n = w.len();
        let r = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let (value, d1, d2) = chi.jet(r);
        if d1 == 0.0 && d2 == 0.0 {
            let zero = vec![Complex64::new(0.0, 0.0); n];
            return Self {
                value,
                d: zero.clone(),
                dbar: zero,
                laplace: vec![0.0; n],
            };
        }
        // χ(|w|) = g(|w|²): g' = χ'/(2r), g'' = (χ'' − χ'/r)/(4r²).
        let g1 = d1 / (2.0 * r);
        let g2 = (d2 - d1 / r) / (4.0 * r * r);
        Self {
            value,
            d: w.iter().map(|wi| wi.conj() * g1).collect(),
            dbar: w.iter().map(|wi| wi * g1).collect(),
            laplace: w.iter().map(|wi| g1 + g2 * wi.norm_sqr()).collect(),
        }
    }
}

/// Pointwise evaluator of `(∂̄ + ∂̄*)(χα)` and `Δ(χα)` by the Leibniz rule,
/// with the operators on `α` applied exactly.
struct ProductRule<'a> {
    w: &'a ModelWeight,
    components: Vec<(
        MultiIndex,
        GaussianPoly,
        Vec<GaussianPoly>,
        Vec<GaussianPoly>,
        GaussianPoly,
    )>,
}

impl<'a> ProductRule<'a> {
    fn new(w: &'a ModelWeight, alpha: &MultiIndexForm) -> Result<Self> {
        let lap = model_laplacian_apply(w, alpha)?;
        let components = alpha
            .components()
            .map(|(index, f)| {
                let dbar = (0..w.dim())
                    .map(|i| dbar_gaussian(w, i, f))
                    .collect::<Result<Vec<_>>>()?;
                let adj = (0..w.dim())
                    .map(|i| dbar_adjoint_gaussian(w, i, f))
                    .collect::<Result<Vec<_>>>()?;
                let l = lap.get(*index).cloned().unwrap_or_default();
                Ok((*index, f.clone(), dbar, adj, l))
            })
            .collect::<Result<_>>()?;
        Ok(Self { w, components })
    }

    /// `|(∂̄ + ∂̄*)(χα)(z)|²` without the weight factor.
    fn first_order_sqr(&self, jet: &CutoffJet, z: &[Complex64]) -> f64 {
        let mut up: BTreeMap<MultiIndex, Complex64> = BTreeMap::new();
        let mut down: BTreeMap<MultiIndex, Complex64> = BTreeMap::new();
        for (index, f, dbar, adj, _) in &self.components {
            let fz = f.eval(z);
            for i in 0..self.w.dim() {
                let sign = index.sign_before(i);
                if index.contains(i) {
                    let v = -jet.d[i] * fz + jet.value * adj[i].eval(z);
                    *down.entry(index.without(i)).or_default() += v * sign;
                } else {
                    let v = jet.dbar[i] * fz + jet.value * dbar[i].eval(z);
                    *up.entry(index.with(i)).or_default() += v * sign;
                }
            }
        }
        up.values().chain(down.values()).map(|v| v.norm_sqr()).sum()
    }

    /// `|Δ(χα)(z)|²` without the weight factor, using
    /// `Δ(χf) = −(Σᵢ∂ᵢ∂̄ᵢχ)f + Σᵢ[(∂̄ᵢχ)(∂̄ᵢ*f) − (∂ᵢχ)(∂̄ᵢf)] + χΔf` per component.
    fn laplacian_sqr(&self, jet: &CutoffJet, z: &[Complex64]) -> f64 {
        self.laplacian_components(jet, z)
            .iter()
            .map(|(_, v)| v.norm_sqr())
            .sum()
    }

    fn laplacian_components(
        &self,
        jet: &CutoffJet,
        z: &[Complex64],
    ) -> Vec<(MultiIndex, Complex64)> {
        self.components
            .iter()
            .map(|(index, f, dbar, adj, lap)| {
                let fz = f.eval(z);
                let mut v = jet.value * lap.eval(z) - fz * jet.laplace.iter().sum::<f64>();
                for i in 0..self.w.dim() {
                    v += jet.dbar[i] * adj[i].eval(z) - jet.d[i] * dbar[i].eval(z);
                }
                (*index, v)
            })
            .collect()
    }
}

/// Radial and angular node counts for the per-axis disc grids.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SequenceGrid {
    pub radial: usize,
    pub angular: usize,
}

impl SequenceGrid {
    /// Radial nodes needed to resolve the cutoff annulus at tensor power `k`.
    pub fn required_radial(k: u64) -> usize {
        (4.0 * (k as f64).ln()).ceil() as usize + 8
    }

    pub fn for_k(k: u64) -> Self {
        Self {
            radial: Self::required_radial(k),
            angular: 16,
        }
    }

    /// Disc grid of radius `radius` with a panel break at `radius/2`.
    fn disc(&self, radius: f64) -> Result<QuadratureGrid> {
        disc_quadrature_panels(
            &[0.5 * radius, radius],
            self.radial.div_ceil(2),
            self.angular,
        )
    }
}

/// `∫ f` over the polydisc `|wᵢ| < radius`, `n ≤ 2`.
fn integrate_polydisc(
    n: usize,
    grid: &QuadratureGrid,
    f: impl Fn(&[Complex64]) -> f64,
) -> Result<f64> {
    let (nodes, weights) = (grid.nodes(), grid.weights());
    match n {
        1 => Ok(nodes.iter().zip(weights).map(|(z, w)| w * f(&[*z])).sum()),
        2 => {
            let mut acc = 0.0;
            for (z1, w1) in nodes.iter().zip(weights) {
                for (z2, w2) in nodes.iter().zip(weights) {
                    acc += w1 * w2 * f(&[*z1, *z2]);
                }
            }
            Ok(acc)
        }
        _ => Err(Error::Capacity(format!(
            "cutoff quadrature supports n ≤ 2, got n = {n}"
        ))),
    }
}

/// Pointwise norms `|α_k(z)|²_{kφ₀}` of
/// `α_k(z) = k^{n/2} χ(|√k z|/ln k) β(√k z)`, where `profile` sets the shape
/// of `χ` and is rescaled by `ln k`.
pub fn build_alpha_k(
    beta: &Beta,
    k: u64,
    profile: &CutoffFunction,
    points: &[Vec<Complex64>],
) -> Result<Vec<f64>> {
    if k < 3 {
        return Err(Error::Domain(format!(
            "the cutoff sequence needs k ≥ 3, got {k}"
        )));
    }
    let n = beta.weight.dim();
    let kf = k as f64;
    let chi = CutoffFunction::new(profile.scale() * kf.ln())?;
    points
        .iter()
        .map(|z| {
            if z.len() != n {
                return Err(Error::Domain(format!(
                    "point has {} coordinates, weight has {n}",
                    z.len()
                )));
            }
            let w: Vec<Complex64> = z.iter().map(|zi| zi * kf.sqrt()).collect();
            let r = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let c = chi.value(r);
            // The weight kφ₀ at z equals φ₀ at √k z.
            Ok(kf.powi(n as i32) * c * c * beta.norm_sqr_at(&w))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceRow {
    pub k: u64,
    /// `|α_k(0)|²`.
    pub peak: f64,
    /// `kⁿ·∏|λᵢ|/πⁿ`.
    pub peak_expected: f64,
    /// `‖α_k‖²`.
    pub norm: f64,
    /// `‖k⁻¹Δα_k‖²`.
    pub laplacian_norm: f64,
    /// `⟨k⁻¹Δα_k, α_k⟩ = k⁻¹‖(∂̄+∂̄*)α_k‖²`.
    pub rayleigh: f64,
    /// `sup|χ'|²/(4(ln k)²)`, an upper bound for the Rayleigh quotient.
    pub delta: f64,
    /// `μ_k = √δ_k`.
    pub mu: f64,
}

impl SequenceRow {
    pub fn peak_relative_error(&self) -> f64 {
        (self.peak - self.peak_expected).abs() / self.peak_expected
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowEnergySequenceReport {
    pub lambda: Vec<f64>,
    pub rows: Vec<SequenceRow>,
}

impl LowEnergySequenceReport {
    pub fn rayleigh_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].rayleigh < w[0].rayleigh)
    }

    pub fn rayleigh_within_delta(&self) -> bool {
        self.rows.iter().all(|r| r.rayleigh <= r.delta)
    }

    /// `δ_k/μ_k = √δ_k`, the quantity whose decay the strong inequalities need.
    pub fn delta_over_mu(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.delta / r.mu).collect()
    }

    pub fn all_finite_nonnegative(&self) -> bool {
        self.rows.iter().all(|r| {
            [r.peak, r.norm, r.laplacian_norm, r.rayleigh, r.delta, r.mu]
                .iter()
                .all(|v| v.is_finite() && *v >= 0.0)
        })
    }
}

/// Measures the cutoff sequence `α_k` of the ground state `β` for each `k`.
///
/// Everything is computed in the rescaled coordinate `w = √k z`, where
/// `k⁻¹Δ_{kφ₀}` becomes `Δ_{φ₀}` and the cutoff has radius `ln k`.
pub fn verify_low_energy_sequence(
    w: &ModelWeight,
    k_list: &[u64],
    profile: &CutoffFunction,
    grid: SequenceGrid,
) -> Result<LowEnergySequenceReport> {
    if k_list.len() < 3 || k_list.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::Domain(format!(
            "k_list must hold at least 3 increasing entries, got {k_list:?}"
        )));
    }
    if k_list[0] < 3 {
        return Err(Error::Domain("k_list entries must be at least 3".into()));
    }
    let k_max = *k_list.last().unwrap();
    if grid.radial < SequenceGrid::required_radial(k_max) {
        return Err(Error::Capacity(format!(
            "{} radial nodes cannot resolve k = {k_max}; need {}",
            grid.radial,
            SequenceGrid::required_radial(k_max)
        )));
    }
    let beta = build_beta(w, w.index())?;
    let rule = ProductRule::new(w, &beta.form)?;
    let n = w.dim();
    let origin = vec![Complex64::new(0.0, 0.0); n];
    let mut rows = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let kf = k as f64;
        let chi = CutoffFunction::new(profile.scale() * kf.ln())?;
        let disc = grid.disc(chi.support())?;
        let peak = build_alpha_k(&beta, k, profile, std::slice::from_ref(&origin))?[0];
        let mut sums = [0.0; 3];
        for (slot, sum) in sums.iter_mut().enumerate() {
            *sum = integrate_polydisc(n, &disc, |z| {
                let jet = CutoffJet::radial(&chi, z);
                let weight = (-w.eval(z)).exp();
                let v = match slot {
                    0 => {
                        jet.value
                            * jet.value
                            * beta
                                .form
                                .components()
                                .map(|(_, f)| f.eval(z).norm_sqr())
                                .sum::<f64>()
                    }
                    1 => rule.laplacian_sqr(&jet, z),
                    _ => rule.first_order_sqr(&jet, z),
                };
                v * weight
            })?;
        }
        let delta = chi.sup_derivative().powi(2) / 4.0 * beta.norm_sqr()?;
        rows.push(SequenceRow {
            k,
            peak,
            peak_expected: kf.powi(n as i32) * w.density(),
            norm: sums[0],
            laplacian_norm: sums[1],
            rayleigh: sums[2],
            delta,
            mu: delta.sqrt(),
        });
    }
    Ok(LowEnergySequenceReport {
        lambda: w.lambda().to_vec(),
        rows,
    })
}

/// Both sides of the exhaustion pairing for a Gaussian-polynomial form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GromovPairing {
    /// `⟨Δβ, χ_R β⟩` by quadrature, `χ_R = χ(|z|/R)²`.
    pub pairing: f64,
    /// `‖∂̄β‖² + ‖∂̄*β‖²` in closed form.
    pub energy: f64,
    pub residual: f64,
}

/// `|⟨Δβ, χ_R β⟩ − ‖(∂̄+∂̄*)β‖²|`.
pub fn gromov_pairing_residual(
    w: &ModelWeight,
    beta: &MultiIndexForm,
    radius: f64,
    grid: SequenceGrid,
) -> Result<GromovPairing> {
    if beta.n() != w.dim() {
        return Err(Error::Domain(format!(
            "form lives on C^{} but weight on C^{}",
            beta.n(),
            w.dim()
        )));
    }
    let chi = CutoffFunction::new(radius)?;
    let lap = model_laplacian_apply(w, beta)?;
    let up = dbar_form(w, beta)?;
    let down = dbar_adjoint_form(w, beta)?;
    let energy = form_inner_product(w, &up, &up)?.re
        + if beta.q() > 0 {
            form_inner_product(w, &down, &down)?.re
        } else {
            0.0
        };
    if beta.is_zero() {
        return Ok(GromovPairing {
            pairing: 0.0,
            energy,
            residual: energy.abs(),
        });
    }
    let disc = grid.disc(radius)?;
    let pairing = integrate_polydisc(w.dim(), &disc, |z| {
        let r = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let c = chi.value(r);
        if c == 0.0 {
            return 0.0;
        }
        let s: Complex64 = beta
            .components()
            .map(|(index, f)| {
                lap.get(*index).map(|g| g.eval(z)).unwrap_or_default() * f.eval(z).conj()
            })
            .sum();
        c * c * s.re * (-w.eval(z)).exp()
    })?;
    Ok(GromovPairing {
        pairing,
        energy,
        residual: (pairing - energy).abs(),
    })
}
