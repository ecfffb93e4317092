//! Fiber-metric potentials, curvature signatures and the Morse density.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{sym_geneig, HermitianMatrix, QuadratureGrid};

/// A local potential `φ` with `|s|² = e^{-φ}` for a trivializing section.
pub trait Weight: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, z: &[Complex64]) -> f64;

    /// `φ_{zᵢ z̄ⱼ}(z)` in closed form, when known.
    fn analytic_hessian(&self, _z: &[Complex64]) -> Option<HermitianMatrix> {
        None
    }
}

/// How `complex_hessian` obtains second derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

/// Complex Hessian `φ_{zᵢ z̄ⱼ}` of a weight at `z`.
pub fn complex_hessian(
    weight: &dyn Weight,
    z: &[Complex64],
    mode: DerivativeMode,
) -> Result<HermitianMatrix> {
    if z.len() != weight.dim() {
        return Err(Error::Domain(format!(
            "point has {} coordinates, weight has {}",
            z.len(),
            weight.dim()
        )));
    }
    match mode {
        DerivativeMode::Analytic => weight
            .analytic_hessian(z)
            .ok_or_else(|| Error::NumericalDerivative("weight has no analytic Hessian".into())),
        DerivativeMode::FiniteDifference => finite_difference_hessian(weight, z),
    }
}

/// Central differences in the `2n` real coordinates with step
/// `h = 1e-4·(1 + |z|)`, recombined into the complex Hessian.
pub fn finite_difference_hessian(weight: &dyn Weight, z: &[Complex64]) -> Result<HermitianMatrix> {
    let n = z.len();
    let radius = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let h = 1e-4 * (1.0 + radius);
    if !h.is_finite() || radius + h == radius {
        return Err(Error::NumericalDerivative(format!(
            "step {h:e} underflows at |z| = {radius:e}"
        )));
    }
    let xi: Vec<f64> = z.iter().flat_map(|c| [c.re, c.im]).collect();
    let f = |v: &[f64]| {
        let pt: Vec<Complex64> = v.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
        weight.eval(&pt)
    };
    let m = 2 * n;
    let f0 = f(&xi);
    let mut real = vec![vec![0.0; m]; m];
    let mut probe = xi.clone();
    for a in 0..m {
        probe[a] = xi[a] + h;
        let fp = f(&probe);
        probe[a] = xi[a] - h;
        let fm = f(&probe);
        probe[a] = xi[a];
        real[a][a] = (fp - 2.0 * f0 + fm) / (h * h);
        for b in a + 1..m {
            let mut corner = |sa: f64, sb: f64| {
                probe[a] = xi[a] + sa * h;
                probe[b] = xi[b] + sb * h;
                let v = f(&probe);
                probe[a] = xi[a];
                probe[b] = xi[b];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * h * h);
            real[a][b] = v;
            real[b][a] = v;
        }
    }
    if real.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NumericalDerivative(format!(
            "non-finite difference quotient near {z:?}"
        )));
    }
    Ok(HermitianMatrix::from_fn(n, |i, j| {
        let (xi_, yi) = (2 * i, 2 * i + 1);
        let (xj, yj) = (2 * j, 2 * j + 1);
        Complex64::new(
            0.25 * (real[xi_][xj] + real[yi][yj]),
            0.25 * (real[xi_][yj] - real[yi][xj]),
        )
    }))
}

/// Weight given by closures.
#[derive(Clone)]
pub struct FnWeight {
    dim: usize,
    value: Arc<dyn Fn(&[Complex64]) -> f64 + Send + Sync>,
    hessian: Option<Arc<dyn Fn(&[Complex64]) -> HermitianMatrix + Send + Sync>>,
}

impl FnWeight {
    pub fn new(dim: usize, value: impl Fn(&[Complex64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            hessian: None,
        }
    }

    pub fn with_hessian(
        mut self,
        hessian: impl Fn(&[Complex64]) -> HermitianMatrix + Send + Sync + 'static,
    ) -> Self {
        self.hessian = Some(Arc::new(hessian));
        self
    }
}

impl fmt::Debug for FnWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnWeight")
            .field("dim", &self.dim)
            .field("analytic_hessian", &self.hessian.is_some())
            .finish()
    }
}

impl Weight for FnWeight {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, z: &[Complex64]) -> f64 {
        (self.value)(z)
    }

    fn analytic_hessian(&self, z: &[Complex64]) -> Option<HermitianMatrix> {
        self.hessian.as_ref().map(|h| h(z))
    }
}

/// Named weight families, each with a closed-form Hessian.
#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    /// `d·log(1+|z|²)` on the projective line, `d ≥ 1`.
    FubiniStudy { d: i32 },
    /// `d·log(1+|z|²)` with `d ≤ -1`.
    AntiFubiniStudy { d: i32 },
    /// `d·log(1+|z|²) + s·t(1-t)` with `t = |z|²/(1+|z|²)`.
    Perturbed { d: i32, s: f64 },
    /// `Σ λᵢ|zᵢ|²` on `Cⁿ`.
    Gaussian { lambda: Vec<f64> },
    /// `λ|z|² + c|z|⁴` on `C`.
    Quartic { lambda: f64, c: f64 },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::FubiniStudy { .. } => "fubini-study",
            Preset::AntiFubiniStudy { .. } => "anti-fubini-study",
            Preset::Perturbed { .. } => "perturbed",
            Preset::Gaussian { .. } => "gaussian",
            Preset::Quartic { .. } => "quartic",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Domain(m));
        match self {
            Preset::FubiniStudy { d } if *d < 1 => {
                bad(format!("fubini-study needs d ≥ 1, got {d}"))
            }
            Preset::AntiFubiniStudy { d } if *d > -1 => {
                bad(format!("anti-fubini-study needs d ≤ -1, got {d}"))
            }
            Preset::Perturbed { d, s } if *d == 0 || !s.is_finite() => bad(format!(
                "perturbed needs d ≠ 0 and finite s, got d = {d}, s = {s}"
            )),
            Preset::Gaussian { lambda } if lambda.is_empty() || lambda.len() > 3 => bad(format!(
                "gaussian needs 1 to 3 coefficients, got {}",
                lambda.len()
            )),
            Preset::Gaussian { lambda } if lambda.iter().any(|l| !(l.is_finite() && *l > 0.0)) => {
                bad(format!(
                    "gaussian coefficients must be positive, got {lambda:?}"
                ))
            }
            Preset::Quartic { lambda, c }
                if !(lambda.is_finite() && *lambda > 0.0 && c.is_finite()) =>
            {
                bad(format!(
                    "quartic needs λ > 0 and finite c, got λ = {lambda}, c = {c}"
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn degree(&self) -> i32 {
        match self {
            Preset::FubiniStudy { d }
            | Preset::AntiFubiniStudy { d }
            | Preset::Perturbed { d, .. } => *d,
            Preset::Gaussian { .. } | Preset::Quartic { .. } => 0,
        }
    }

    pub fn is_projective(&self) -> bool {
        matches!(
            self,
            Preset::FubiniStudy { .. } | Preset::AntiFubiniStudy { .. } | Preset::Perturbed { .. }
        )
    }

    pub fn chart(&self, mode: DerivativeMode) -> Result<ManifoldChart> {
        self.validate()?;
        let weight: Arc<dyn Weight> = Arc::new(PresetWeight(self.clone()));
        if self.is_projective() {
            // Each projective preset is invariant under z ↦ 1/w once the
            // transition term d·log|w|² is added, so the same potential
            // serves both charts.
            Ok(ManifoldChart::projective_line(
                weight.clone(),
                weight,
                self.degree(),
                mode,
            ))
        } else {
            let n = weight.dim();
            Ok(ManifoldChart::plane(weight, BaseMetric::Euclidean(n), mode))
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::FubiniStudy { d } | Preset::AntiFubiniStudy { d } => {
                write!(f, "{}({d})", self.name())
            }
            Preset::Perturbed { d, s } => write!(f, "perturbed({d}, {s})"),
            Preset::Gaussian { lambda } => {
                let parts: Vec<String> = lambda.iter().map(|l| l.to_string()).collect();
                write!(f, "gaussian({})", parts.join(", "))
            }
            Preset::Quartic { lambda, c } => write!(f, "quartic({lambda}, {c})"),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    /// Parses `name(arg, ...)`, for example `perturbed(1, 3)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let close = s
                    .rfind(')')
                    .filter(|&c| c > open && s[c + 1..].trim().is_empty())
                    .ok_or_else(|| {
                        Error::Domain(format!("unbalanced parentheses in preset `{s}`"))
                    })?;
                (s[..open].trim(), &s[open + 1..close])
            }
            None => (s, ""),
        };
        let nums: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Domain(format!("preset argument `{a}`: {e}")))
                })
                .collect::<Result<_>>()?
        };
        let int = |v: f64| -> Result<i32> {
            if v.fract() == 0.0 && v.abs() < 1e6 {
                Ok(v as i32)
            } else {
                Err(Error::Domain(format!(
                    "bundle degree must be an integer, got {v}"
                )))
            }
        };
        let arity = |want: usize| -> Result<()> {
            if nums.len() == want {
                Ok(())
            } else {
                Err(Error::Domain(format!(
                    "preset `{name}` takes {want} arguments, got {}",
                    nums.len()
                )))
            }
        };
        let preset = match name {
            "fubini-study" => {
                arity(1)?;
                Preset::FubiniStudy { d: int(nums[0])? }
            }
            "anti-fubini-study" => {
                arity(1)?;
                Preset::AntiFubiniStudy { d: int(nums[0])? }
            }
            "perturbed" => {
                arity(2)?;
                Preset::Perturbed {
                    d: int(nums[0])?,
                    s: nums[1],
                }
            }
            "gaussian" => Preset::Gaussian { lambda: nums },
            "quartic" => {
                arity(2)?;
                Preset::Quartic {
                    lambda: nums[0],
                    c: nums[1],
                }
            }
            other => return Err(Error::Domain(format!("unknown weight preset `{other}`"))),
        };
        preset.validate()?;
        Ok(preset)
    }
}

#[derive(Clone, Debug)]
struct PresetWeight(Preset);

impl Weight for PresetWeight {
    fn dim(&self) -> usize {
        match &self.0 {
            Preset::Gaussian { lambda } => lambda.len(),
            _ => 1,
        }
    }

    fn eval(&self, z: &[Complex64]) -> f64 {
        let u = z.first().map_or(0.0, |c| c.norm_sqr());
        match &self.0 {
            Preset::FubiniStudy { d } | Preset::AntiFubiniStudy { d } => *d as f64 * u.ln_1p(),
            Preset::Perturbed { d, s } => {
                let t = u / (1.0 + u);
                *d as f64 * u.ln_1p() + s * t * (1.0 - t)
            }
            Preset::Gaussian { lambda } => {
                lambda.iter().zip(z).map(|(l, c)| l * c.norm_sqr()).sum()
            }
            Preset::Quartic { lambda, c } => lambda * u + c * u * u,
        }
    }

    fn analytic_hessian(&self, z: &[Complex64]) -> Option<HermitianMatrix> {
        let u = z.first().map_or(0.0, |c| c.norm_sqr());
        // For radial φ = F(|z|²), φ_{zz̄} = d/du (u F'(u)).
        let value = match &self.0 {
            Preset::FubiniStudy { d } | Preset::AntiFubiniStudy { d } => {
                *d as f64 / ((1.0 + u) * (1.0 + u))
            }
            Preset::Perturbed { d, s } => {
                let t = u / (1.0 + u);
                (1.0 - t) * (1.0 - t) * perturbed_curvature(*d, *s, t)
            }
            Preset::Gaussian { lambda } => {
                return Some(HermitianMatrix::from_real_diagonal(lambda))
            }
            Preset::Quartic { lambda, c } => lambda + 4.0 * c * u,
        };
        Some(HermitianMatrix::from_real_diagonal(&[value]))
    }
}

/// Curvature of `perturbed(d, s)` relative to the Fubini–Study form, as a
/// function of `t = |z|²/(1+|z|²)`.
pub fn perturbed_curvature(d: i32, s: f64, t: f64) -> f64 {
    d as f64 + s * (1.0 - 6.0 * t + 6.0 * t * t)
}

/// The hermitian form `ω` on a chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BaseMetric {
    /// `hᵢⱼ = δᵢⱼ` on `Cⁿ`.
    Euclidean(usize),
    /// `h = (1+|z|²)^{-2}` on the projective line, total volume `π`.
    FubiniStudy,
}

impl BaseMetric {
    pub fn dim(&self) -> usize {
        match self {
            BaseMetric::Euclidean(n) => *n,
            BaseMetric::FubiniStudy => 1,
        }
    }

    pub fn h(&self, z: &[Complex64]) -> HermitianMatrix {
        match self {
            BaseMetric::Euclidean(n) => HermitianMatrix::identity(*n),
            BaseMetric::FubiniStudy => {
                HermitianMatrix::from_real_diagonal(&[self.volume_density(z)])
            }
        }
    }

    /// `det h`, the density of `dV_ω` against Lebesgue measure.
    pub fn volume_density(&self, z: &[Complex64]) -> f64 {
        match self {
            BaseMetric::Euclidean(_) => 1.0,
            BaseMetric::FubiniStudy => {
                let u = z.first().map_or(0.0, |c| c.norm_sqr());
                1.0 / ((1.0 + u) * (1.0 + u))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartKind {
    ProjectiveLine,
    Plane,
}

/// A point of the projective line or of `Cⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub enum ChartPoint {
    Affine(Vec<Complex64>),
    /// The point `z = 1/w` in the chart at infinity; `w = 0` is `∞`.
    Inverted(Complex64),
}

impl ChartPoint {
    pub fn affine1(z: Complex64) -> Self {
        ChartPoint::Affine(vec![z])
    }

    /// Affine coordinate as a complex number, or `None` at `∞`.
    pub fn affine_coordinate(&self) -> Option<Complex64> {
        match self {
            ChartPoint::Affine(z) => z.first().copied(),
            ChartPoint::Inverted(w) if *w == Complex64::new(0.0, 0.0) => None,
            ChartPoint::Inverted(w) => Some(w.inv()),
        }
    }
}

/// Weight and base metric in the coordinates where sections are computed.
#[derive(Clone)]
pub struct ManifoldChart {
    weight: Arc<dyn Weight>,
    weight_at_infinity: Option<Arc<dyn Weight>>,
    base: BaseMetric,
    degree: i32,
    kind: ChartKind,
    mode: DerivativeMode,
}

impl fmt::Debug for ManifoldChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManifoldChart")
            .field("base", &self.base)
            .field("degree", &self.degree)
            .field("kind", &self.kind)
            .field("mode", &self.mode)
            .finish()
    }
}

impl ManifoldChart {
    /// Two-chart projective line. `weight_at_infinity` is the potential in
    /// `w = 1/z`, i.e. `φ(1/w) + d·log|w|²`.
    pub fn projective_line(
        weight: Arc<dyn Weight>,
        weight_at_infinity: Arc<dyn Weight>,
        degree: i32,
        mode: DerivativeMode,
    ) -> Self {
        Self {
            weight,
            weight_at_infinity: Some(weight_at_infinity),
            base: BaseMetric::FubiniStudy,
            degree,
            kind: ChartKind::ProjectiveLine,
            mode,
        }
    }

    pub fn plane(weight: Arc<dyn Weight>, base: BaseMetric, mode: DerivativeMode) -> Self {
        Self {
            weight,
            weight_at_infinity: None,
            base,
            degree: 0,
            kind: ChartKind::Plane,
            mode,
        }
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn dim(&self) -> usize {
        self.weight.dim()
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn kind(&self) -> ChartKind {
        self.kind
    }

    pub fn base(&self) -> BaseMetric {
        self.base
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn weight(&self) -> &dyn Weight {
        self.weight.as_ref()
    }

    fn resolve(&self, x: &ChartPoint) -> Result<(&dyn Weight, Vec<Complex64>)> {
        match x {
            ChartPoint::Affine(z) => {
                if z.len() != self.dim() {
                    return Err(Error::Domain(format!(
                        "point has {} coordinates, chart has {}",
                        z.len(),
                        self.dim()
                    )));
                }
                if z.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Domain(format!("non-finite chart point {z:?}")));
                }
                Ok((self.weight.as_ref(), z.clone()))
            }
            ChartPoint::Inverted(w) => match &self.weight_at_infinity {
                Some(wi) if w.is_finite() => Ok((wi.as_ref(), vec![*w])),
                Some(_) => Err(Error::Domain(format!("non-finite chart point {w}"))),
                None => Err(Error::Domain("plane chart has no point at infinity".into())),
            },
        }
    }

    /// Potential at `x`, in the coordinates of the chart containing it.
    pub fn weight_at(&self, x: &ChartPoint) -> Result<f64> {
        let (w, z) = self.resolve(x)?;
        Ok(w.eval(&z))
    }

    pub fn hessian_at(&self, x: &ChartPoint) -> Result<HermitianMatrix> {
        let (w, z) = self.resolve(x)?;
        complex_hessian(w, &z, self.mode)
    }

    pub fn metric_at(&self, x: &ChartPoint) -> Result<HermitianMatrix> {
        let (_, z) = self.resolve(x)?;
        Ok(self.base.h(&z))
    }

    pub fn volume_density_at(&self, x: &ChartPoint) -> Result<f64> {
        let (_, z) = self.resolve(x)?;
        Ok(self.base.volume_density(&z))
    }
}

/// Curvature eigenvalues at a point relative to the base metric.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureSignature {
    pub eigenvalues: Vec<f64>,
    pub index: usize,
    pub degenerate: bool,
    pub tol: f64,
}

impl CurvatureSignature {
    /// Classifies given eigenvalues with tolerance `tol`.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, tol: f64) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let index = eigenvalues.iter().filter(|&&l| l < -tol).count();
        let degenerate = eigenvalues.iter().any(|l| l.abs() <= tol);
        Self {
            eigenvalues,
            index,
            degenerate,
            tol,
        }
    }
}

/// Eigenvalues of `φ_{zz̄}(x)` relative to `h(x)`. With `tol = None` the
/// threshold is `1e-9·max(1, ‖φ_{zz̄}‖)`.
pub fn curvature_signature(
    chart: &ManifoldChart,
    x: &ChartPoint,
    tol: Option<f64>,
) -> Result<CurvatureSignature> {
    let hess = chart.hessian_at(x)?;
    let h = chart.metric_at(x)?;
    let tol = match tol {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => {
            return Err(Error::Domain(format!(
                "degeneracy tolerance must be > 0, got {t}"
            )))
        }
        None => 1e-9 * hess.norm().max(1.0),
    };
    let eig = sym_geneig(&hess, &h)?;
    Ok(CurvatureSignature::from_eigenvalues(eig.values, tol))
}

/// `π^{-n}·∏|λᵢ|` when the signature has index `q`, otherwise 0.
pub fn morse_density(sig: &CurvatureSignature, q: usize) -> Result<f64> {
    if sig.degenerate {
        return Err(Error::Degenerate {
            eigenvalues: sig.eigenvalues.clone(),
            tol: sig.tol,
        });
    }
    if sig.index != q {
        return Ok(0.0);
    }
    let n = sig.eigenvalues.len() as i32;
    Ok(sig.eigenvalues.iter().map(|l| l.abs()).product::<f64>() / PI.powi(n))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityIntegral {
    pub value: f64,
    pub skipped: usize,
    pub total: usize,
}

/// `∫_{X(q)} morse_density dV_ω` over the affine chart of a one-dimensional
/// chart. Nodes with degenerate curvature are skipped and counted.
pub fn integrate_density(
    chart: &ManifoldChart,
    q: usize,
    grid: &QuadratureGrid,
) -> Result<DensityIntegral> {
    if chart.dim() != 1 {
        return Err(Error::Domain(format!(
            "density integration is implemented for n = 1, chart has n = {}",
            chart.dim()
        )));
    }
    let mut skipped = 0;
    let mut value = 0.0;
    for (&z, &w) in grid.nodes().iter().zip(grid.weights()) {
        let p = ChartPoint::Affine(vec![z]);
        let sig = curvature_signature(chart, &p, None)?;
        if sig.degenerate {
            skipped += 1;
            continue;
        }
        value += w * morse_density(&sig, q)? * chart.volume_density_at(&p)?;
    }
    let total = grid.len();
    if skipped * 100 > total {
        return Err(Error::UnreliableIntegral { skipped, total });
    }
    Ok(DensityIntegral {
        value,
        skipped,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{plane_quadrature, Decay};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn origin(n: usize) -> ChartPoint {
        ChartPoint::Affine(vec![c(0.0, 0.0); n])
    }

    fn fd_chart(
        n: usize,
        f: impl Fn(&[Complex64]) -> f64 + Send + Sync + 'static,
    ) -> ManifoldChart {
        ManifoldChart::plane(
            Arc::new(FnWeight::new(n, f)),
            BaseMetric::Euclidean(n),
            DerivativeMode::FiniteDifference,
        )
    }

    #[test]
    fn quadratic_signature() {
        let chart = fd_chart(1, |z| 2.0 * z[0].norm_sqr());
        let sig = curvature_signature(&chart, &origin(1), None).unwrap();
        assert!((sig.eigenvalues[0] - 2.0).abs() < 1e-6);
        assert_eq!(sig.index, 0);
        assert!(!sig.degenerate);
    }

    #[test]
    fn mixed_signature() {
        let chart = fd_chart(2, |z| z[0].norm_sqr() - 3.0 * z[1].norm_sqr());
        let sig = curvature_signature(&chart, &origin(2), None).unwrap();
        assert!((sig.eigenvalues[0] + 3.0).abs() < 1e-6);
        assert!((sig.eigenvalues[1] - 1.0).abs() < 1e-6);
        assert_eq!(sig.index, 1);
    }

    #[test]
    fn product_weight_is_degenerate_at_origin() {
        let chart = fd_chart(2, |z| z[0].norm_sqr() * z[1].norm_sqr());
        let sig = curvature_signature(&chart, &origin(2), None).unwrap();
        assert!(sig.degenerate);
        assert!(matches!(
            morse_density(&sig, 0),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn nonpositive_tolerance_rejected() {
        let chart = fd_chart(1, |z| z[0].norm_sqr());
        assert!(curvature_signature(&chart, &origin(1), Some(0.0)).is_err());
    }

    #[test]
    fn fd_step_failure_reported() {
        let chart = fd_chart(1, |z| z[0].norm_sqr());
        let far = ChartPoint::affine1(c(1e300, 0.0));
        assert!(matches!(
            curvature_signature(&chart, &far, None),
            Err(Error::NumericalDerivative(_))
        ));
    }

    #[test]
    fn analytic_and_fd_hessians_agree() {
        let chart = Preset::Perturbed { d: 1, s: 3.0 }
            .chart(DerivativeMode::Analytic)
            .unwrap();
        let fd = chart.clone().with_mode(DerivativeMode::FiniteDifference);
        for r in [0.0, 0.4, 1.0, 2.5] {
            let p = ChartPoint::affine1(c(r, 0.3 * r));
            let a = chart.hessian_at(&p).unwrap().get(0, 0).re;
            let b = fd.hessian_at(&p).unwrap().get(0, 0).re;
            assert!((a - b).abs() < 1e-6, "r = {r}: {a} vs {b}");
        }
    }

    #[test]
    fn morse_density_examples() {
        let sig = CurvatureSignature::from_eigenvalues(vec![-1.0, 2.0, 3.0], 1e-9);
        assert!((morse_density(&sig, 1).unwrap() - 6.0 / PI.powi(3)).abs() < 1e-15);
        assert!((morse_density(&sig, 1).unwrap() - 0.19351).abs() < 5e-6);
        assert_eq!(morse_density(&sig, 0).unwrap(), 0.0);
        let sig = CurvatureSignature::from_eigenvalues(vec![2.0], 1e-9);
        assert!((morse_density(&sig, 0).unwrap() - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn fubini_study_integrals() {
        let grid = plane_quadrature(48, 16, Decay::Projective).unwrap();
        let fs = Preset::FubiniStudy { d: 1 }
            .chart(DerivativeMode::Analytic)
            .unwrap();
        let i0 = integrate_density(&fs, 0, &grid).unwrap();
        assert!((i0.value - 1.0).abs() < 1e-8);
        assert_eq!(i0.skipped, 0);
        assert_eq!(integrate_density(&fs, 1, &grid).unwrap().value, 0.0);
        let anti = Preset::AntiFubiniStudy { d: -1 }
            .chart(DerivativeMode::Analytic)
            .unwrap();
        assert!((integrate_density(&anti, 1, &grid).unwrap().value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn unreliable_integral_when_flat() {
        let grid = plane_quadrature(8, 8, Decay::Gaussian { exponent: 1.0 }).unwrap();
        let flat = fd_chart(1, |_| 0.0);
        assert!(matches!(
            integrate_density(&flat, 0, &grid),
            Err(Error::UnreliableIntegral { .. })
        ));
    }

    #[test]
    fn preset_parsing() {
        assert_eq!(
            "perturbed(1, 3)".parse::<Preset>().unwrap(),
            Preset::Perturbed { d: 1, s: 3.0 }
        );
        assert_eq!(
            "fubini-study(2)".parse::<Preset>().unwrap(),
            Preset::FubiniStudy { d: 2 }
        );
        assert!("gaussian(1, -0.5)".parse::<Preset>().is_err());
        assert_eq!(
            "quartic(1, 1)".parse::<Preset>().unwrap(),
            Preset::Quartic {
                lambda: 1.0,
                c: 1.0
            }
        );
        assert!("anti-fubini-study(1)".parse::<Preset>().is_err());
        assert!("spherical(1)".parse::<Preset>().is_err());
        assert!("perturbed(1.5, 3)".parse::<Preset>().is_err());
        let p = Preset::Perturbed { d: -1, s: 2.5 };
        assert_eq!(p.to_string().parse::<Preset>().unwrap(), p);
    }

    #[test]
    fn perturbed_chart_is_symmetric_under_inversion() {
        let chart = Preset::Perturbed { d: 1, s: 3.0 }
            .chart(DerivativeMode::Analytic)
            .unwrap();
        // φ̃(w) = φ(1/w) + log|w|² for d = 1.
        let w = c(0.3, -0.7);
        let lhs = chart.weight_at(&ChartPoint::Inverted(w)).unwrap();
        let rhs = chart.weight_at(&ChartPoint::affine1(w.inv())).unwrap() + w.norm_sqr().ln();
        assert!((lhs - rhs).abs() < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn degree_is_difference_of_integrals(d in prop_oneof![-3i32..=-1, 1i32..=3], s in -4.0f64..4.0) {
            let grid = plane_quadrature(64, 8, Decay::Projective).unwrap();
            let chart = Preset::Perturbed { d, s }.chart(DerivativeMode::Analytic).unwrap();
            let i0 = integrate_density(&chart, 0, &grid).unwrap().value;
            let i1 = integrate_density(&chart, 1, &grid).unwrap().value;
            prop_assert!((i0 - i1 - d as f64).abs() < 1e-6, "{} - {} vs {}", i0, i1, d);
        }

        #[test]
        fn pluriharmonic_terms_do_not_change_curvature(
            a in -2.0f64..2.0, b in -2.0f64..2.0, re in -1.5f64..1.5, im in -1.5f64..1.5,
        ) {
            let base = fd_chart(1, |z| 2.0 * (1.0 + z[0].norm_sqr()).ln());
            let twisted = fd_chart(1, move |z| {
                let hol = z[0].powi(3) * a + z[0] * Complex64::new(0.0, b);
                2.0 * (1.0 + z[0].norm_sqr()).ln() + hol.re
            });
            let p = ChartPoint::affine1(c(re, im));
            let s0 = curvature_signature(&base, &p, None).unwrap();
            let s1 = curvature_signature(&twisted, &p, None).unwrap();
            prop_assert!((s0.eigenvalues[0] - s1.eigenvalues[0]).abs() < 1e-5);
        }

        #[test]
        fn densities_sum_to_full_determinant(l in proptest::collection::vec(
            prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], 1..4)) {
            let sig = CurvatureSignature::from_eigenvalues(l.clone(), 1e-9);
            let total: f64 = (0..=l.len()).map(|q| morse_density(&sig, q).unwrap()).sum();
            let nonzero = (0..=l.len()).filter(|&q| morse_density(&sig, q).unwrap() > 0.0).count();
            let expected = l.iter().map(|x| x.abs()).product::<f64>() / PI.powi(l.len() as i32);
            prop_assert_eq!(nonzero, 1);
            prop_assert!((total - expected).abs() <= 1e-14 * expected);
            prop_assert!((0..=l.len()).all(|q| morse_density(&sig, q).unwrap() >= 0.0));
        }
    }
}
