use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{ChartKind, ChartPoint, ManifoldChart};
use crate::numerics::{
    cholesky_factor, sym_geneig, CholeskyFactor, GenEigen, HermitianMatrix, QuadratureGrid,
};

const SANDWICH_TOL: f64 = 1e-9;

/// Orthonormalized space of holomorphic sections of `L^k` (`q = 0`) or, via
/// Serre duality, of harmonic `(0,1)`-forms with values in `L^k` (`q = 1`).
///
/// The basis is the monomials `z⁰..z^N`, each divided by the square root of
/// its own norm, then optionally recombined by an invertible matrix. For
/// `q = 1`, `N = −kd − 2` and monomials stand for sections of `K ⊗ L^{−k}`;
/// their pointwise norm is `|g|²e^{kφ}/h`, which is the pointwise norm of
/// the dual harmonic form.
#[derive(Clone, Debug)]
pub struct SectionSpace {
    chart: ManifoldChart,
    k: u32,
    q: usize,
    top: Option<usize>,
    log_scales: Vec<f64>,
    coeffs: DMatrix<Complex64>,
    gram: HermitianMatrix,
    chol: CholeskyFactor,
    spectrum: GenEigen,
    grid: Option<QuadratureGrid>,
}

/// Extremal function at a point, with one entry per multi-index.
#[derive(Clone, Debug, PartialEq)]
pub struct Extremal {
    pub s: f64,
    pub components: Vec<f64>,
}

/// Margins of `S ≤ B ≤ Σ_I S_I`.
#[derive(Clone, Debug, PartialEq)]
pub struct SandwichReport {
    pub s: f64,
    pub b: f64,
    pub component_sum: f64,
    /// `B − S`.
    pub lower_margin: f64,
    /// `Σ_I S_I − B`.
    pub upper_margin: f64,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.lower_margin >= -SANDWICH_TOL && self.upper_margin >= -SANDWICH_TOL
    }

    /// Turns a violated sandwich into an invariant error carrying the values.
    pub fn require(self) -> Result<Self> {
        if self.holds() {
            Ok(self)
        } else {
            Err(Error::Invariant(format!(
                "S ≤ B ≤ ΣS_I violated: S = {:e}, B = {:e}, ΣS_I = {:e}",
                self.s, self.b, self.component_sum
            )))
        }
    }
}

impl SectionSpace {
    fn empty(chart: &ManifoldChart, k: u32, q: usize) -> Self {
        let none = DMatrix::from_element(0, 0, Complex64::new(0.0, 0.0));
        let gram = HermitianMatrix::identity(0);
        Self {
            chart: chart.clone(),
            k,
            q,
            top: None,
            log_scales: Vec::new(),
            coeffs: none.clone(),
            chol: cholesky_factor(&gram).expect("empty factorization"),
            spectrum: GenEigen {
                values: Vec::new(),
                vectors: none,
            },
            gram,
            grid: None,
        }
    }

    fn build(
        chart: &ManifoldChart,
        k: u32,
        q: usize,
        top: usize,
        grid: &QuadratureGrid,
    ) -> Result<Self> {
        grid.require_budget(2 * top + 4)?;
        let dim = top + 1;
        let mut space = Self::empty(chart, k, q);
        space.top = Some(top);
        space.grid = Some(grid.clone());

        // Raw diagonal norms in the log domain, so high powers cannot overflow.
        let nodes: Vec<(f64, f64, f64)> = grid
            .nodes()
            .iter()
            .zip(grid.weights())
            .map(|(z, w)| {
                let p = ChartPoint::affine1(*z);
                let log_density = -space.pointwise_weight(&p)? + chart.volume_density_at(&p)?.ln();
                Ok((z.norm().ln(), z.arg(), w.ln() + log_density))
            })
            .collect::<Result<_>>()?;
        if nodes.iter().any(|(_, _, l)| !l.is_finite()) {
            return Err(Error::Domain(
                "norm density is not finite on the grid".into(),
            ));
        }
        let mut log_scales = Vec::with_capacity(dim);
        for j in 0..dim {
            let terms: Vec<f64> = nodes
                .iter()
                .map(|(lr, _, ld)| 2.0 * j as f64 * lr + ld)
                .collect();
            log_scales.push(-0.5 * log_sum_exp(&terms));
        }

        let mut acc = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        let mut v = DVector::from_element(dim, Complex64::new(0.0, 0.0));
        for (lr, theta, ld) in &nodes {
            for j in 0..dim {
                let mag = (log_scales[j] + j as f64 * lr + 0.5 * ld).exp();
                v[j] = Complex64::from_polar(mag, j as f64 * theta);
            }
            for j in 0..dim {
                for i in 0..=j {
                    acc[(i, j)] += v[i].conj() * v[j];
                }
            }
        }
        let gram = HermitianMatrix::from_fn(dim, |i, j| acc[(i, j)]);
        space.log_scales = log_scales;
        space.coeffs = DMatrix::identity(dim, dim);
        space.install_gram(gram)?;
        Ok(space)
    }

    fn install_gram(&mut self, gram: HermitianMatrix) -> Result<()> {
        self.chol = cholesky_factor(&gram).map_err(|e| match e {
            Error::RankDeficient { pivot, value, floor } => Error::Capacity(format!(
                "Gram matrix is numerically singular at pivot {pivot} ({value:e} ≤ {floor:e}); refine the grid"
            )),
            other => other,
        })?;
        self.spectrum = sym_geneig(&gram, &HermitianMatrix::identity(gram.dim()))?;
        self.gram = gram;
        Ok(())
    }

    /// The same space with basis `b'ᵢ = Σⱼ m[(j, i)] bⱼ`.
    pub fn recombined(&self, m: &DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != self.dimension() || m.ncols() != self.dimension() {
            return Err(Error::Domain(format!(
                "recombination must be {0}x{0}",
                self.dimension()
            )));
        }
        let mut out = self.clone();
        out.coeffs = &self.coeffs * m;
        out.install_gram(self.gram.congruence(m)?)?;
        Ok(out)
    }

    pub fn dimension(&self) -> usize {
        self.top.map_or(0, |t| t + 1)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Highest monomial degree `N`, or `None` for the zero space.
    pub fn top_degree(&self) -> Option<usize> {
        self.top
    }

    pub fn chart(&self) -> &ManifoldChart {
        &self.chart
    }

    pub fn gram(&self) -> &HermitianMatrix {
        &self.gram
    }

    pub fn grid(&self) -> Option<&QuadratureGrid> {
        self.grid.as_ref()
    }

    /// `max |U*GU − I|` for the orthonormalized basis `U = L⁻*`.
    pub fn orthonormality_residual(&self) -> f64 {
        if self.dimension() == 0 {
            return 0.0;
        }
        let u = self.chol.inverse_adjoint();
        let g = u.adjoint() * self.gram.as_matrix() * &u;
        let id = DMatrix::<Complex64>::identity(g.nrows(), g.ncols());
        (g - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `ψ` with pointwise norm `|s|² e^{−ψ}` in the chart containing `x`.
    pub fn pointwise_weight(&self, x: &ChartPoint) -> Result<f64> {
        let phi = self.chart.weight_at(x)?;
        let k = self.k as f64;
        Ok(match self.q {
            0 => k * phi,
            _ => -k * phi + self.chart.volume_density_at(x)?.ln(),
        })
    }

    /// Basis values at `x` as `(e, c)` with actual values `e·exp(c)`, the
    /// pointwise weight already folded in.
    fn eval_vector(&self, x: &ChartPoint) -> Result<(DVector<Complex64>, f64)> {
        let top = match self.top {
            Some(t) => t,
            None => return Ok((DVector::zeros(0), 0.0)),
        };
        let (coord, exponent): (Complex64, Box<dyn Fn(usize) -> usize>) = match x {
            ChartPoint::Affine(z) => (z[0], Box::new(|j| j)),
            ChartPoint::Inverted(w) => (*w, Box::new(move |j| top - j)),
        };
        let half_psi = 0.5 * self.pointwise_weight(x)?;
        let lr = coord.norm().ln();
        let theta = coord.arg();
        let logs: Vec<f64> = (0..=top)
            .map(|j| {
                let e = exponent(j);
                let power = if e == 0 { 0.0 } else { e as f64 * lr };
                self.log_scales[j] + power - half_psi
            })
            .collect();
        let m = logs
            .iter()
            .copied()
            .filter(|l| l.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Err(Error::Domain(format!(
                "sections cannot be evaluated at {x:?}"
            )));
        }
        let raw = DVector::from_fn(top + 1, |j, _| {
            Complex64::from_polar((logs[j] - m).exp(), exponent(j) as f64 * theta)
        });
        Ok((self.coeffs.transpose() * raw, m))
    }

    /// `Σᵢ |Ψᵢ(x)|² e^{−ψ(x)}` over an orthonormal basis.
    pub fn bergman_at(&self, x: &ChartPoint) -> Result<f64> {
        if self.dimension() == 0 {
            return Ok(0.0);
        }
        let (e, c) = self.eval_vector(x)?;
        let y = self.chol.solve_lower(&e.map(|v| v.conj()));
        Ok(y.norm_squared() * (2.0 * c).exp())
    }

    /// `sup |s(x)|²/‖s‖²`, computed from the spectral decomposition of the
    /// Gram matrix rather than its Cholesky factor. For `n = 1` there is a
    /// single component.
    pub fn extremal_at(&self, x: &ChartPoint) -> Result<Extremal> {
        if self.dimension() == 0 {
            return Ok(Extremal {
                s: 0.0,
                components: vec![0.0],
            });
        }
        let (e, c) = self.eval_vector(x)?;
        let ebar = e.map(|v| v.conj());
        let mut s = 0.0;
        for j in 0..self.spectrum.len() {
            let proj = self.spectrum.vectors.column(j).dotc(&ebar);
            s += proj.norm_sqr() / self.spectrum.values[j];
        }
        let s = s * (2.0 * c).exp();
        Ok(Extremal {
            s,
            components: vec![s],
        })
    }

    pub fn sandwich_check(&self, x: &ChartPoint) -> Result<SandwichReport> {
        let b = self.bergman_at(x)?;
        let ex = self.extremal_at(x)?;
        let component_sum: f64 = ex.components.iter().sum();
        Ok(SandwichReport {
            s: ex.s,
            b,
            component_sum,
            lower_margin: b - ex.s,
            upper_margin: component_sum - b,
        })
    }

    /// `∫ B dV_ω` on `grid`; equals the dimension for any exact-enough grid.
    pub fn trace_integral(&self, grid: &QuadratureGrid) -> Result<f64> {
        let mut total = 0.0;
        for (z, w) in grid.nodes().iter().zip(grid.weights()) {
            let p = ChartPoint::affine1(*z);
            total += w * self.bergman_at(&p)? * self.chart.volume_density_at(&p)?;
        }
        Ok(total)
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn check_projective(chart: &ManifoldChart, k: u32) -> Result<()> {
    if chart.kind() != ChartKind::ProjectiveLine {
        return Err(Error::Domain(
            "section spaces are built on the projective line".into(),
        ));
    }
    if k == 0 {
        return Err(Error::Domain("tensor power k must be at least 1".into()));
    }
    Ok(())
}

/// Holomorphic sections of `L^k`, `L = O(d)` with `d ≥ 1`: monomials of
/// degree `≤ kd` in the affine chart.
pub fn build_section_space(
    chart: &ManifoldChart,
    k: u32,
    grid: &QuadratureGrid,
) -> Result<SectionSpace> {
    check_projective(chart, k)?;
    let d = chart.degree();
    if d < 1 {
        return Err(Error::Domain(format!(
            "section space needs bundle degree d ≥ 1, got {d}"
        )));
    }
    SectionSpace::build(chart, k, 0, k as usize * d as usize, grid)
}

/// Serre-dual model of the harmonic `(0,1)`-forms with values in `L^k`,
/// `d ≤ −1`: sections of `K ⊗ L^{−k}`, monomials of degree `≤ −kd − 2`.
/// Empty when `−kd − 2 < 0`.
pub fn build_dual_space(
    chart: &ManifoldChart,
    k: u32,
    grid: &QuadratureGrid,
) -> Result<SectionSpace> {
    check_projective(chart, k)?;
    let d = chart.degree();
    if d > -1 {
        return Err(Error::Domain(format!(
            "dual space needs bundle degree d ≤ −1, got {d}"
        )));
    }
    let top = -(k as i64) * d as i64 - 2;
    if top < 0 {
        return Ok(SectionSpace::empty(chart, k, 1));
    }
    SectionSpace::build(chart, k, 1, top as usize, grid)
}

/// `H^q(X, L^k)` for `q ∈ {0, 1}` on the projective line, empty whenever the
/// degree forces it.
pub fn cohomology_space(
    chart: &ManifoldChart,
    k: u32,
    q: usize,
    grid: &QuadratureGrid,
) -> Result<SectionSpace> {
    check_projective(chart, k)?;
    let d = chart.degree();
    match q {
        0 if d >= 1 => build_section_space(chart, k, grid),
        1 if d <= -1 => build_dual_space(chart, k, grid),
        0 | 1 => Ok(SectionSpace::empty(chart, k, q)),
        _ => Err(Error::Domain(format!(
            "q must be 0 or 1 on a curve, got {q}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DerivativeMode, Preset};
    use crate::numerics::{plane_quadrature, Decay};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn chart(p: Preset) -> ManifoldChart {
        p.chart(DerivativeMode::Analytic).unwrap()
    }

    fn grid_for(k: u32, d: i32) -> QuadratureGrid {
        let m = 2 * k as usize * d.unsigned_abs() as usize;
        plane_quadrature(m + 32, m + 16, Decay::Projective).unwrap()
    }

    fn points() -> Vec<ChartPoint> {
        let mut v: Vec<ChartPoint> = [0.0, 0.3, 0.7, 1.2, 2.5]
            .iter()
            .map(|r| ChartPoint::affine1(Complex64::new(*r, 0.0)))
            .collect();
        v.extend(
            [0.0, 0.3, 0.7, 1.2, 2.5]
                .iter()
                .map(|r| ChartPoint::Inverted(Complex64::new(*r, 0.0))),
        );
        v
    }

    #[test]
    fn dimensions() {
        let fs1 = chart(Preset::FubiniStudy { d: 1 });
        assert_eq!(
            build_section_space(&fs1, 8, &grid_for(8, 1))
                .unwrap()
                .dimension(),
            9
        );
        assert_eq!(
            build_section_space(&fs1, 1, &grid_for(1, 1))
                .unwrap()
                .dimension(),
            2
        );
        let fs2 = chart(Preset::FubiniStudy { d: 2 });
        assert_eq!(
            build_section_space(&fs2, 3, &grid_for(3, 2))
                .unwrap()
                .dimension(),
            7
        );

        let anti = chart(Preset::AntiFubiniStudy { d: -1 });
        assert_eq!(
            build_dual_space(&anti, 8, &grid_for(8, 1))
                .unwrap()
                .dimension(),
            7
        );
        let empty = build_dual_space(&anti, 1, &grid_for(1, 1)).unwrap();
        assert_eq!(empty.dimension(), 0);
        assert_eq!(
            empty
                .bergman_at(&ChartPoint::affine1(Complex64::new(0.4, 0.0)))
                .unwrap(),
            0.0
        );
        let anti2 = chart(Preset::AntiFubiniStudy { d: -2 });
        assert_eq!(
            build_dual_space(&anti2, 2, &grid_for(2, 2))
                .unwrap()
                .dimension(),
            3
        );
    }

    #[test]
    fn wrong_sign_degree_rejected() {
        let anti = chart(Preset::AntiFubiniStudy { d: -1 });
        assert!(matches!(
            build_section_space(&anti, 4, &grid_for(4, 1)),
            Err(Error::Domain(_))
        ));
        let fs = chart(Preset::FubiniStudy { d: 1 });
        assert!(matches!(
            build_dual_space(&fs, 4, &grid_for(4, 1)),
            Err(Error::Domain(_))
        ));
        assert_eq!(
            cohomology_space(&fs, 4, 1, &grid_for(4, 1))
                .unwrap()
                .dimension(),
            0
        );
        assert_eq!(
            cohomology_space(&anti, 4, 0, &grid_for(4, 1))
                .unwrap()
                .dimension(),
            0
        );
    }

    #[test]
    fn coarse_grid_is_capacity_error() {
        let fs = chart(Preset::FubiniStudy { d: 1 });
        let coarse = plane_quadrature(6, 8, Decay::Projective).unwrap();
        assert!(matches!(
            build_section_space(&fs, 8, &coarse),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn fubini_study_kernel_is_constant() {
        let fs = chart(Preset::FubiniStudy { d: 1 });
        let space = build_section_space(&fs, 8, &grid_for(8, 1)).unwrap();
        for p in points() {
            let b = space.bergman_at(&p).unwrap();
            assert!((b / (9.0 / PI) - 1.0).abs() < 1e-6, "{p:?}: {b}");
        }
        assert!(space.orthonormality_residual() < 1e-9);
    }

    #[test]
    fn dual_kernel_is_constant() {
        let anti = chart(Preset::AntiFubiniStudy { d: -1 });
        let space = build_dual_space(&anti, 8, &grid_for(8, 1)).unwrap();
        for p in points() {
            let b = space.bergman_at(&p).unwrap();
            assert!((b / (7.0 / PI) - 1.0).abs() < 1e-6, "{p:?}: {b}");
        }
    }

    #[test]
    fn extremal_equals_bergman_for_one_component() {
        let fs = chart(Preset::FubiniStudy { d: 1 });
        let space = build_section_space(&fs, 4, &grid_for(4, 1)).unwrap();
        let origin = ChartPoint::affine1(Complex64::new(0.0, 0.0));
        let ex = space.extremal_at(&origin).unwrap();
        assert!((ex.s - 5.0 / PI).abs() < 1e-9);
        for p in points() {
            let r = space.sandwich_check(&p).unwrap();
            assert!(r.holds());
            assert!(r.lower_margin.abs() < 1e-9 && r.upper_margin.abs() < 1e-9);
        }
        let anti = chart(Preset::AntiFubiniStudy { d: -1 });
        let empty = build_dual_space(&anti, 1, &grid_for(1, 1)).unwrap();
        let r = empty.sandwich_check(&origin).unwrap();
        assert_eq!((r.s, r.b, r.component_sum), (0.0, 0.0, 0.0));
        let dual = build_dual_space(&anti, 6, &grid_for(6, 1)).unwrap();
        for p in points() {
            let r = dual.sandwich_check(&p).unwrap();
            assert!(r.lower_margin.abs() < 1e-9 && r.upper_margin.abs() < 1e-9);
        }
    }

    #[test]
    fn violated_sandwich_is_reported() {
        let r = SandwichReport {
            s: 2.0,
            b: 1.0,
            component_sum: 2.0,
            lower_margin: -1.0,
            upper_margin: 1.0,
        };
        assert!(matches!(r.require(), Err(Error::Invariant(_))));
    }

    #[test]
    fn trace_identity_on_independent_grid() {
        let fine = plane_quadrature(96, 64, Decay::Projective).unwrap();
        for preset in [
            Preset::Perturbed { d: 1, s: 3.0 },
            Preset::Perturbed { d: -1, s: 2.0 },
        ] {
            let c = chart(preset);
            for q in 0..2 {
                let space = cohomology_space(&c, 10, q, &grid_for(10, 1)).unwrap();
                let t = space.trace_integral(&fine).unwrap();
                let dim = space.dimension() as f64;
                assert!(
                    (t - dim).abs() <= 1e-6 * dim.max(1.0),
                    "q = {q}: {t} vs {dim}"
                );
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn bergman_is_basis_independent(seed in any::<u64>(), k in 2u32..10) {
            let c = chart(Preset::Perturbed { d: 1, s: 2.0 });
            let space = build_section_space(&c, k, &grid_for(k, 1)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = space.dimension();
            let m = DMatrix::from_fn(n, n, |i, j| {
                let diag = if i == j { 1.0 } else { 0.0 };
                Complex64::new(diag + 0.3 * rng.gen_range(-1.0..1.0), 0.3 * rng.gen_range(-1.0..1.0))
            });
            let other = space.recombined(&m).unwrap();
            for p in points() {
                let a = space.bergman_at(&p).unwrap();
                let b = other.bergman_at(&p).unwrap();
                prop_assert!((a - b).abs() <= 1e-9 * a.abs(), "{:?}: {} vs {}", p, a, b);
            }
        }

        #[test]
        fn dimension_counts(k in 1u32..12, d in prop_oneof![-3i32..=-1, 1i32..=3]) {
            let c = chart(Preset::Perturbed { d, s: 1.0 });
            let grid = grid_for(k, d);
            let h0 = cohomology_space(&c, k, 0, &grid).unwrap().dimension() as i64;
            let h1 = cohomology_space(&c, k, 1, &grid).unwrap().dimension() as i64;
            let kd = k as i64 * d as i64;
            if d >= 1 {
                prop_assert_eq!(h0, kd + 1);
                prop_assert_eq!(h1, 0);
            } else {
                prop_assert_eq!(h0, 0);
                prop_assert_eq!(h1, (-kd - 1).max(0));
            }
        }
    }
}
