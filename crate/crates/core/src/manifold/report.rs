use num_complex::Complex64;
use rayon::prelude::*;

use super::space::{cohomology_space, SectionSpace};
use crate::error::{Error, Result};
use crate::geometry::{
    curvature_signature, integrate_density, morse_density, ChartPoint, ManifoldChart,
};
use crate::numerics::{plane_quadrature, Decay, QuadratureGrid};

/// Radii of the fixed sample ray, used in both charts.
pub const SAMPLE_RADII: [f64; 5] = [0.0, 0.3, 0.7, 1.2, 2.5];

/// `|z| ∈ SAMPLE_RADII` on the positive real axis, followed by their images
/// under `z ↦ 1/z` (the image of 0 is `∞`).
pub fn default_sample_points() -> Vec<ChartPoint> {
    let affine = SAMPLE_RADII
        .iter()
        .map(|r| ChartPoint::affine1(Complex64::new(*r, 0.0)));
    let inverted = SAMPLE_RADII
        .iter()
        .map(|r| ChartPoint::Inverted(Complex64::new(*r, 0.0)));
    affine.chain(inverted).collect()
}

/// Gram grid for tensor power `k`: `2k|d| + 32` radial by `2k|d| + 16`
/// angular nodes.
pub fn section_grid(k: u32, d: i32) -> Result<QuadratureGrid> {
    let m = 2 * k as usize * d.unsigned_abs() as usize;
    plane_quadrature(m + 32, m + 16, Decay::Projective)
}

/// Grid for integrating Morse densities, whose indicator factor has kinks.
pub fn density_grid() -> Result<QuadratureGrid> {
    plane_quadrature(400, 16, Decay::Projective)
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelRow {
    pub k: u32,
    pub q: usize,
    pub point: ChartPoint,
    pub b: f64,
    pub s: f64,
    pub s_components: Vec<f64>,
    pub density: f64,
    /// `B/(k·density)`, or `B/k` where the density vanishes.
    pub ratio: f64,
    pub dim: usize,
    /// `k·∫_{X(q)} density dV`.
    pub rhs_integral: f64,
    /// `(B/k − density)⁺`.
    pub excess: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
}

impl KernelRow {
    /// Affine coordinate of the point, `None` at `∞`.
    pub fn affine(&self) -> Option<Complex64> {
        self.point.affine_coordinate()
    }

    pub fn sandwich_holds(&self) -> bool {
        self.lower_margin >= -1e-9 && self.upper_margin >= -1e-9
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratedRow {
    pub k: u32,
    pub q: usize,
    pub dim: usize,
    /// `∫ B dV` on an independent grid.
    pub trace_dim: f64,
    /// `k·∫_{X(q)} density dV`.
    pub rhs: f64,
    /// `dim − rhs`.
    pub gap: f64,
    pub gap_over_k: f64,
    /// `gap⁺/(√k·ln k)`.
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelReport {
    pub q: usize,
    pub density_integral: f64,
    pub skipped_nodes: usize,
    pub rows: Vec<KernelRow>,
    pub integrated: Vec<IntegratedRow>,
}

impl KernelReport {
    pub fn rows_at(&self, point_index: usize) -> impl Iterator<Item = &KernelRow> {
        let per_k = self.rows.len() / self.integrated.len().max(1);
        self.rows.iter().skip(point_index).step_by(per_k.max(1))
    }

    pub fn min_sandwich_margin(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.lower_margin.min(r.upper_margin))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Pointwise and integrated comparison of `k⁻¹B^{q,k}` with the Morse
/// density over a list of tensor powers. Rows are ordered by `(k, point)`.
pub fn weak_morse_report(
    chart: &ManifoldChart,
    k_list: &[u32],
    q: usize,
    sample_points: &[ChartPoint],
) -> Result<KernelReport> {
    if k_list.is_empty() || k_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(format!(
            "k_list must be nonempty and strictly increasing, got {k_list:?}"
        )));
    }
    if k_list[0] < 2 {
        return Err(Error::Domain("k_list entries must be at least 2".into()));
    }
    let dgrid = density_grid()?;
    let integral = integrate_density(chart, q, &dgrid)?;
    let densities: Vec<f64> = sample_points
        .iter()
        .map(|p| {
            let sig = curvature_signature(chart, p, None)?;
            morse_density(&sig, q)
        })
        .collect::<Result<_>>()?;
    let trace_grid = trace_grid(*k_list.last().unwrap(), chart.degree())?;

    let per_k: Vec<(Vec<KernelRow>, IntegratedRow)> = k_list
        .par_iter()
        .map(|&k| {
            let space = cohomology_space(chart, k, q, &section_grid(k, chart.degree())?)?;
            rows_for_k(
                &space,
                sample_points,
                &densities,
                integral.value,
                &trace_grid,
            )
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut integrated = Vec::new();
    for (r, i) in per_k {
        rows.extend(r);
        integrated.push(i);
    }
    Ok(KernelReport {
        q,
        density_integral: integral.value,
        skipped_nodes: integral.skipped,
        rows,
        integrated,
    })
}

fn trace_grid(k_max: u32, d: i32) -> Result<QuadratureGrid> {
    let m = 2 * k_max as usize * d.unsigned_abs() as usize;
    plane_quadrature(m + 48, m + 24, Decay::Projective)
}

fn rows_for_k(
    space: &SectionSpace,
    points: &[ChartPoint],
    densities: &[f64],
    integral: f64,
    trace_grid: &QuadratureGrid,
) -> Result<(Vec<KernelRow>, IntegratedRow)> {
    let k = space.k();
    let kf = k as f64;
    let rhs = kf * integral;
    let mut rows = Vec::with_capacity(points.len());
    for (p, &density) in points.iter().zip(densities) {
        let sw = space.sandwich_check(p)?;
        let ex = space.extremal_at(p)?;
        let ratio = if density > 0.0 {
            sw.b / (kf * density)
        } else {
            sw.b / kf
        };
        rows.push(KernelRow {
            k,
            q: space.q(),
            point: p.clone(),
            b: sw.b,
            s: sw.s,
            s_components: ex.components,
            density,
            ratio,
            dim: space.dimension(),
            rhs_integral: rhs,
            excess: (sw.b / kf - density).max(0.0),
            lower_margin: sw.lower_margin,
            upper_margin: sw.upper_margin,
        });
    }
    let dim = space.dimension();
    let gap = dim as f64 - rhs;
    let integrated = IntegratedRow {
        k,
        q: space.q(),
        dim,
        trace_dim: space.trace_integral(trace_grid)?,
        rhs,
        gap,
        gap_over_k: gap / kf,
        constant: gap.max(0.0) / (kf.sqrt() * kf.ln()),
    };
    Ok((rows, integrated))
}
