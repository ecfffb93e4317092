use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{integrate_density, ManifoldChart};
use crate::manifold::{cohomology_space, density_grid, section_grid};

#[derive(Clone, Debug, PartialEq)]
pub struct StrongMorseRow {
    pub k: u32,
    pub q: usize,
    /// `dim H⁰, dim H¹`.
    pub dims: [usize; 2],
    /// `Σ_{j≤q} (−1)^{q−j} dim Hʲ`.
    pub lhs: i64,
    /// `k·Σ_{j≤q} (−1)^{q−j} ∫_{X(j)} density`.
    pub rhs: f64,
    /// `lhs − rhs`.
    pub margin: f64,
    pub margin_over_k: f64,
    /// Allowance for the `o(k)` term: `√k·ln k` for `q = 0`, `0` for `q = 1`.
    pub slack: f64,
    /// `(dim H⁰ − dim H¹) − (kd + 1)`, reported for `q = n`.
    pub euler_margin: Option<i64>,
}

impl StrongMorseRow {
    pub fn holds(&self) -> bool {
        self.margin <= self.slack + 1e-9 * self.k as f64 && self.euler_margin.unwrap_or(0) == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrongMorseReport {
    pub q: usize,
    /// `∫_{X(0)}` and `∫_{X(1)}` of the Morse density.
    pub integrals: [f64; 2],
    pub rows: Vec<StrongMorseRow>,
}

impl StrongMorseReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(StrongMorseRow::holds)
    }
}

/// Alternating sums of cohomology dimensions against signed Morse integrals
/// on the projective line.
pub fn strong_morse_report(
    chart: &ManifoldChart,
    k_list: &[u32],
    q: usize,
) -> Result<StrongMorseReport> {
    if chart.dim() != 1 {
        return Err(Error::Domain(
            "strong inequalities are implemented for curves".into(),
        ));
    }
    if q > 1 {
        return Err(Error::Domain(format!(
            "form degree {q} exceeds dimension 1"
        )));
    }
    if k_list.is_empty() || k_list.windows(2).any(|w| w[0] >= w[1]) || k_list[0] < 1 {
        return Err(Error::Domain(format!(
            "k_list must be positive and strictly increasing, got {k_list:?}"
        )));
    }
    let grid = density_grid()?;
    let integrals = [
        integrate_density(chart, 0, &grid)?.value,
        integrate_density(chart, 1, &grid)?.value,
    ];
    let d = chart.degree() as i64;
    let rows = k_list
        .par_iter()
        .map(|&k| {
            let sg = section_grid(k, chart.degree())?;
            let dims = [
                cohomology_space(chart, k, 0, &sg)?.dimension(),
                cohomology_space(chart, k, 1, &sg)?.dimension(),
            ];
            let kf = k as f64;
            let sign = |j: usize| if (q - j) % 2 == 0 { 1 } else { -1 };
            let lhs: i64 = (0..=q).map(|j| sign(j) * dims[j] as i64).sum();
            let rhs: f64 = kf * (0..=q).map(|j| sign(j) as f64 * integrals[j]).sum::<f64>();
            let margin = lhs as f64 - rhs;
            Ok(StrongMorseRow {
                k,
                q,
                dims,
                lhs,
                rhs,
                margin,
                margin_over_k: margin / kf,
                slack: if q == 0 { kf.sqrt() * kf.ln() } else { 0.0 },
                euler_margin: (q == 1)
                    .then(|| dims[0] as i64 - dims[1] as i64 - (k as i64 * d + 1)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StrongMorseReport { q, integrals, rows })
}
