use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

const MIN_NODES: usize = 4;
/// Above this the Laguerre weights underflow `f64`.
const MAX_LAGUERRE: usize = 150;

/// Radial profile a plane grid is tuned for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decay {
    /// Rational decay like `(1+|z|²)^{-m}`; nodes from `t = r²/(1+r²)`.
    Projective,
    /// `e^{-c|z|²}`; Gauss–Laguerre nodes in `c·r²`.
    Gaussian { exponent: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum GridDomain {
    Plane(Decay),
    Disc { radius: f64 },
}

/// Tensor-product polar rule on the plane or on a disc.
///
/// Nodes are stored ring by ring, each ring holding `angular_count` points at
/// angles `2πl/angular_count`.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    nodes: Vec<Complex64>,
    weights: Vec<f64>,
    radii: Vec<f64>,
    radial_count: usize,
    angular_count: usize,
    domain: GridDomain,
}

impl QuadratureGrid {
    fn from_rings(
        radii_sq: &[f64],
        ring_weights: &[f64],
        angular: usize,
        domain: GridDomain,
    ) -> Self {
        let dtheta = 2.0 * PI / angular as f64;
        let mut nodes = Vec::with_capacity(radii_sq.len() * angular);
        let mut weights = Vec::with_capacity(radii_sq.len() * angular);
        let mut radii = Vec::with_capacity(radii_sq.len());
        for (&u, &w) in radii_sq.iter().zip(ring_weights) {
            let r = u.sqrt();
            radii.push(r);
            for l in 0..angular {
                nodes.push(Complex64::from_polar(r, dtheta * l as f64));
                weights.push(w * dtheta);
            }
        }
        Self {
            nodes,
            weights,
            radii,
            radial_count: radii_sq.len(),
            angular_count: angular,
            domain,
        }
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Distinct ring radii, innermost first.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn radial_count(&self) -> usize {
        self.radial_count
    }

    pub fn angular_count(&self) -> usize {
        self.angular_count
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest total degree `j` such that `r^{2j}`-type radial factors and
    /// angular frequencies up to `j` are resolved.
    pub fn degree_budget(&self) -> usize {
        (2 * self.radial_count - 1).min(self.angular_count - 1)
    }

    pub fn require_budget(&self, needed: usize) -> Result<()> {
        if self.degree_budget() < needed {
            return Err(Error::Capacity(format!(
                "grid degree budget {} is below the required {needed} ({} radial × {} angular nodes)",
                self.degree_budget(),
                self.radial_count,
                self.angular_count
            )));
        }
        Ok(())
    }

    /// `Σ wᵢ f(zᵢ)` in node order.
    pub fn integrate(&self, f: impl Fn(Complex64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }

    pub fn integrate_complex(&self, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| f(z) * w)
            .sum()
    }

    /// Integrates precomputed node values, one per node.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

fn check_counts(radial: usize, angular: usize) -> Result<()> {
    if radial < MIN_NODES || angular < MIN_NODES {
        return Err(Error::Capacity(format!(
            "quadrature needs at least {MIN_NODES} radial and angular nodes, got {radial} × {angular}"
        )));
    }
    Ok(())
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Laguerre nodes and weights for `∫_0^∞ f(x) e^{-x} dx`, ascending.
///
/// Starting values come from the Jacobi matrix eigenvalues and are then
/// polished by Newton on the three-term recurrence.
pub fn gauss_laguerre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || n > MAX_LAGUERRE {
        return Err(Error::Capacity(format!(
            "Gauss–Laguerre rule supports 1..={MAX_LAGUERRE} nodes, got {n}"
        )));
    }
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 * i as f64 + 1.0
        } else if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).max(0.0)
        } else {
            0.0
        }
    });
    let mut x: Vec<f64> = SymmetricEigen::new(jacobi)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    x.sort_by(f64::total_cmp);
    let mut w = Vec::with_capacity(n);
    for xi in x.iter_mut() {
        for _ in 0..50 {
            let (l, dl) = laguerre_with_derivative(n, *xi);
            let dx = l / dl;
            *xi -= dx;
            if dx.abs() <= 1e-15 * xi.abs().max(1.0) {
                break;
            }
        }
        let (_, dl) = laguerre_with_derivative(n, *xi);
        w.push(1.0 / (*xi * dl * dl));
    }
    Ok((x, w))
}

fn laguerre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut l0, mut l1) = (1.0, 1.0 - x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 - x) * l1 - kf * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    (l1, n as f64 * (l1 - l0) / x)
}

/// Grid on all of `C` tuned to the given decay profile.
pub fn plane_quadrature(
    radial_count: usize,
    angular_count: usize,
    decay: Decay,
) -> Result<QuadratureGrid> {
    check_counts(radial_count, angular_count)?;
    let (radii_sq, ring_weights): (Vec<f64>, Vec<f64>) = match decay {
        Decay::Projective => {
            // dA = ½ d(r²) dθ and d(r²) = dt/(1-t)².
            let (x, w) = gauss_legendre(radial_count);
            x.iter()
                .zip(&w)
                .map(|(&xi, &wi)| {
                    let t = 0.5 * (xi + 1.0);
                    let s = 1.0 - t;
                    (t / s, 0.25 * wi / (s * s))
                })
                .unzip()
        }
        Decay::Gaussian { exponent } => {
            if !(exponent > 0.0) || !exponent.is_finite() {
                return Err(Error::Domain(format!(
                    "gaussian decay exponent must be > 0, got {exponent}"
                )));
            }
            let (x, w) = gauss_laguerre(radial_count)?;
            x.iter()
                .zip(&w)
                .map(|(&xi, &wi)| (xi / exponent, 0.5 * wi * xi.exp() / exponent))
                .unzip()
        }
    };
    Ok(QuadratureGrid::from_rings(
        &radii_sq,
        &ring_weights,
        angular_count,
        GridDomain::Plane(decay),
    ))
}

/// Grid on the disc `|z| < radius`, Gauss–Legendre in `r²`.
pub fn disc_quadrature(
    radial_count: usize,
    angular_count: usize,
    radius: f64,
) -> Result<QuadratureGrid> {
    disc_quadrature_panels(&[radius], radial_count, angular_count)
}

/// Disc grid split into annular panels at the given increasing radii (the
/// last one is the disc radius), with `per_panel` Gauss–Legendre nodes in
/// `r²` on each. Used for integrands that are only piecewise smooth.
pub fn disc_quadrature_panels(
    breaks: &[f64],
    per_panel: usize,
    angular_count: usize,
) -> Result<QuadratureGrid> {
    check_counts(per_panel, angular_count)?;
    let radius = match breaks.last() {
        Some(&r) => r,
        None => return Err(Error::Domain("disc grid needs at least one radius".into())),
    };
    let mut prev = 0.0;
    for &b in breaks {
        if !(b > prev) || !b.is_finite() {
            return Err(Error::Domain(format!(
                "panel radii must be positive and increasing, got {breaks:?}"
            )));
        }
        prev = b;
    }
    let (x, w) = gauss_legendre(per_panel);
    let mut radii_sq = Vec::with_capacity(per_panel * breaks.len());
    let mut ring_weights = Vec::with_capacity(per_panel * breaks.len());
    let mut lo = 0.0;
    for &b in breaks {
        let hi = b * b;
        let half = 0.5 * (hi - lo);
        for (&xi, &wi) in x.iter().zip(&w) {
            radii_sq.push(lo + half * (xi + 1.0));
            ring_weights.push(0.5 * wi * half);
        }
        lo = hi;
    }
    Ok(QuadratureGrid::from_rings(
        &radii_sq,
        &ring_weights,
        angular_count,
        GridDomain::Disc { radius },
    ))
}
