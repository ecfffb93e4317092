use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Largest number of complex variables a polynomial may carry.
pub const MAX_VARS: usize = 3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `z^a z̄^b` with `a`, `b` exponent vectors over at most three variables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub z: [u16; MAX_VARS],
    pub zbar: [u16; MAX_VARS],
}

impl Monomial {
    pub const ONE: Monomial = Monomial {
        z: [0; MAX_VARS],
        zbar: [0; MAX_VARS],
    };

    pub fn new(z: [u16; MAX_VARS], zbar: [u16; MAX_VARS]) -> Self {
        Self { z, zbar }
    }

    /// Builds from slices shorter than [`MAX_VARS`], padding with zeros.
    pub fn from_slices(z: &[u16], zbar: &[u16]) -> Self {
        let mut m = Self::ONE;
        m.z[..z.len()].copy_from_slice(z);
        m.zbar[..zbar.len()].copy_from_slice(zbar);
        m
    }

    pub fn degree(&self) -> usize {
        self.z.iter().chain(&self.zbar).map(|&e| e as usize).sum()
    }

    /// Angular charge `a − b`; monomials with different charges are
    /// orthogonal against any radial weight.
    pub fn charge(&self) -> [i32; MAX_VARS] {
        std::array::from_fn(|i| self.z[i] as i32 - self.zbar[i] as i32)
    }

    pub fn is_holomorphic(&self) -> bool {
        self.zbar.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            z: std::array::from_fn(|i| self.z[i] + other.z[i]),
            zbar: std::array::from_fn(|i| self.zbar[i] + other.zbar[i]),
        }
    }

    /// Exchanges the roles of `z` and `z̄`.
    pub fn conj(&self) -> Monomial {
        Monomial {
            z: self.zbar,
            zbar: self.z,
        }
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        let mut v = Complex64::new(1.0, 0.0);
        for (i, zi) in z.iter().enumerate().take(MAX_VARS) {
            if self.z[i] > 0 {
                v *= zi.powu(self.z[i] as u32);
            }
            if self.zbar[i] > 0 {
                v *= zi.conj().powu(self.zbar[i] as u32);
            }
        }
        v
    }

    fn highest_axis(&self) -> Option<usize> {
        (0..MAX_VARS)
            .rev()
            .find(|&i| self.z[i] > 0 || self.zbar[i] > 0)
    }
}

/// Sparse polynomial in `z₁..z₃, z̄₁..z̄₃` with complex coefficients.
///
/// Coefficients that become exactly zero are dropped, so `is_zero` is an
/// exact test.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Complex64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        Self::term(Monomial::ONE, c)
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn term(m: Monomial, c: Complex64) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    /// The coordinate `zᵢ`.
    pub fn z(i: usize) -> Self {
        Self::one().mul_z(i)
    }

    /// The coordinate `z̄ᵢ`.
    pub fn zbar(i: usize) -> Self {
        Self::one().mul_zbar(i)
    }

    pub fn add_term(&mut self, m: Monomial, c: Complex64) {
        if c == ZERO {
            return;
        }
        let entry = self.terms.entry(m).or_insert(ZERO);
        *entry += c;
        if *entry == ZERO {
            self.terms.remove(&m);
        }
    }

    pub fn coeff(&self, m: &Monomial) -> Complex64 {
        self.terms.get(m).copied().unwrap_or(ZERO)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Number of variables actually used.
    pub fn vars_used(&self) -> usize {
        self.terms
            .keys()
            .filter_map(Monomial::highest_axis)
            .max()
            .map_or(0, |i| i + 1)
    }

    pub fn is_holomorphic(&self) -> bool {
        self.terms.keys().all(Monomial::is_holomorphic)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero();
        for (m, v) in &self.terms {
            out.add_term(*m, v * c);
        }
        out
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    /// `∂/∂zᵢ`.
    pub fn d_z(&self, i: usize) -> Self {
        check_axis(i);
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            if m.z[i] > 0 {
                let mut d = *m;
                d.z[i] -= 1;
                out.add_term(d, c * m.z[i] as f64);
            }
        }
        out
    }

    /// `∂/∂z̄ᵢ`.
    pub fn d_zbar(&self, i: usize) -> Self {
        check_axis(i);
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            if m.zbar[i] > 0 {
                let mut d = *m;
                d.zbar[i] -= 1;
                out.add_term(d, c * m.zbar[i] as f64);
            }
        }
        out
    }

    pub fn mul_z(&self, i: usize) -> Self {
        check_axis(i);
        self.map_monomials(|m| m.z[i] += 1)
    }

    pub fn mul_zbar(&self, i: usize) -> Self {
        check_axis(i);
        self.map_monomials(|m| m.zbar[i] += 1)
    }

    fn map_monomials(&self, f: impl Fn(&mut Monomial)) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut m = *m;
                f(&mut m);
                (m, *c)
            })
            .collect();
        Self { terms }
    }

    /// Complex conjugate as a function: `conj(c)·z̄^a z^b` for each term.
    pub fn conj(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.conj(), c.conj()))
                .collect(),
        }
    }

    /// Replaces `zᵢ` by `t·zᵢ` and `z̄ᵢ` by `t·z̄ᵢ` for every `i`, for real `t`.
    pub fn dilate(&self, t: f64) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term(*m, c * t.powi(m.degree() as i32));
        }
        out
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.terms.iter().map(|(m, c)| c * m.eval(z)).sum()
    }

    /// Fails with a capacity error when the degree exceeds `budget`.
    pub fn check_degree(&self, budget: usize) -> Result<()> {
        let d = self.degree();
        if d > budget {
            return Err(Error::Capacity(format!(
                "polynomial degree {d} exceeds budget {budget}"
            )));
        }
        Ok(())
    }
}

fn check_axis(i: usize) {
    assert!(
        i < MAX_VARS,
        "axis {i} out of range: at most {MAX_VARS} variables"
    );
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, *c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, -c);
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        self.scale_real(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: Polynomial) -> Polynomial {
                (&self).$f(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if c.im == 0.0 {
                write!(f, "{}", c.re)?;
            } else {
                write!(f, "({}{:+}i)", c.re, c.im)?;
            }
            for i in 0..MAX_VARS {
                match m.z[i] {
                    0 => {}
                    1 => write!(f, "·z{}", i + 1)?,
                    e => write!(f, "·z{}^{e}", i + 1)?,
                }
                match m.zbar[i] {
                    0 => {}
                    1 => write!(f, "·z̄{}", i + 1)?,
                    e => write!(f, "·z̄{}^{e}", i + 1)?,
                }
            }
        }
        Ok(())
    }
}

/// `p(z, z̄)·exp(Σ cᵢ|zᵢ|²)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GaussianPoly {
    pub poly: Polynomial,
    pub exponent: [f64; MAX_VARS],
}

impl GaussianPoly {
    pub fn new(poly: Polynomial, exponent: &[f64]) -> Self {
        let mut e = [0.0; MAX_VARS];
        e[..exponent.len()].copy_from_slice(exponent);
        Self { poly, exponent: e }
    }

    pub fn polynomial(poly: Polynomial) -> Self {
        Self {
            poly,
            exponent: [0.0; MAX_VARS],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    /// `∂/∂z̄ᵢ (p E) = (∂_{z̄ᵢ}p + cᵢ zᵢ p) E`.
    pub fn d_zbar(&self, i: usize) -> Self {
        let p = &self.poly.d_zbar(i) + &self.poly.mul_z(i).scale_real(self.exponent[i]);
        Self {
            poly: p,
            exponent: self.exponent,
        }
    }

    /// `∂/∂zᵢ (p E) = (∂_{zᵢ}p + cᵢ z̄ᵢ p) E`.
    pub fn d_z(&self, i: usize) -> Self {
        let p = &self.poly.d_z(i) + &self.poly.mul_zbar(i).scale_real(self.exponent[i]);
        Self {
            poly: p,
            exponent: self.exponent,
        }
    }

    pub fn mul_z(&self, i: usize) -> Self {
        Self {
            poly: self.poly.mul_z(i),
            exponent: self.exponent,
        }
    }

    pub fn mul_zbar(&self, i: usize) -> Self {
        Self {
            poly: self.poly.mul_zbar(i),
            exponent: self.exponent,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            poly: self.poly.scale(c),
            exponent: self.exponent,
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    /// Sum of two terms sharing the same Gaussian factor.
    pub fn try_add(&self, other: &GaussianPoly) -> Result<GaussianPoly> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.exponent != other.exponent {
            return Err(Error::Domain(format!(
                "cannot add Gaussian factors {:?} and {:?}",
                self.exponent, other.exponent
            )));
        }
        Ok(Self {
            poly: &self.poly + &other.poly,
            exponent: self.exponent,
        })
    }

    pub fn try_sub(&self, other: &GaussianPoly) -> Result<GaussianPoly> {
        self.try_add(&other.scale_real(-1.0))
    }

    pub fn gaussian_factor(&self, z: &[Complex64]) -> f64 {
        z.iter()
            .zip(&self.exponent)
            .map(|(zi, c)| c * zi.norm_sqr())
            .sum::<f64>()
            .exp()
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.poly.eval(z) * self.gaussian_factor(z)
    }
}

/// Random polynomial in `n` variables with Gaussian-integer coefficients in
/// `[-3, 3] + i[-3, 3]` and total degree at most `max_degree`.
pub fn random_polynomial<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    max_degree: usize,
    max_terms: usize,
) -> Polynomial {
    assert!(n <= MAX_VARS);
    let mut p = Polynomial::zero();
    let count = rng.gen_range(1..=max_terms.max(1));
    for _ in 0..count {
        let mut m = Monomial::ONE;
        let deg = rng.gen_range(0..=max_degree);
        for _ in 0..deg {
            let i = rng.gen_range(0..n.max(1));
            if rng.gen_bool(0.5) {
                m.z[i] += 1;
            } else {
                m.zbar[i] += 1;
            }
        }
        let c = Complex64::new(rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64);
        p.add_term(m, c);
    }
    p
}
