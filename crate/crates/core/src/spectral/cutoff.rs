use crate::error::{Error, Result};

/// `χ(r) = 1 − s(2r/ρ − 1)` with the quintic smoothstep `s`, so that `χ ≡ 1`
/// on `[0, ρ/2]`, `χ ≡ 0` on `[ρ, ∞)` and `χ ∈ C²`. `ρ` is the scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffFunction {
    scale: f64,
}

/// `sup|χ'|` for the unit-scale profile, attained at `r = 3/4`.
pub const UNIT_SUP_DERIVATIVE: f64 = 3.75;

fn smoothstep(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if x >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let x2 = x * x;
        (
            x2 * x * (10.0 - 15.0 * x + 6.0 * x2),
            30.0 * x2 * (1.0 - x) * (1.0 - x),
            60.0 * x * (1.0 - 3.0 * x + 2.0 * x2),
        )
    }
}

impl Default for CutoffFunction {
    fn default() -> Self {
        Self { scale: 1.0 }
    }
}

impl CutoffFunction {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Domain(format!(
                "cutoff scale must be positive, got {scale}"
            )));
        }
        Ok(Self { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `(χ, χ', χ'')` at radius `r ≥ 0`.
    pub fn jet(&self, r: f64) -> (f64, f64, f64) {
        let (s, ds, dds) = smoothstep(2.0 * r / self.scale - 1.0);
        let c = 2.0 / self.scale;
        (1.0 - s, -c * ds, -c * c * dds)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).0
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.jet(r).1
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        self.jet(r).2
    }

    pub fn sup_derivative(&self) -> f64 {
        UNIT_SUP_DERIVATIVE / self.scale
    }

    /// Radius beyond which `χ` vanishes.
    pub fn support(&self) -> f64 {
        self.scale
    }

    /// Radius up to which `χ ≡ 1`.
    pub fn plateau(&self) -> f64 {
        0.5 * self.scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plateau_and_support() {
        let chi = CutoffFunction::default();
        assert_eq!(chi.value(0.0), 1.0);
        assert_eq!(chi.value(0.5), 1.0);
        assert_eq!(chi.value(1.0), 0.0);
        assert_eq!(chi.value(3.0), 0.0);
        assert!((chi.value(0.75) - 0.5).abs() < 1e-15);
        assert!((chi.derivative(0.75).abs() - UNIT_SUP_DERIVATIVE).abs() < 1e-12);
        assert!(CutoffFunction::new(0.0).is_err());
    }

    #[test]
    fn derivatives_match_differences() {
        let chi = CutoffFunction::new(2.5).unwrap();
        let h = 1e-6;
        for r in [1.3, 1.6, 1.9, 2.2] {
            let fd1 = (chi.value(r + h) - chi.value(r - h)) / (2.0 * h);
            let fd2 = (chi.derivative(r + h) - chi.derivative(r - h)) / (2.0 * h);
            assert!((fd1 - chi.derivative(r)).abs() < 1e-7);
            assert!((fd2 - chi.second_derivative(r)).abs() < 1e-6);
        }
    }

    #[test]
    fn twice_continuously_differentiable_at_joins() {
        let chi = CutoffFunction::default();
        for r in [0.5, 1.0] {
            let (a, b) = (chi.jet(r - 1e-12), chi.jet(r + 1e-12));
            assert!(
                (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9 && (a.2 - b.2).abs() < 1e-9
            );
        }
    }

    proptest! {
        #[test]
        fn bounded_between_zero_and_one(r in 0.0f64..5.0, scale in 0.1f64..10.0) {
            let chi = CutoffFunction::new(scale).unwrap();
            let v = chi.value(r);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!(chi.derivative(r).abs() <= chi.sup_derivative() * (1.0 + 1e-12));
            prop_assert!(chi.derivative(r) <= 0.0);
        }
    }
}
