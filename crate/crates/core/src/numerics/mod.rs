//! Special functions, quadrature and asymptotic slope estimation.
//!
//! Every detection probability in the crate is ultimately a Gaussian tail
//! value, so [`gaussian_q`] sits underneath everything else. The remaining
//! pieces support the high-SNR analysis: [`lemma1_integral`] evaluates the
//! product-form integral whose decay rate sets the diversity order,
//! [`alternating_moment`] is the exact combinatorial identity behind that
//! decay, and [`fit_diversity_slope`] turns a probability curve into a
//! diversity-order estimate.

mod identity;
mod quadrature;
mod slope;
mod special;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub use identity::{alternating_moment, lemma1_integral, ALTERNATING_MOMENT_MAX};
pub use quadrature::{integrate, Integral, Tolerance};
pub use slope::{fit_diversity_slope, SlopeFit};
pub use special::gaussian_q;

pub(crate) use special::q;

/// A probability, guaranteed to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);
    pub const HALF: Probability = Probability(0.5);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(domain("probability", "in [0, 1]", value))
        }
    }

    /// Wraps a value produced by an expansion that is a probability by
    /// construction; rounding excursions of a few ulps are clamped.
    pub(crate) fn from_expansion(value: f64) -> Self {
        debug_assert!(
            value > -1e-12 && value < 1.0 + 1e-12,
            "expansion left [0, 1]: {value}"
        );
        Probability(value.clamp(0.0, 1.0))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn complement(self) -> Self {
        Probability(1.0 - self.0)
    }

    /// Probability of two independent events both occurring.
    #[inline]
    pub fn and(self, other: Self) -> Self {
        Probability(self.0 * other.0)
    }
}

impl TryFrom<f64> for Probability {
    type Error = crate::Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl std::fmt::Display for Probability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_rejects_out_of_range() {
        assert!(Probability::new(-0.1).is_err());
        assert!(Probability::new(1.5).is_err());
        assert!(Probability::new(f64::NAN).is_err());
        assert_eq!(Probability::new(0.25).unwrap().value(), 0.25);
    }

    #[test]
    fn combinations_stay_in_range() {
        let p = Probability::new(0.3).unwrap();
        let q = Probability::new(0.9).unwrap();
        assert!((p.and(q).value() - 0.27).abs() < 1e-15);
        assert!((p.complement().value() - 0.7).abs() < 1e-15);
    }
}
