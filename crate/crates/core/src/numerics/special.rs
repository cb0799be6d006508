use std::f64::consts::FRAC_1_SQRT_2;

use super::Probability;
use crate::error::{domain, Result};

/// Standard normal tail probability `Q(x) = P(Z > x)`.
///
/// Evaluated through `Q(x) = erfc(x / sqrt(2)) / 2`, using the fdlibm
/// rational approximations of `erfc` (relative error below 1e-10 on
/// `|x| <= 8`, absolute error below 1e-16 beyond). Infinite arguments give
/// the limiting values; NaN is rejected.
pub fn gaussian_q(x: f64) -> Result<Probability> {
    if x.is_nan() {
        return Err(domain("Q-function argument", "a number", x));
    }
    Ok(Probability::from_expansion(q(x)))
}

/// Unchecked hot-path variant of [`gaussian_q`].
#[inline]
pub(crate) fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate, Tolerance};

    /// Tail integral of the standard normal density, computed by adaptive
    /// quadrature; independent of the erfc route.
    fn q_by_quadrature(x: f64) -> f64 {
        let density = |v: f64| (-0.5 * v * v).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let tol = Tolerance {
            abs: 0.0,
            rel: 1e-14,
        };
        if x >= 0.0 {
            integrate(density, x, x + 40.0, tol).unwrap().value
        } else {
            1.0 - integrate(density, -x, -x + 40.0, tol).unwrap().value
        }
    }

    #[test]
    fn trivial_values() {
        assert_eq!(gaussian_q(0.0).unwrap().value(), 0.5);
        assert_eq!(gaussian_q(f64::INFINITY).unwrap().value(), 0.0);
        assert_eq!(gaussian_q(f64::NEG_INFINITY).unwrap().value(), 1.0);
    }

    #[test]
    fn nan_is_a_domain_error() {
        assert!(matches!(
            gaussian_q(f64::NAN),
            Err(crate::Error::Domain { .. })
        ));
    }

    #[test]
    fn q_of_one_matches_quadrature() {
        let oracle = q_by_quadrature(1.0);
        // Frozen from the quadrature oracle.
        assert!((oracle - 0.158_655_253_931_457_05).abs() < 1e-15);
        let got = gaussian_q(1.0).unwrap().value();
        assert!(((got - oracle) / oracle).abs() < 1e-10, "{got} vs {oracle}");
    }

    #[test]
    fn relative_accuracy_on_grid() {
        let mut x = -8.0;
        while x <= 8.0 {
            let oracle = q_by_quadrature(x);
            let got = q(x);
            assert!(
                ((got - oracle) / oracle).abs() <= 1e-10,
                "x = {x}: {got} vs {oracle}"
            );
            x += 0.125;
        }
    }

    #[test]
    fn absolute_accuracy_in_the_far_tail() {
        for &x in &[8.5, 10.0, 15.0, 30.0] {
            assert!((q(x) - q_by_quadrature(x)).abs() <= 1e-16);
            assert!((q(-x) - (1.0 - q_by_quadrature(x))).abs() <= 1e-16);
        }
    }

    #[test]
    fn spot_value_for_hamming_distance_two() {
        // Q(sqrt(8)), oracle by quadrature.
        let oracle = q_by_quadrature(8f64.sqrt());
        assert!((oracle - 0.002_338_867_490_523_6).abs() < 1e-15);
        assert!((q(8f64.sqrt()) - oracle).abs() < 1e-15);
    }
}
