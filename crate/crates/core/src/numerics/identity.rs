use std::f64::consts::PI;

use super::{integrate, Probability, Tolerance};
use crate::error::{domain, positive, Error, Result};

/// Largest `M` and `n` accepted by [`alternating_moment`].
pub const ALTERNATING_MOMENT_MAX: u32 = 20;

/// Upper limit of the half-line integrals; the Gaussian weight is below
/// 1e-347 beyond it.
const HALF_LINE_END: f64 = 40.0;

/// Exact value of `A(M, n) = sum_{m=0}^{M} C(M, m) m^n (-1)^m`.
///
/// `A(M, n)` vanishes for every `n < M` and equals `(-1)^M M!` at `n = M`;
/// that pattern is what makes the product integral decay like `rho^-M`.
pub fn alternating_moment(m_count: u32, n: u32) -> Result<i128> {
    for (what, value) in [("M", m_count), ("n", n)] {
        if value > ALTERNATING_MOMENT_MAX {
            return Err(Error::Range {
                what,
                value: value.into(),
                max: ALTERNATING_MOMENT_MAX.into(),
            });
        }
    }
    let overflow = || Error::Range {
        what: "A(M, n) intermediate",
        value: u64::MAX,
        max: i128::MAX as u64,
    };
    let mut total: i128 = 0;
    let mut binom: i128 = 1;
    for m in 0..=i128::from(m_count) {
        let power = m.checked_pow(n).ok_or_else(overflow)?;
        let term = binom.checked_mul(power).ok_or_else(overflow)?;
        total = if m % 2 == 0 {
            total.checked_add(term)
        } else {
            total.checked_sub(term)
        }
        .ok_or_else(overflow)?;
        binom = binom * (i128::from(m_count) - m) / (m + 1);
    }
    Ok(total)
}

/// Evaluates `∫_0^∞ ∏_i (1 - exp(-k_i v² / rho)) φ(v) dv` with φ the
/// standard normal density, by adaptive quadrature on `[0, 40]`.
///
/// The result decays like `rho^-len(k)`. Accuracy is 1e-12 relative, which
/// also bounds the absolute error by 1e-12.
pub fn lemma1_integral(k: &[f64], rho: f64) -> Result<Probability> {
    if k.is_empty() {
        return Err(Error::Invalid("lemma integral needs at least one k".into()));
    }
    for &ki in k {
        if !(ki > 0.0 && ki.is_finite()) {
            return Err(domain("k", "positive and finite", ki));
        }
    }
    positive("rho", rho)?;
    let scaled: Vec<f64> = k.iter().map(|ki| ki / rho).collect();
    let norm = 1.0 / (2.0 * PI).sqrt();
    let integrand = |v: f64| {
        let v2 = v * v;
        let product: f64 = scaled.iter().map(|s| -(-s * v2).exp_m1()).product();
        product * norm * (-0.5 * v2).exp()
    };
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-12,
    };
    let r = integrate(integrand, 0.0, HALF_LINE_END, tol)?;
    Probability::new(r.value.clamp(0.0, 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute-force expansion of the product into Gaussian moments:
    /// `½ Σ_S (-1)^|S| (1 + 2 Σ_{i∈S} k_i / rho)^{-1/2}`.
    /// Only trustworthy while the alternating sum does not cancel badly.
    fn subset_expansion(k: &[f64], rho: f64) -> f64 {
        let mut total = 0.0;
        for mask in 0u32..(1 << k.len()) {
            let sum: f64 = (0..k.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| k[i])
                .sum();
            let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * (1.0 + 2.0 * sum / rho).powf(-0.5);
        }
        0.5 * total
    }

    #[test]
    fn alternating_moment_spot_values() {
        assert_eq!(alternating_moment(1, 1).unwrap(), -1);
        assert_eq!(alternating_moment(3, 0).unwrap(), 0);
        assert_eq!(alternating_moment(2, 2).unwrap(), 2);
        assert_eq!(alternating_moment(0, 0).unwrap(), 1);
    }

    #[test]
    fn alternating_moment_vanishes_below_the_diagonal() {
        for m in 1..=15u32 {
            for n in 0..m {
                assert_eq!(alternating_moment(m, n).unwrap(), 0, "A({m},{n})");
            }
            let diag = alternating_moment(m, m).unwrap();
            assert_ne!(diag, 0);
            let factorial: i128 = (1..=i128::from(m)).product();
            let sign = if m % 2 == 0 { 1 } else { -1 };
            assert_eq!(diag, sign * factorial);
        }
    }

    #[test]
    fn alternating_moment_full_range_fits() {
        assert_eq!(
            alternating_moment(20, 20).unwrap(),
            (1..=20i128).product::<i128>()
        );
        assert!(alternating_moment(20, 20).is_ok());
        assert!(matches!(
            alternating_moment(21, 3),
            Err(Error::Range { .. })
        ));
        assert!(alternating_moment(3, 21).is_err());
    }

    #[test]
    fn single_factor_closed_form() {
        for &rho in &[0.1, 1.0, 10.0, 1e3, 1e6] {
            let closed = 0.5 * (1.0 - (1.0_f64 + 2.0 / rho).powf(-0.5));
            let got = lemma1_integral(&[1.0], rho).unwrap().value();
            assert!((got - closed).abs() <= 1e-12, "rho {rho}: {got} vs {closed}");
        }
    }

    #[test]
    fn mixed_k_against_subset_expansion() {
        let k = [0.5, 1.0, 3.0];
        for &rho in &[0.5, 2.0, 10.0] {
            let oracle = subset_expansion(&k, rho);
            let got = lemma1_integral(&k, rho).unwrap().value();
            assert!((got - oracle).abs() <= 1e-12, "rho {rho}: {got} vs {oracle}");
        }
    }

    #[test]
    fn vanishes_as_rho_grows() {
        assert!(lemma1_integral(&[1.0], 1e12).unwrap().value() < 1e-12);
    }

    #[test]
    fn log_ratio_between_ten_and_hundred() {
        // Subset expansion at rho = 10 and 100 gives a log10-ratio of
        // -1.8323; the -2 asymptote is only reached at larger rho.
        let lo = lemma1_integral(&[1.0, 1.0], 10.0).unwrap().value();
        let hi = lemma1_integral(&[1.0, 1.0], 100.0).unwrap().value();
        let ratio = (hi / lo).log10();
        let oracle = (subset_expansion(&[1.0, 1.0], 100.0) / subset_expansion(&[1.0, 1.0], 10.0)).log10();
        assert!((ratio - oracle).abs() < 1e-8);
        assert!((ratio - (-1.832_336_553)).abs() < 1e-6);
    }

    #[test]
    fn asymptotic_order_matches_factor_count() {
        for m in 1..=3usize {
            let k = vec![1.0; m];
            let a = lemma1_integral(&k, 1e4).unwrap().value();
            let b = lemma1_integral(&k, 1e6).unwrap().value();
            let slope = (b / a).ln() / (1e6f64 / 1e4).ln();
            assert!((slope + m as f64).abs() < 0.1, "M={m}: slope {slope}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(lemma1_integral(&[], 1.0).is_err());
        assert!(lemma1_integral(&[1.0, 0.0], 1.0).is_err());
        assert!(lemma1_integral(&[1.0], -1.0).is_err());
        assert!(lemma1_integral(&[1.0], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_rho_and_k(k in prop::collection::vec(0.05f64..10.0, 1..4),
                                 rho in 0.1f64..1e4, bump in 1.01f64..5.0, idx in 0usize..4) {
            let base = lemma1_integral(&k, rho).unwrap().value();
            let higher_rho = lemma1_integral(&k, rho * bump).unwrap().value();
            prop_assert!(higher_rho <= base * (1.0 + 1e-10));
            let mut k2 = k.clone();
            let i = idx % k2.len();
            k2[i] *= bump;
            let higher_k = lemma1_integral(&k2, rho).unwrap().value();
            prop_assert!(higher_k >= base * (1.0 - 1e-10));
        }

        #[test]
        fn min_and_max_k_sandwich(k in prop::collection::vec(0.05f64..10.0, 1..4), rho in 0.1f64..1e4) {
            let lo = k.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = k.iter().cloned().fold(0.0, f64::max);
            let mixed = lemma1_integral(&k, rho).unwrap().value();
            let with_min = lemma1_integral(&vec![lo; k.len()], rho).unwrap().value();
            let with_max = lemma1_integral(&vec![hi; k.len()], rho).unwrap().value();
            // The integrand grows with every k_i, so min-k bounds from below.
            prop_assert!(with_min <= mixed * (1.0 + 1e-10));
            prop_assert!(mixed <= with_max * (1.0 + 1e-10));
        }
    }
}
