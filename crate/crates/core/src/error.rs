use thiserror::Error;

/// Errors raised by the analysis routines.
///
/// Every variant corresponds to a violated precondition; none of them are
/// transient.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} must be {requirement}, got {value}")]
    Domain {
        what: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("{what} = {value} is outside the supported range (at most {max})")]
    Range {
        what: &'static str,
        value: u64,
        max: u64,
    },

    #[error(
        "exact MU-CSA expansion over {pairs} pairs needs 2^{} subset terms; \
         at most {max} pairs are supported, use the sampled-status estimator instead",
        2 * pairs - 1
    )]
    SubsetExplosion { pairs: usize, max: usize },

    #[error("estimate at {rho_db} dB is {value}; increase the number of trials")]
    NonPositiveEstimate { rho_db: f64, value: f64 },

    #[error("{0}")]
    Invalid(String),

    #[error("quadrature did not converge: estimate {value} with error {abs_error} after {intervals} intervals")]
    Quadrature {
        value: f64,
        abs_error: f64,
        intervals: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, requirement: &'static str, value: f64) -> Error {
    Error::Domain {
        what,
        requirement,
        value,
    }
}

/// Checks `value > 0` (and not NaN).
pub(crate) fn positive(what: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 {
        Ok(value)
    } else {
        Err(domain(what, "positive", value))
    }
}

/// Checks `value >= 0` (and not NaN).
pub(crate) fn nonnegative(what: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(domain(what, "nonnegative", value))
    }
}
