//! Exact checks of the free-boson null-state identities.
//!
//! Everything here is done in charge units `q = λ/λ*`, in which the
//! conformal weight is `h = q²/4` and every coupling constant in the
//! boundary-condition-changing correlators is rational. No tolerances are
//! used: an identity passes iff its residual is exactly zero.

mod correlator;
mod fock;
mod identities;

pub use correlator::{
    check_deformed_null_on_correlator, check_deformed_null_with_rho, conformal_weight, partition_exponents,
    rho_coefficients, ChargeConfig, CorrelatorCheck, RationalEvaluator,
};
pub use fock::{apply_j, apply_l, FockVector, ModeAlgebra, Monomial, DEFAULT_TRUNCATION};
pub use identities::{
    check_m2_identity, check_m2_with_alpha, check_perturbed_identity, m2_alpha, IdentityCheck, PerturbedCheck,
    VerificationReport,
};

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

pub type Q = BigRational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CftError {
    #[error("charge q_{index} is zero")]
    ZeroCharge { index: usize },
    #[error("positions {a} and {b} coincide")]
    CoincidentPoints { a: usize, b: usize },
    #[error("index {index} out of range for {len} charges")]
    BadIndex { index: usize, len: usize },
    #[error("configuration needs at least one spectator charge")]
    NoSpectators,
    #[error("charges and positions differ in length ({charges} vs {positions})")]
    LengthMismatch { charges: usize, positions: usize },
    #[error("result would exceed truncation level {level}")]
    Truncation { level: u32 },
    #[error("s = 1 + 4πu must be positive, got {0}")]
    NonPositiveS(String),
    #[error("malformed rational {0:?}")]
    Parse(String),
}

/// Parses `"p/q"` or an integer into an exact rational.
pub fn parse_rational(s: &str) -> Result<Q, CftError> {
    let t = s.trim();
    let parsed = match t.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| CftError::Parse(s.into()))?;
            let q: BigInt = q.trim().parse().map_err(|_| CftError::Parse(s.into()))?;
            if q == BigInt::from(0) {
                return Err(CftError::Parse(s.into()));
            }
            Q::new(p, q)
        }
        None => Q::from_integer(t.parse::<BigInt>().map_err(|_| CftError::Parse(s.into()))?),
    };
    Ok(parsed)
}

/// Shorthand for the small rationals used throughout.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions() {
        assert_eq!(parse_rational("1/2").unwrap(), q(1, 2));
        assert_eq!(parse_rational(" -3/6 ").unwrap(), q(-1, 2));
        assert_eq!(parse_rational("7").unwrap(), q(7, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("half").is_err());
        assert!(parse_rational("1.5").is_err());
    }
}
