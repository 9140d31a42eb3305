//! Exact rational helpers and their report rendering.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("`{0}` is not a rational of the form p/q")]
pub struct RationalParseError(pub String);

/// `num / den` as a big rational. Panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn from_usize(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` or an integer `"p"`.
pub fn parse_rational(text: &str) -> Result<BigRational, RationalParseError> {
    let err = || RationalParseError(text.to_string());
    let (num, den) = match text.trim().split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text.trim(), "1"),
    };
    let num: BigInt = num.parse().map_err(|_| err())?;
    let den: BigInt = den.parse().map_err(|_| err())?;
    if den.is_zero() {
        return Err(err());
    }
    Ok(BigRational::new(num, den))
}

/// Always `"p/q"`, reduced, with a positive denominator (`"1/1"` for one).
pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn abs_diff(a: &BigRational, b: &BigRational) -> BigRational {
    (a - b).abs()
}

pub fn is_probability(r: &BigRational) -> bool {
    !r.is_negative() && r <= &BigRational::one()
}

/// An exact value with its decimal rendering, as written into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactValue {
    pub exact: String,
    pub decimal: f64,
}

impl From<&BigRational> for ExactValue {
    fn from(r: &BigRational) -> Self {
        Self {
            exact: format_rational(r),
            decimal: to_f64(r),
        }
    }
}

impl From<BigRational> for ExactValue {
    fn from(r: BigRational) -> Self {
        Self::from(&r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("6/13").unwrap(), ratio(6, 13));
        assert_eq!(parse_rational(" 4/8 ").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("3").unwrap(), ratio(3, 1));
        assert_eq!(format_rational(&ratio(2, 4)), "1/2");
        assert_eq!(format_rational(&ratio(1, 1)), "1/1");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("0.5").is_err());
    }
}
