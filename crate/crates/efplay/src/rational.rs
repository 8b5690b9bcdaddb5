//! Exact rational arithmetic helpers.
//!
//! Probabilities and payoffs are `BigRational` end to end; floating point only
//! appears in the self-play trainer and in report output. Input files spell
//! rationals as `"p/q"` strings (or a bare integer); decimals are rejected so
//! that values like `20/41` survive round-trips unrounded.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Rational = BigRational;

/// Shorthand constructor used pervasively in code and tests.
pub fn rat(numer: i64, denom: i64) -> Rational {
    assert!(denom != 0, "rational with zero denominator");
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("`{input}` is not a rational: {reason}")]
pub struct ParseRationalError {
    pub input: String,
    pub reason: String,
}

fn parse_err(input: &str, reason: &str) -> ParseRationalError {
    ParseRationalError {
        input: input.to_owned(),
        reason: reason.to_owned(),
    }
}

/// Parses `"p/q"` or a bare integer `"p"`. Anything else — in particular
/// decimal notation like `"1.1"` — is an error.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let mut parts = s.splitn(2, '/');
    let numer_str = parts.next().unwrap_or("");
    let numer: BigInt = numer_str
        .parse()
        .map_err(|_| parse_err(s, "numerator is not an integer"))?;
    match parts.next() {
        None => Ok(Rational::from(numer)),
        Some(denom_str) => {
            let denom: BigInt = denom_str
                .parse()
                .map_err(|_| parse_err(s, "denominator is not an integer"))?;
            if denom.is_zero() {
                return Err(parse_err(s, "denominator is zero"));
            }
            Ok(Rational::new(numer, denom))
        }
    }
}

/// Canonical text form: reduced, positive denominator, `"p"` when the
/// denominator is 1 and `"p/q"` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Out-of-range conversions only happen for absurd inputs; saturate.
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// A rational that serializes as its canonical `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frac(pub Rational);

impl From<Rational> for Frac {
    fn from(r: Rational) -> Self {
        Frac(r)
    }
}

impl Serialize for Frac {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for Frac {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_rational(&s)
            .map(Frac)
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_integers_and_fractions() {
        assert_eq!(parse_rational("1").unwrap(), rat(1, 1));
        assert_eq!(parse_rational("-1").unwrap(), rat(-1, 1));
        assert_eq!(parse_rational("11/10").unwrap(), rat(11, 10));
        assert_eq!(parse_rational("20/41").unwrap(), rat(20, 41));
        assert_eq!(parse_rational("-2/4").unwrap(), rat(-1, 2));
        assert_eq!(parse_rational("3/-6").unwrap(), rat(-1, 2));
    }

    #[test]
    fn rejects_decimals_and_junk() {
        for bad in ["1.1", "", " 1", "1 ", "1/0", "a/b", "1/2/3", "1e3"] {
            assert!(parse_rational(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn canonical_format() {
        assert_eq!(format_rational(&rat(11, 10)), "11/10");
        assert_eq!(format_rational(&rat(-4, 2)), "-2");
        assert_eq!(format_rational(&rat(1, -2)), "-1/2");
    }

    #[test]
    fn frac_round_trips_through_json() {
        let f = Frac(rat(20, 41));
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, "\"20/41\"");
        assert_eq!(serde_json::from_str::<Frac>(&json).unwrap(), f);
        assert!(serde_json::from_str::<Frac>("\"1.1\"").is_err());
    }
}
