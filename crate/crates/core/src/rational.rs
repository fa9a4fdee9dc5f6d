//! Exact rational arithmetic shared by the cover and certificate machinery.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serializer};
use std::str::FromStr;

/// Arbitrary-precision rational number. Cover weights, fractional chromatic
/// numbers, and exact certificates all use this type so that no tolerance is
/// ever involved.
pub type Rational = BigRational;

/// Builds `p/q`. Panics if `q == 0`.
pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Builds the integer `n` as a rational.
pub fn int(n: i64) -> Rational {
    Rational::from(BigInt::from(n))
}

/// Converts to `f64`, saturating on overflow; exact rationals in this crate
/// stay far away from that regime.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Renders in the `p/q` wire format (`"3/2"`, `"-1/3"`, plain `"2"` for
/// integers) used by cover JSON.
pub fn format(r: &Rational) -> String {
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses the `p/q` wire format. Accepts an optional sign on the numerator
/// and a plain integer with no slash.
pub fn parse(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    let mk = |t: &str| BigInt::from_str(t).map_err(|e| format!("bad integer {t:?}: {e}"));
    match s.split_once('/') {
        None => Ok(Rational::from(mk(s)?)),
        Some((p, q)) => {
            let denom = mk(q)?;
            if denom.is_zero() {
                return Err(format!("zero denominator in {s:?}"));
            }
            Ok(Rational::new(mk(p)?, denom))
        }
    }
}

/// Serde adapter: (de)serializes a [`Rational`] as its `p/q` string.
pub mod serde_ratio {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = String::deserialize(d)?;
        parse(&raw).map_err(de::Error::custom)
    }
}

/// `true` when `r` lies in the closed unit interval.
pub fn in_unit_interval(r: &Rational) -> bool {
    !r.is_negative() && r <= &int(1)
}
