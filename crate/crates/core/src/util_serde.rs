//! Serde helpers for exact rationals rendered as `"p/q"` strings.

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use serde::{Deserialize, Deserializer, Serializer};

pub fn ratio_string<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

pub fn parse_ratio(text: &str) -> Option<Rational64> {
    let text = text.trim();
    match text.split_once('/') {
        Some((p, q)) => {
            let q: i64 = q.trim().parse().ok()?;
            if q == 0 {
                return None;
            }
            Some(Rational64::new(p.trim().parse().ok()?, q))
        }
        None => Some(Rational64::from_integer(text.parse().ok()?)),
    }
}

pub mod rational64 {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational64, D::Error> {
        let text = String::deserialize(d)?;
        parse_ratio(&text).ok_or_else(|| serde::de::Error::custom(format!("bad rational {text:?}")))
    }
}

pub fn to_big(r: Rational64) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}
