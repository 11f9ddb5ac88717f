//! Exact rational scalars and their string forms.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// `2^e` for any signed exponent.
pub fn pow2(e: i64) -> Rational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // huge magnitudes only; fall back through the integer parts
        let n = x.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = x.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Exact conversion of a finite float.
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::InvalidArgument(format!("non-finite value {x}")))
}

/// Rounds to the nearest multiple of `2^-bits`.
pub fn round_dyadic(x: f64, bits: u32) -> Rational {
    let scale = (1u64 << bits) as f64;
    let k = (x * scale).round() as i64;
    ratio(k, 1i64 << bits)
}

/// A multiple of `2^-bits` at least `x(1 + 1e-9)`; a sound rational upper
/// bound for a float norm computed with rounding error.
pub fn upper_bound(x: f64, bits: u32) -> Rational {
    let scale = (1u64 << bits) as f64;
    let k = (x.abs() * (1.0 + 1e-9) * scale).ceil() as i64 + 1;
    ratio(k, 1i64 << bits)
}

pub fn abs(x: &Rational) -> Rational {
    x.abs()
}

pub fn max(a: Rational, b: Rational) -> Rational {
    if a >= b {
        a
    } else {
        b
    }
}

/// Exponent `q` when the denominator is `2^q`.
pub fn dyadic_exponent(x: &Rational) -> Option<u64> {
    let d = x.denom();
    if d.is_zero() {
        return None;
    }
    let tz = d.trailing_zeros().unwrap_or(0);
    if (d >> tz).is_one() {
        Some(tz)
    } else {
        None
    }
}

/// `"p/q"`, or just `"p"` for integers.
pub fn format(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// `"p/2^q"` when the value is dyadic, otherwise `"p/q"`.
pub fn format_dyadic(x: &Rational) -> String {
    match dyadic_exponent(x) {
        Some(0) => x.numer().to_string(),
        Some(q) => format!("{}/2^{}", x.numer(), q),
        None => format(x),
    }
}

/// Accepts `p`, `p/q`, `p/2^q` and decimal literals.
pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = d.trim();
        let d = if let Some(e) = d.strip_prefix("2^") {
            let e: u32 = e.parse().map_err(|_| bad())?;
            BigInt::one() << e
        } else {
            BigInt::from_str(d).map_err(|_| bad())?
        };
        if d.is_zero() {
            return Err(bad());
        }
        Ok(Rational::new(n, d))
    } else if let Ok(n) = BigInt::from_str(s) {
        Ok(Rational::from_integer(n))
    } else {
        let v: f64 = s.parse().map_err(|_| bad())?;
        decimal(s).or_else(|| Rational::from_float(v)).ok_or_else(bad)
    }
}

fn decimal(s: &str) -> Option<Rational> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (w, f) = body.split_once('.')?;
    if !w.chars().chain(f.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{w}{f}");
    let n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    let d = num_traits::pow(BigInt::from(10), f.len());
    let r = Rational::new(n, d);
    Some(if neg { -r } else { r })
}

/// Serde adapters storing rationals as strings.
pub mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_rational_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(format_dyadic))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter().map(|s| parse(s).map_err(serde::de::Error::custom)).collect()
    }
}

pub mod serde_rational_opt {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(x) => s.serialize_some(&format(x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?.map(|s| parse(&s).map_err(serde::de::Error::custom)).transpose()
    }
}
