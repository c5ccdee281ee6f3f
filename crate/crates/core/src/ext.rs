//! Extended reals and number formatting.
//!
//! Bounds and mixing coefficients may be `+inf`. Internally these are plain
//! `f64::INFINITY`; on the wire they are the string `"inf"` because JSON has
//! no infinity literal.

use serde::de::{self, Deserializer, Visitor};
use serde::Serializer;
use std::fmt;

pub const INFINITE: f64 = f64::INFINITY;

pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
    if value.is_infinite() && *value > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*value)
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    struct ExtVisitor;

    impl<'de> Visitor<'de> for ExtVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or the string \"inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" | "infinite" | "+inf" => Ok(INFINITE),
                other => other
                    .parse()
                    .map_err(|_| E::custom(format!("not a number: {other:?}"))),
            }
        }
    }

    d.deserialize_any(ExtVisitor)
}

/// Serde helpers for `Vec<f64>` whose entries may be infinite.
pub mod vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super")] f64);

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let wrapped: Vec<Wrap> = values.iter().map(|&v| Wrap(v)).collect();
        wrapped.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let wrapped: Vec<Wrap> = Vec::deserialize(d)?;
        Ok(wrapped.into_iter().map(|w| w.0).collect())
    }
}

/// Formats `x` with seven significant digits; infinities print as `inf`.
pub fn sig7(x: f64) -> String {
    sig(x, 7)
}

pub fn sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exponent = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&exponent) {
        return format!("{:.*e}", digits.saturating_sub(1), x);
    }
    let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    // rounding may carry into a new leading digit (9.9999999 -> 10.000000)
    let carried = s.trim_start_matches('-').split('.').next().map_or(0, |int| {
        int.trim_start_matches('0').len() as i32
    });
    if decimals > 0 && carried > exponent + 1 && carried > 0 {
        format!("{:.*}", decimals - 1, x)
    } else {
        s
    }
}
