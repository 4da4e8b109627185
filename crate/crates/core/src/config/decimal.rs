use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A real constant read from a config file, written either as a JSON number
/// or as a decimal string such as `"0.05"`. Both forms parse to `f64`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decimal(pub f64);

impl From<Decimal> for f64 {
    fn from(d: Decimal) -> f64 {
        d.0
    }
}

impl From<f64> for Decimal {
    fn from(v: f64) -> Self {
        Decimal(v)
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.0)
    }
}

struct DecimalVisitor;

impl Visitor<'_> for DecimalVisitor {
    type Value = Decimal;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a finite number or a decimal string")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Decimal, E> {
        if v.is_finite() {
            Ok(Decimal(v))
        } else {
            Err(E::custom(format!("non-finite constant {v}")))
        }
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Decimal, E> {
        Ok(Decimal(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Decimal, E> {
        Ok(Decimal(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Decimal, E> {
        let parsed: f64 = v
            .trim()
            .parse()
            .map_err(|_| E::custom(format!("invalid decimal constant {v:?}")))?;
        self.visit_f64(parsed)
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(DecimalVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_numbers_and_strings() {
        let values: Vec<Decimal> = serde_json::from_str(r#"[1, -2.5, "0.05", " 1e-8 "]"#).unwrap();
        let values: Vec<f64> = values.into_iter().map(f64::from).collect();
        assert_eq!(values, vec![1.0, -2.5, 0.05, 1e-8]);
    }

    #[test]
    fn rejects_garbage_and_non_finite() {
        assert!(serde_json::from_str::<Decimal>(r#""abc""#).is_err());
        assert!(serde_json::from_str::<Decimal>(r#""inf""#).is_err());
        assert!(serde_json::from_str::<Decimal>("true").is_err());
    }
}
