//! JSON helpers: floats are written with 17 significant digits so every
//! value round-trips exactly and output bytes do not depend on the
//! formatter's shortest-representation heuristics.

use serde::de::Deserializer;
use serde::ser::{Error as _, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

/// Formats a finite float with 17 significant digits; non-finite values become `null`.
pub fn format_f17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

pub mod f17 {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(format_f17(*x)).map_err(S::Error::custom)?;
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

pub mod f17_opt {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => f17::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<f64>::deserialize(d)
    }
}

/// Float newtype for containers, serialized like [`f17`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F17(#[serde(with = "f17")] pub f64);

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Wrapper {
        #[serde(with = "f17")]
        x: f64,
        #[serde(with = "f17_opt")]
        y: Option<f64>,
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, -3.0, 1e-300, 123456.789, std::f64::consts::PI] {
            let w = Wrapper { x, y: Some(x) };
            let text = serde_json::to_string(&w).unwrap();
            let back: Wrapper = serde_json::from_str(&text).unwrap();
            assert_eq!(back, w);
        }
        assert_eq!(serde_json::to_string(&Wrapper { x: 0.1, y: None }).unwrap(),
            r#"{"x":1.0000000000000001e-1,"y":null}"#);
    }
}
