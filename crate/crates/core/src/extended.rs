//! Extended reals with symbolic infinities.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;

/// A real number or one of the two infinities.
///
/// Infinities are tags, not IEEE values: arithmetic that would overflow is
/// expressed through these variants, and `Finite` never holds a non-finite
/// float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtendedReal {
    /// Wraps a float, mapping IEEE infinities onto the tags.
    ///
    /// NaN has no extended-real meaning and is rejected.
    pub fn from_f64(x: f64) -> Option<Self> {
        if x.is_nan() {
            None
        } else if x == f64::INFINITY {
            Some(ExtendedReal::PosInf)
        } else if x == f64::NEG_INFINITY {
            Some(ExtendedReal::NegInf)
        } else {
            Some(ExtendedReal::Finite(x))
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    /// Multiplication by a finite scalar with the usual sign rules; `0·∞ = 0`.
    pub fn scale(self, c: f64) -> Self {
        match self {
            ExtendedReal::Finite(x) => ExtendedReal::Finite(x * c),
            _ if c == 0.0 => ExtendedReal::Finite(0.0),
            ExtendedReal::PosInf if c > 0.0 => ExtendedReal::PosInf,
            ExtendedReal::PosInf => ExtendedReal::NegInf,
            ExtendedReal::NegInf if c > 0.0 => ExtendedReal::NegInf,
            ExtendedReal::NegInf => ExtendedReal::PosInf,
        }
    }

    /// Shift by a finite amount; infinities absorb it.
    pub fn shift(self, c: f64) -> Self {
        match self {
            ExtendedReal::Finite(x) => ExtendedReal::Finite(x + c),
            other => other,
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl From<f64> for ExtendedReal {
    fn from(x: f64) -> Self {
        ExtendedReal::from_f64(x).expect("NaN is not an extended real")
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtendedReal::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Some(Ordering::Equal),
            (NegInf, _) | (_, PosInf) => Some(Ordering::Less),
            (_, NegInf) | (PosInf, _) => Some(Ordering::Greater),
            (Finite(a), Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::NegInf => write!(f, "-inf"),
            ExtendedReal::PosInf => write!(f, "inf"),
            ExtendedReal::Finite(x) => write!(f, "{x}"),
        }
    }
}

// JSON has no infinities, so they travel as the strings "-inf" / "inf".
impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::NegInf => s.serialize_str("-inf"),
            ExtendedReal::PosInf => s.serialize_str("inf"),
            ExtendedReal::Finite(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Tag(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => ExtendedReal::from_f64(x)
                .ok_or_else(|| serde::de::Error::custom("NaN is not an extended real")),
            Repr::Tag(t) => match t.as_str() {
                "-inf" => Ok(ExtendedReal::NegInf),
                "inf" | "+inf" => Ok(ExtendedReal::PosInf),
                other => Err(serde::de::Error::custom(format!(
                    "expected a number, \"inf\" or \"-inf\", got {other:?}"
                ))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_puts_infinities_at_the_ends() {
        let xs = [
            ExtendedReal::PosInf,
            ExtendedReal::Finite(1.0),
            ExtendedReal::NegInf,
            ExtendedReal::Finite(-3.0),
        ];
        let mut v = xs.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(
            v,
            vec![
                ExtendedReal::NegInf,
                ExtendedReal::Finite(-3.0),
                ExtendedReal::Finite(1.0),
                ExtendedReal::PosInf
            ]
        );
    }

    #[test]
    fn scaling_flips_infinity_sign() {
        assert_eq!(ExtendedReal::PosInf.scale(-2.0), ExtendedReal::NegInf);
        assert_eq!(ExtendedReal::NegInf.scale(0.0), ExtendedReal::Finite(0.0));
        assert_eq!(ExtendedReal::Finite(2.0).scale(1.5), ExtendedReal::Finite(3.0));
    }

    #[test]
    fn json_round_trip_uses_string_tags() {
        let v = vec![ExtendedReal::NegInf, ExtendedReal::Finite(0.5), ExtendedReal::PosInf];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["-inf",0.5,"inf"]"#);
        let back: Vec<ExtendedReal> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn ieee_infinities_become_tags() {
        assert_eq!(ExtendedReal::from_f64(f64::INFINITY), Some(ExtendedReal::PosInf));
        assert_eq!(ExtendedReal::from_f64(f64::NAN), None);
    }
}
