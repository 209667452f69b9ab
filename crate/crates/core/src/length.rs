//! Lengths that may be infinite.

use core::cmp::Ordering;
use core::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A non-negative length or the infinite sentinel.
///
/// Distances to an empty singular set and the reciprocal of a vanishing
/// sigma-transform are `Infinite`, never a large float.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Length {
    Finite(f64),
    Infinite,
}

impl Length {
    pub fn is_finite(self) -> bool {
        matches!(self, Length::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Length::Finite(v) => Some(v),
            Length::Infinite => None,
        }
    }

    /// Value as `f64`, mapping the sentinel to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            Length::Finite(v) => v,
            Length::Infinite => f64::INFINITY,
        }
    }

    /// Inverse of [`Length::to_f64`].
    pub fn from_f64(v: f64) -> Self {
        if v.is_finite() {
            Length::Finite(v)
        } else {
            Length::Infinite
        }
    }

    pub fn scale(self, lambda: f64) -> Self {
        match self {
            Length::Finite(v) => Length::Finite(v * lambda),
            Length::Infinite => Length::Infinite,
        }
    }

    /// Reciprocal of a non-negative density: zero maps to the sentinel.
    pub fn reciprocal_of(density: f64) -> Self {
        if density > 0.0 {
            Length::Finite(1.0 / density)
        } else {
            Length::Infinite
        }
    }
}

impl PartialOrd for Length {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Length::Finite(a), Length::Finite(b)) => a.partial_cmp(b),
            (Length::Finite(_), Length::Infinite) => Some(Ordering::Less),
            (Length::Infinite, Length::Finite(_)) => Some(Ordering::Greater),
            (Length::Infinite, Length::Infinite) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Length::Finite(v) => write!(f, "{v}"),
            Length::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Length {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Length::Finite(v) => serializer.serialize_f64(*v),
            Length::Infinite => serializer.serialize_str("inf"),
        }
    }
}

struct LengthVisitor;

impl Visitor<'_> for LengthVisitor {
    type Value = Length;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a number or the string \"inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Length, E> {
        Ok(Length::Finite(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Length, E> {
        Ok(Length::Finite(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Length, E> {
        Ok(Length::Finite(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Length, E> {
        if v == "inf" {
            Ok(Length::Infinite)
        } else {
            Err(E::invalid_value(de::Unexpected::Str(v), &self))
        }
    }
}

impl<'de> Deserialize<'de> for Length {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(LengthVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_puts_sentinel_last() {
        assert!(Length::Finite(1e300) < Length::Infinite);
        assert_eq!(Length::reciprocal_of(0.0), Length::Infinite);
        assert_eq!(Length::reciprocal_of(4.0), Length::Finite(0.25));
    }

    #[test]
    fn f64_round_trip() {
        assert_eq!(Length::from_f64(Length::Infinite.to_f64()), Length::Infinite);
        assert_eq!(Length::Finite(2.0).scale(3.0), Length::Finite(6.0));
    }
}
