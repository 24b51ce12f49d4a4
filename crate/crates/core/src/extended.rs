//! Nonnegative extended reals `[0, +inf]`.
//!
//! Entropy values live here. The representation is tagged rather than relying
//! on IEEE infinities so that `0 * inf = 0` holds by construction.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtendedValue {
    Finite(f64),
    Infinite,
}

impl ExtendedValue {
    pub const ZERO: Self = ExtendedValue::Finite(0.0);
    pub const INFINITY: Self = ExtendedValue::Infinite;

    /// Maps `+inf` to `Infinite` and clamps negative rounding residue to zero.
    pub fn new(v: f64) -> Self {
        debug_assert!(!v.is_nan(), "NaN entering ExtendedValue");
        if v.is_nan() || v == f64::INFINITY {
            ExtendedValue::Infinite
        } else {
            ExtendedValue::Finite(v.max(0.0))
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedValue::Finite(_))
    }

    pub fn is_infinite(self) -> bool {
        !self.is_finite()
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedValue::Finite(v) => Some(v),
            ExtendedValue::Infinite => None,
        }
    }

    /// IEEE view: `Infinite` becomes `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedValue::Finite(v) => v,
            ExtendedValue::Infinite => f64::INFINITY,
        }
    }

    /// `lambda * self` for `lambda >= 0`, with `0 * inf = 0`.
    pub fn scale(self, lambda: f64) -> Self {
        debug_assert!(lambda >= 0.0);
        match self {
            ExtendedValue::Finite(v) => ExtendedValue::new(lambda * v),
            ExtendedValue::Infinite if lambda == 0.0 => ExtendedValue::ZERO,
            ExtendedValue::Infinite => ExtendedValue::Infinite,
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn sqrt(self) -> Self {
        match self {
            ExtendedValue::Finite(v) => ExtendedValue::Finite(v.sqrt()),
            ExtendedValue::Infinite => ExtendedValue::Infinite,
        }
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.to_f64().total_cmp(&other.to_f64())
    }
}

impl Default for ExtendedValue {
    fn default() -> Self {
        ExtendedValue::ZERO
    }
}

impl From<f64> for ExtendedValue {
    fn from(v: f64) -> Self {
        ExtendedValue::new(v)
    }
}

impl Add for ExtendedValue {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (ExtendedValue::Finite(a), ExtendedValue::Finite(b)) => ExtendedValue::Finite(a + b),
            _ => ExtendedValue::Infinite,
        }
    }
}

impl AddAssign for ExtendedValue {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for ExtendedValue {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ExtendedValue::ZERO, |acc, v| acc + v)
    }
}

impl fmt::Display for ExtendedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedValue::Finite(v) => write!(f, "{v}"),
            ExtendedValue::Infinite => write!(f, "inf"),
        }
    }
}

/// Serialized as a JSON number, or the string `"inf"`.
impl Serialize for ExtendedValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedValue::Finite(v) => serializer.serialize_f64(*v),
            ExtendedValue::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(v) if v >= 0.0 => Ok(ExtendedValue::new(v)),
            Raw::Num(v) => Err(serde::de::Error::custom(format!("negative value {v}"))),
            Raw::Str(s) if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("+inf") => {
                Ok(ExtendedValue::Infinite)
            }
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected number or \"inf\", got {s:?}"))),
        }
    }
}
