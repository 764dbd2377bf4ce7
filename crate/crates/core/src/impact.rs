use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A worst-case impact on the extended non-negative reals.
///
/// `Unbounded` orders above every finite value. In JSON a finite value is a
/// plain number and `Unbounded` is the string `"unbounded"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Impact {
    Finite(f64),
    Unbounded,
}

impl Impact {
    pub fn is_finite(&self) -> bool {
        matches!(self, Impact::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Impact::Finite(v) => Some(v),
            Impact::Unbounded => None,
        }
    }

    /// The value with `Unbounded` mapped to `+inf`.
    pub fn as_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.as_f64().total_cmp(&other.as_f64())
    }

    pub fn shifted(&self, c: f64) -> Impact {
        match *self {
            Impact::Finite(v) => Impact::Finite(v + c),
            Impact::Unbounded => Impact::Unbounded,
        }
    }
}

impl fmt::Display for Impact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Impact::Finite(v) => match f.precision() {
                Some(p) => write!(f, "{v:.p$}"),
                None => write!(f, "{v}"),
            },
            Impact::Unbounded => f.pad("inf"),
        }
    }
}

impl Serialize for Impact {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Impact::Finite(v) => serializer.serialize_f64(*v),
            Impact::Unbounded => serializer.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for Impact {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ImpactVisitor;

        impl Visitor<'_> for ImpactVisitor {
            type Value = Impact;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a non-negative number or the string \"unbounded\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Impact, E> {
                Ok(Impact::Finite(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Impact, E> {
                Ok(Impact::Finite(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Impact, E> {
                Ok(Impact::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Impact, E> {
                match v {
                    "unbounded" | "inf" => Ok(Impact::Unbounded),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }

        deserializer.deserialize_any(ImpactVisitor)
    }
}
