//! Exact rational coordinates in units of the lattice spacing `d`.
//!
//! Coordinates serialize as strings (`"3"`, `"-1/4"`, `"11/4"`) so that
//! schedule files are bit-stable and never pass through floating point.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};

use crate::layout::GridPoint;

pub type Rational = Ratio<i64>;

pub fn rational_to_string(r: &Rational) -> String {
    r.to_string()
}

pub fn parse_rational(s: &str) -> Result<Rational, String> {
    s.trim()
        .parse::<Rational>()
        .map_err(|e| format!("bad rational {s:?}: {e}"))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Serde adapter for a single [`Rational`] stored as a string.
pub mod as_string {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rational_to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(de::Error::custom)
    }
}

/// Serde adapter writing a [`Rational`] as a plain float (reports only).
pub mod as_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(to_f64(r))
    }
}

/// A point in the plane with exact rational coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub x: Rational,
    pub y: Rational,
}

/// Same as `Ratio::round`, without the generic arithmetic.
fn round_half_away(r: &Rational) -> i64 {
    let (n, d) = (*r.numer() as i128, *r.denom() as i128);
    let q = (2 * n.abs() + d) / (2 * d);
    (if n < 0 { -q } else { q }) as i64
}

impl Pos {
    pub fn new(x: Rational, y: Rational) -> Self {
        Self { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        Self::new(Rational::from_integer(x), Rational::from_integer(y))
    }

    /// Nearest lattice site. Offsets are always strictly below half a unit,
    /// so rounding is unambiguous for well-formed schedules.
    pub fn site(&self) -> GridPoint {
        GridPoint::new(round_half_away(&self.x), round_half_away(&self.y))
    }

    /// Manhattan length of `self` viewed as a displacement.
    pub fn manhattan(&self) -> Rational {
        self.x.abs() + self.y.abs()
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }
}

impl From<GridPoint> for Pos {
    fn from(p: GridPoint) -> Self {
        Pos::from_ints(p.x, p.y)
    }
}

impl Add for Pos {
    type Output = Pos;
    fn add(self, o: Pos) -> Pos {
        Pos::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Pos {
    type Output = Pos;
    fn sub(self, o: Pos) -> Pos {
        Pos::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Pos {
    type Output = Pos;
    fn neg(self) -> Pos {
        Pos::new(-self.x, -self.y)
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Serialize for Pos {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&rational_to_string(&self.x))?;
        t.serialize_element(&rational_to_string(&self.y))?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for Pos {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct PosVisitor;

        impl<'de> Visitor<'de> for PosVisitor {
            type Value = Pos;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a pair of rational strings [\"x\", \"y\"]")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Pos, A::Error> {
                let x: String = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let y: String = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Ok(Pos::new(
                    parse_rational(&x).map_err(de::Error::custom)?,
                    parse_rational(&y).map_err(de::Error::custom)?,
                ))
            }
        }

        d.deserialize_tuple(2, PosVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_rounds_small_offsets() {
        let p = Pos::new(Rational::new(11, 4), Rational::new(1, 4));
        assert_eq!(p.site(), GridPoint::new(3, 0));
        let q = Pos::new(Rational::new(-1, 4), Rational::from_integer(2));
        assert_eq!(q.site(), GridPoint::new(0, 2));
    }

    #[test]
    fn pos_json_is_string_pair() {
        let p = Pos::new(Rational::new(3, 4), Rational::from_integer(-2));
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"["3/4","-2"]"#);
        let back: Pos = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<Pos>(r#"["1","2","3"]"#).is_err());
        assert!(serde_json::from_str::<Pos>(r#"["x","2"]"#).is_err());
    }
}
