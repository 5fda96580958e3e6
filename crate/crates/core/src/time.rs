//! Integer-microsecond timestamps.
//!
//! All routing arithmetic (window feasibility, earliest delivery, deadlines)
//! runs on [`Micros`] so that values such as `0.1 s` compose exactly.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::scalar::Scalar;

pub const MICROS_PER_SEC: i64 = 1_000_000;

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Micros(pub i64);

impl Micros {
    pub const ZERO: Micros = Micros(0);
    pub const MAX: Micros = Micros(i64::MAX);

    /// Rounds to the nearest microsecond.
    pub fn from_secs_f64(secs: f64) -> Self {
        Micros((secs * MICROS_PER_SEC as f64).round() as i64)
    }

    pub fn from_secs<S: Scalar>(secs: S) -> Self {
        Self::from_secs_f64(secs.to_f64_lossy())
    }

    pub const fn from_millis(ms: i64) -> Self {
        Micros(ms * 1_000)
    }

    pub const fn from_whole_secs(s: i64) -> Self {
        Micros(s * MICROS_PER_SEC)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / MICROS_PER_SEC as f64
    }

    pub fn as_secs<S: Scalar>(self) -> S {
        S::of(self.as_secs_f64())
    }

    pub fn saturating_sub(self, rhs: Micros) -> Micros {
        Micros(self.0.saturating_sub(rhs.0))
    }
}

impl Add for Micros {
    type Output = Micros;
    fn add(self, rhs: Micros) -> Micros {
        Micros(self.0 + rhs.0)
    }
}

impl AddAssign for Micros {
    fn add_assign(&mut self, rhs: Micros) {
        self.0 += rhs.0;
    }
}

impl Sub for Micros {
    type Output = Micros;
    fn sub(self, rhs: Micros) -> Micros {
        Micros(self.0 - rhs.0)
    }
}

/// Prints seconds without trailing zeros: `4.1`, `6`, `0.000001`.
impl fmt::Display for Micros {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = abs / MICROS_PER_SEC as u64;
        let frac = abs % MICROS_PER_SEC as u64;
        if frac == 0 {
            write!(f, "{sign}{whole}")
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl Serialize for Micros {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_secs_f64())
    }
}

impl<'de> Deserialize<'de> for Micros {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let secs = f64::deserialize(d)?;
        if !secs.is_finite() {
            return Err(serde::de::Error::custom("time must be finite"));
        }
        Ok(Micros::from_secs_f64(secs))
    }
}

/// Serde adapter for optional arrival times: `None` is written as `"inf"`.
pub mod arrival_serde {
    use super::Micros;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Secs(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<Micros>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(t) => Repr::Secs(t.as_secs_f64()).serialize(s),
            None => Repr::Text("inf".into()).serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Micros>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Secs(x) => Ok(Some(Micros::from_secs_f64(x))),
            Repr::Text(t) if t == "inf" => Ok(None),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad time {t:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tenths_compose_exactly() {
        let t = Micros::from_secs_f64(0.1);
        let mut acc = Micros::from_secs_f64(4.0);
        acc += t;
        assert_eq!(acc, Micros::from_secs_f64(4.1));
        assert_eq!(acc.to_string(), "4.1");
        assert_eq!(Micros::from_whole_secs(6).to_string(), "6");
        assert_eq!(Micros(-1_500_000).to_string(), "-1.5");
    }

    #[test]
    fn inf_round_trip() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct W(#[serde(with = "arrival_serde")] Option<Micros>);
        let s = serde_json::to_string(&W(None)).unwrap();
        assert_eq!(s, "\"inf\"");
        assert_eq!(serde_json::from_str::<W>(&s).unwrap(), W(None));
        let s = serde_json::to_string(&W(Some(Micros::from_secs_f64(6.1)))).unwrap();
        assert_eq!(s, "6.1");
    }
}
