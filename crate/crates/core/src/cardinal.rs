use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Cardinal of a point set: either a natural number or an aleph.
///
/// The derived order is the cardinal order, since every finite cardinal
/// precedes every aleph and alephs are ordered by index.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Card {
    Finite(BigUint),
    Aleph(u32),
}

impl Card {
    pub fn zero() -> Self {
        Card::Finite(BigUint::zero())
    }

    pub fn aleph0() -> Self {
        Card::Aleph(0)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Card::Finite(n) if n.is_zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Card::Finite(_))
    }

    pub fn as_nat(&self) -> Option<&BigUint> {
        match self {
            Card::Finite(n) => Some(n),
            Card::Aleph(_) => None,
        }
    }

    /// Cardinal sum: infinite cardinals absorb.
    pub fn plus(&self, other: &Card) -> Card {
        match (self, other) {
            (Card::Finite(a), Card::Finite(b)) => Card::Finite(a + b),
            _ => self.clone().max(other.clone()),
        }
    }

    /// Cardinal product: zero annihilates, infinite cardinals absorb.
    pub fn times(&self, other: &Card) -> Card {
        if self.is_zero() || other.is_zero() {
            return Card::zero();
        }
        match (self, other) {
            (Card::Finite(a), Card::Finite(b)) => Card::Finite(a * b),
            _ => self.clone().max(other.clone()),
        }
    }
}

impl From<u64> for Card {
    fn from(n: u64) -> Self {
        Card::Finite(BigUint::from(n))
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Card::Finite(n) => write!(f, "{}", n),
            Card::Aleph(k) => write!(f, "aleph{}", k),
        }
    }
}

/// Multiplicity of a child spec: a positive natural number or an aleph.
/// `Aleph(0)` is the countably infinite multiplicity, written `w`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Multiplicity {
    Finite(BigUint),
    Aleph(u32),
}

impl Multiplicity {
    /// Positive finite multiplicity. Panics on zero: a spec with no
    /// instances is not representable.
    pub fn finite(n: impl Into<BigUint>) -> Self {
        let n = n.into();
        assert!(!n.is_zero(), "multiplicity must be positive");
        Multiplicity::Finite(n)
    }

    pub fn one() -> Self {
        Multiplicity::Finite(BigUint::one())
    }

    pub fn omega() -> Self {
        Multiplicity::Aleph(0)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Multiplicity::Finite(_))
    }

    pub fn as_finite(&self) -> Option<&BigUint> {
        match self {
            Multiplicity::Finite(n) => Some(n),
            Multiplicity::Aleph(_) => None,
        }
    }

    pub fn as_card(&self) -> Card {
        match self {
            Multiplicity::Finite(n) => Card::Finite(n.clone()),
            Multiplicity::Aleph(k) => Card::Aleph(*k),
        }
    }

    /// Composition of nested multiplicities: alephs absorb.
    pub fn times(&self, other: &Multiplicity) -> Multiplicity {
        match (self, other) {
            (Multiplicity::Finite(a), Multiplicity::Finite(b)) => Multiplicity::Finite(a * b),
            (Multiplicity::Aleph(i), Multiplicity::Aleph(j)) => Multiplicity::Aleph(*i.max(j)),
            (Multiplicity::Aleph(i), _) | (_, Multiplicity::Aleph(i)) => Multiplicity::Aleph(*i),
        }
    }

    /// Scale by a positive count of identical copies.
    pub fn times_count(&self, n: &BigUint) -> Multiplicity {
        assert!(!n.is_zero(), "multiplicity must stay positive");
        match self {
            Multiplicity::Finite(m) => Multiplicity::Finite(m * n),
            Multiplicity::Aleph(k) => Multiplicity::Aleph(*k),
        }
    }

    pub fn plus(&self, other: &Multiplicity) -> Multiplicity {
        match (self, other) {
            (Multiplicity::Finite(a), Multiplicity::Finite(b)) => Multiplicity::Finite(a + b),
            (Multiplicity::Aleph(i), Multiplicity::Aleph(j)) => Multiplicity::Aleph(*i.max(j)),
            (Multiplicity::Aleph(i), _) | (_, Multiplicity::Aleph(i)) => Multiplicity::Aleph(*i),
        }
    }

    pub fn times_card(&self, c: &Card) -> Card {
        self.as_card().times(c)
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplicity::Finite(n) => write!(f, "{}", n),
            Multiplicity::Aleph(0) => write!(f, "w"),
            Multiplicity::Aleph(k) => write!(f, "a{}", k),
        }
    }
}

impl Serialize for Multiplicity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Multiplicity::Finite(n) => NatJson(n).serialize(s),
            Multiplicity::Aleph(_) => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Multiplicity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match &v {
            serde_json::Value::Number(n) => n
                .as_u64()
                .filter(|n| *n > 0)
                .map(|n| Multiplicity::Finite(BigUint::from(n)))
                .ok_or_else(|| D::Error::custom("multiplicity must be a positive integer")),
            serde_json::Value::String(s) => parse_mult_name(s)
                .ok_or_else(|| D::Error::custom(format!("not a multiplicity: {s:?}"))),
            other => Err(D::Error::custom(format!("not a multiplicity: {other}"))),
        }
    }
}

/// Names accepted for multiplicities: decimal naturals, `w` (alias `a0`),
/// and `aK` for higher alephs.
pub fn parse_mult_name(s: &str) -> Option<Multiplicity> {
    if s == "w" {
        return Some(Multiplicity::Aleph(0));
    }
    if let Some(idx) = s.strip_prefix('a') {
        if !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()) {
            return idx.parse::<u32>().ok().map(Multiplicity::Aleph);
        }
    }
    if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
        let n: BigUint = s.parse().ok()?;
        if n.is_zero() {
            return None;
        }
        return Some(Multiplicity::Finite(n));
    }
    None
}

/// Serializes a natural number as a JSON number when it fits in u64 and as a
/// decimal string otherwise.
pub(crate) struct NatJson<'a>(pub &'a BigUint);

impl Serialize for NatJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.to_u64() {
            Some(n) => s.serialize_u64(n),
            None => s.serialize_str(&self.0.to_string()),
        }
    }
}
