use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::de::Error as DeError;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cardinal::NatJson;

/// Ordinal below epsilon_0 in Cantor normal form:
/// `w^{e_1}*c_1 + ... + w^{e_k}*c_k` with `e_1 > e_2 > ... > e_k` and every `c_i >= 1`.
///
/// The derived lexicographic order on the term list coincides with the ordinal
/// order, because exponents are strictly decreasing and a proper prefix always
/// denotes a smaller ordinal.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Ordinal {
    terms: Vec<(Ordinal, BigUint)>,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Ordinal::from_nat(1u32)
    }

    pub fn omega() -> Self {
        Ordinal::term(Ordinal::one(), BigUint::one())
    }

    pub fn from_nat(n: impl Into<BigUint>) -> Self {
        Ordinal::term(Ordinal::zero(), n.into())
    }

    /// Single-term ordinal `w^exp * coeff`. A zero coefficient yields zero.
    pub fn term(exp: Ordinal, coeff: BigUint) -> Self {
        if coeff.is_zero() {
            Ordinal::zero()
        } else {
            Ordinal { terms: vec![(exp, coeff)] }
        }
    }

    pub fn omega_power(exp: Ordinal) -> Self {
        Ordinal::term(exp, BigUint::one())
    }

    pub fn terms(&self) -> &[(Ordinal, BigUint)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.as_nat().is_some()
    }

    /// The natural number this ordinal denotes, if it is finite.
    pub fn as_nat(&self) -> Option<BigUint> {
        match self.terms.as_slice() {
            [] => Some(BigUint::zero()),
            [(e, c)] if e.is_zero() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn leading_exp(&self) -> Option<&Ordinal> {
        self.terms.first().map(|(e, _)| e)
    }

    /// Left-to-right ordinal addition. Terms of `self` strictly below the
    /// leading exponent of `rhs` are absorbed.
    pub fn add(&self, rhs: &Ordinal) -> Ordinal {
        let Some((lead_exp, lead_coeff)) = rhs.terms.first() else {
            return self.clone();
        };
        let cut = self
            .terms
            .iter()
            .position(|(e, _)| e <= lead_exp)
            .unwrap_or(self.terms.len());
        let mut terms: Vec<(Ordinal, BigUint)> = self.terms[..cut].to_vec();
        if let Some((e, c)) = self.terms.get(cut) {
            if e == lead_exp {
                terms.push((e.clone(), c + lead_coeff));
                terms.extend(rhs.terms[1..].iter().cloned());
                return Ordinal { terms };
            }
        }
        terms.extend(rhs.terms.iter().cloned());
        Ordinal { terms }
    }

    pub fn succ(&self) -> Ordinal {
        self.add(&Ordinal::one())
    }

    /// Predecessor of a successor ordinal; `None` for zero and limits.
    pub fn pred(&self) -> Option<Ordinal> {
        let (e, _) = self.terms.last()?;
        if !e.is_zero() {
            return None;
        }
        let mut terms = self.terms.clone();
        {
            let last = terms.last_mut().expect("nonempty");
            last.1 -= 1u32;
        }
        if terms.last().expect("nonempty").1.is_zero() {
            terms.pop();
        }
        Some(Ordinal { terms })
    }

    pub fn is_limit(&self) -> bool {
        !self.is_zero() && self.terms.last().is_some_and(|(e, _)| !e.is_zero())
    }

    pub fn is_successor(&self) -> bool {
        self.terms.last().is_some_and(|(e, _)| e.is_zero())
    }

    /// Unique decomposition `self = limit_part + n` with `limit_part` a limit
    /// ordinal or zero and `n` finite.
    pub fn split_limit_finite(&self) -> (Ordinal, BigUint) {
        match self.terms.last() {
            Some((e, c)) if e.is_zero() => {
                let mut terms = self.terms.clone();
                terms.pop();
                (Ordinal { terms }, c.clone())
            }
            _ => (self.clone(), BigUint::zero()),
        }
    }

    /// Right multiplication by omega: `d * w = w^{e+1}` where `e` is the
    /// leading exponent of `d`.
    ///
    /// Panics on zero, which has no leading exponent.
    pub fn mul_by_omega(&self) -> Ordinal {
        let (e, _) = self
            .terms
            .first()
            .expect("omega multiple of zero is not defined");
        Ordinal::omega_power(e.succ())
    }

    /// Supremum (maximum) of finitely many ordinals; zero when empty.
    pub fn sup<'a>(items: impl IntoIterator<Item = &'a Ordinal>) -> Ordinal {
        items.into_iter().max().cloned().unwrap_or_default()
    }

    /// The unique `c` with `self + c = larger`, when `self <= larger`.
    pub(crate) fn left_diff(&self, larger: &Ordinal) -> Option<Ordinal> {
        let a = &self.terms;
        let b = &larger.terms;
        let mut i = 0;
        loop {
            match (a.get(i), b.get(i)) {
                (None, _) => return Some(Ordinal { terms: b[i..].to_vec() }),
                (Some(_), None) => return None,
                (Some((ea, ca)), Some((eb, cb))) => match ea.cmp(eb) {
                    Ordering::Less => return Some(Ordinal { terms: b[i..].to_vec() }),
                    Ordering::Greater => return None,
                    Ordering::Equal => match ca.cmp(cb) {
                        Ordering::Less => {
                            let mut terms = vec![(eb.clone(), cb - ca)];
                            terms.extend(b[i + 1..].iter().cloned());
                            return Some(Ordinal { terms });
                        }
                        Ordering::Greater => return None,
                        Ordering::Equal => i += 1,
                    },
                },
            }
        }
    }
}

impl From<u64> for Ordinal {
    fn from(n: u64) -> Self {
        Ordinal::from_nat(n)
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match e.as_nat() {
                Some(n) => write!(f, "w^{}*{}", n, c)?,
                None => write!(f, "w^({})*{}", e, c)?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Serialize for Ordinal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_zero() {
            return s.serialize_u64(0);
        }
        let mut seq = s.serialize_seq(Some(self.terms.len()))?;
        for (e, c) in &self.terms {
            seq.serialize_element(&(e, NatJson(c)))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Ordinal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        ordinal_from_value(&v).map_err(D::Error::custom)
    }
}

fn nat_from_value(v: &serde_json::Value) -> Result<BigUint, String> {
    match v {
        serde_json::Value::Number(n) => n
            .as_u64()
            .map(BigUint::from)
            .ok_or_else(|| format!("expected a natural number, got {n}")),
        serde_json::Value::String(s) => s
            .parse::<BigUint>()
            .map_err(|_| format!("expected a decimal natural number, got {s:?}")),
        other => Err(format!("expected a natural number, got {other}")),
    }
}

fn ordinal_from_value(v: &serde_json::Value) -> Result<Ordinal, String> {
    match v {
        serde_json::Value::Number(_) | serde_json::Value::String(_) => {
            Ok(Ordinal::from_nat(nat_from_value(v)?))
        }
        serde_json::Value::Array(items) => {
            let mut terms = Vec::with_capacity(items.len());
            for item in items {
                let pair = item
                    .as_array()
                    .filter(|p| p.len() == 2)
                    .ok_or_else(|| format!("expected an [exponent, coeff] pair, got {item}"))?;
                let e = ordinal_from_value(&pair[0])?;
                let c = nat_from_value(&pair[1])?;
                if c.is_zero() {
                    return Err("zero coefficient in ordinal term".into());
                }
                terms.push((e, c));
            }
            for w in terms.windows(2) {
                if w[0].0 <= w[1].0 {
                    return Err("ordinal exponents must strictly decrease".into());
                }
            }
            Ok(Ordinal { terms })
        }
        other => Err(format!("expected an ordinal, got {other}")),
    }
}
