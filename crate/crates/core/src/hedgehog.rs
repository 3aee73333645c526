//! Hedgehog spaces in Hilbert coordinates: spines spread over a Cantor set
//! of angles between pi/6 and pi/3, spherical identities checkable in exact
//! rational arithmetic, and weak-limit classification for symbolic
//! coordinate sequences.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::ops::Mul;

use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::FsVec;

const CLASSIFY_TOL: f64 = 1e-9;
const CANTOR_DIGITS: usize = 25;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HedgehogError {
    #[error("spine {spine} is not below {kappa}")]
    SpineOutOfRange { spine: u64, kappa: u64 },
    #[error("the spine parameter must lie in [0, 1]")]
    BadParameter,
}

/// Angle of a spine: the index is written in fixed-width binary, read as a
/// ternary fraction over digits zero and two, and squeezed into the middle
/// of the first quadrant. Distinct spines get distinct Cantor angles, all
/// with sine and cosine bounded away from zero and one.
pub fn cantor_phi(alpha: u64, kappa: u64) -> f64 {
    let width = if kappa <= 2 { 1 } else { 64 - (kappa - 1).leading_zeros() as usize };
    let mut c = 0.0;
    for i in 0..width {
        let bit = (alpha >> (width - 1 - i)) & 1;
        c += 2.0 * bit as f64 / 3f64.powi(i as i32 + 1);
    }
    PI / 6.0 * (1.0 + c)
}

/// Ternary membership test for the Cantor set: the first `digits` digits
/// must avoid the middle third, up to `tol` at the boundaries.
pub fn cantor_member(x: f64, digits: usize, tol: f64) -> bool {
    if !(-tol..=1.0 + tol).contains(&x) {
        return false;
    }
    let mut x = x.clamp(0.0, 1.0);
    for _ in 0..digits {
        let y = 3.0 * x;
        if y < 1.0 + tol {
            x = y.min(1.0);
        } else if y > 2.0 - tol {
            x = (y - 2.0).clamp(0.0, 1.0);
        } else {
            return false;
        }
    }
    true
}

/// Spherical coordinates of a spine point, generic over the scalar so the
/// unit-norm identity can be checked exactly: the spine coordinate carries
/// sin(t)sin(phi), the shared plane coordinate sin(t)cos(phi), and the
/// polar coordinate cos(t). Zero components are left off the support.
pub fn hedgehog_coords<F>(
    sin_t: F,
    cos_t: F,
    sin_phi: F,
    cos_phi: F,
    alpha: u64,
    kappa: u64,
) -> Result<FsVec<u64, F>, HedgehogError>
where
    F: Zero + Mul<Output = F> + Clone,
{
    if alpha >= kappa {
        return Err(HedgehogError::SpineOutOfRange { spine: alpha, kappa });
    }
    let mut v = FsVec::new();
    let spine = sin_t.clone() * sin_phi;
    if !spine.is_zero() {
        v.insert(alpha, spine);
    }
    let plane = sin_t * cos_phi;
    if !plane.is_zero() {
        v.insert(kappa, plane);
    }
    if !cos_t.is_zero() {
        v.insert(kappa + 1, cos_t);
    }
    Ok(v)
}

/// The point at parameter `t` on spine `alpha` of the `kappa`-spine
/// hedgehog. Every image vector has unit norm; `t = 0` is the center,
/// shared by all spines.
pub fn hedgehog_embed(t: f64, alpha: u64, kappa: u64) -> Result<FsVec<u64, f64>, HedgehogError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(HedgehogError::BadParameter);
    }
    let phi = cantor_phi(alpha, kappa);
    hedgehog_coords(t.sin(), t.cos(), phi.sin(), phi.cos(), alpha, kappa)
}

pub fn coord_norm_sq(v: &FsVec<u64, f64>) -> f64 {
    v.iter().map(|(_, x)| x * x).sum()
}

pub fn coord_dist_sq(u: &FsVec<u64, f64>, v: &FsVec<u64, f64>) -> f64 {
    let mut keys: BTreeSet<u64> = u.support().copied().collect();
    keys.extend(v.support().copied());
    keys.into_iter()
        .map(|k| {
            let a = u.get(&k).copied().unwrap_or(0.0);
            let b = v.get(&k).copied().unwrap_or(0.0);
            (a - b) * (a - b)
        })
        .sum()
}

/// Behavior of one coordinate along a sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffSeq {
    Const(f64),
    Converging { limit: f64 },
    Oscillating { lo: f64, hi: f64 },
    Unbounded,
}

/// A sequence of coordinate vectors given symbolically: finitely many
/// tracked coordinates, an optional drifting part whose mass keeps moving
/// to fresh coordinates, and an optional uniform norm bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicSequence {
    pub fixed: Vec<(u64, CoeffSeq)>,
    #[serde(default)]
    pub drift: Option<f64>,
    #[serde(default)]
    pub norm_bound: Option<f64>,
}

impl SymbolicSequence {
    pub fn well_formed(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for (idx, coeff) in &self.fixed {
            if !seen.insert(*idx) {
                return Err(format!("coordinate {idx} is tracked twice"));
            }
            match coeff {
                CoeffSeq::Const(v) | CoeffSeq::Converging { limit: v } => {
                    if !v.is_finite() {
                        return Err(format!("coordinate {idx} has a non-finite value"));
                    }
                }
                CoeffSeq::Oscillating { lo, hi } => {
                    if !lo.is_finite() || !hi.is_finite() {
                        return Err(format!("coordinate {idx} has a non-finite value"));
                    }
                    if lo > hi {
                        return Err(format!("coordinate {idx} oscillates with lo above hi"));
                    }
                }
                CoeffSeq::Unbounded => {
                    if self.norm_bound.is_some() {
                        return Err(format!(
                            "coordinate {idx} is unbounded but the norm is bounded"
                        ));
                    }
                }
            }
        }
        if let Some(d) = self.drift {
            if !d.is_finite() || d < 0.0 {
                return Err("the drift mass must be a finite nonnegative number".into());
            }
        }
        if let Some(b) = self.norm_bound {
            if !b.is_finite() || b < 0.0 {
                return Err("the norm bound must be a finite nonnegative number".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WeakLimitError {
    #[error("the sequence has no weak limit")]
    Divergent,
    #[error("ill-formed sequence: {0}")]
    IllFormed(String),
}

/// Weak limit of a symbolic sequence: drifting mass vanishes against every
/// fixed coordinate, tracked coordinates converge on their own terms or
/// not at all.
pub fn weak_limit(seq: &SymbolicSequence) -> Result<Vec<(u64, f64)>, WeakLimitError> {
    seq.well_formed().map_err(WeakLimitError::IllFormed)?;
    let mut out = Vec::new();
    for (idx, coeff) in &seq.fixed {
        let v = match coeff {
            CoeffSeq::Const(v) => *v,
            CoeffSeq::Converging { limit } => *limit,
            CoeffSeq::Oscillating { lo, hi } => {
                if lo != hi {
                    return Err(WeakLimitError::Divergent);
                }
                *lo
            }
            CoeffSeq::Unbounded => return Err(WeakLimitError::Divergent),
        };
        if v != 0.0 {
            out.push((*idx, v));
        }
    }
    out.sort_by_key(|(idx, _)| *idx);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitClass {
    Image,
    AddedPart,
}

/// Decide whether a weak limit lies in the hedgehog image: the polar
/// coordinate must encode a parameter in [0, 1], exactly one spine may
/// carry mass, the spherical identity must hold, and the recovered angle
/// must be the Cantor angle of that spine.
pub fn classify_weak_limit(coords: &[(u64, f64)], kappa: u64) -> LimitClass {
    let get = |idx: u64| {
        coords
            .iter()
            .find(|(i, _)| *i == idx)
            .map(|(_, v)| *v)
            .unwrap_or(0.0)
    };
    let c = get(kappa + 1);
    if !(0.0..=1.0 + CLASSIFY_TOL).contains(&c) {
        return LimitClass::AddedPart;
    }
    let t = c.clamp(0.0, 1.0).acos();
    if t > 1.0 + CLASSIFY_TOL {
        return LimitClass::AddedPart;
    }
    let spines: Vec<(u64, f64)> = coords
        .iter()
        .filter(|(i, v)| *i < kappa && v.abs() > CLASSIFY_TOL)
        .copied()
        .collect();
    for &(i, v) in coords {
        if i > kappa + 1 && v.abs() > CLASSIFY_TOL {
            return LimitClass::AddedPart;
        }
    }
    let plane = get(kappa);
    let sin_t = t.sin();
    if sin_t <= CLASSIFY_TOL {
        // The center: no residual mass anywhere else.
        return if spines.is_empty() && plane.abs() <= CLASSIFY_TOL {
            LimitClass::Image
        } else {
            LimitClass::AddedPart
        };
    }
    let [(alpha, spine)] = spines[..] else {
        return LimitClass::AddedPart;
    };
    if spine < 0.0 || plane < 0.0 {
        return LimitClass::AddedPart;
    }
    if (spine * spine + plane * plane - sin_t * sin_t).abs() > CLASSIFY_TOL {
        return LimitClass::AddedPart;
    }
    let phi = spine.atan2(plane);
    if !cantor_member((phi - PI / 6.0) * 6.0 / PI, CANTOR_DIGITS, CLASSIFY_TOL) {
        return LimitClass::AddedPart;
    }
    if (phi - cantor_phi(alpha, kappa)).abs() > CLASSIFY_TOL {
        return LimitClass::AddedPart;
    }
    LimitClass::Image
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClosureReport {
    pub trials: usize,
    pub image: usize,
    pub added: usize,
    pub divergent: usize,
    pub mismatches: usize,
}

/// Randomized audit of the closure analysis: sequences with a known fate
/// (converging onto a spine, leaking mass off every spine, splitting over
/// two spines, or diverging) are classified and compared to that fate.
pub fn closure_check_hedgehog(kappa: u64, trials: usize, rng: &mut impl Rng) -> ClosureReport {
    let mut report = ClosureReport { trials, image: 0, added: 0, divergent: 0, mismatches: 0 };
    for _ in 0..trials {
        let (seq, expect) = match rng.gen_range(0..4u32) {
            0 => {
                let alpha = rng.gen_range(0..kappa);
                let t: f64 = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.05..1.0) };
                let phi = cantor_phi(alpha, kappa);
                let seq = SymbolicSequence {
                    fixed: vec![
                        (alpha, CoeffSeq::Converging { limit: t.sin() * phi.sin() }),
                        (kappa, CoeffSeq::Converging { limit: t.sin() * phi.cos() }),
                        (kappa + 1, CoeffSeq::Const(t.cos())),
                    ],
                    drift: None,
                    norm_bound: Some(1.0),
                };
                (seq, Some(LimitClass::Image))
            }
            1 => {
                // Mass leaks through ever-fresh spines; only the shared
                // coordinates survive, which no single spine point matches.
                let alpha = rng.gen_range(0..kappa);
                let t: f64 = rng.gen_range(0.05..1.0);
                let phi = cantor_phi(alpha, kappa);
                let seq = SymbolicSequence {
                    fixed: vec![
                        (kappa, CoeffSeq::Converging { limit: t.sin() * phi.cos() }),
                        (kappa + 1, CoeffSeq::Const(t.cos())),
                    ],
                    drift: Some(t.sin() * phi.sin()),
                    norm_bound: Some(1.0),
                };
                (seq, Some(LimitClass::AddedPart))
            }
            2 => {
                // Two spines keep mass in the limit.
                let a1 = rng.gen_range(0..kappa / 2);
                let a2 = rng.gen_range(kappa / 2..kappa);
                let t: f64 = rng.gen_range(0.1..1.0);
                let phi = cantor_phi(a1, kappa);
                let seq = SymbolicSequence {
                    fixed: vec![
                        (a1, CoeffSeq::Converging { limit: t.sin() * phi.sin() / 2.0 }),
                        (a2, CoeffSeq::Const(t.sin() * phi.sin() / 2.0)),
                        (kappa, CoeffSeq::Converging { limit: t.sin() * phi.cos() }),
                        (kappa + 1, CoeffSeq::Const(t.cos())),
                    ],
                    drift: None,
                    norm_bound: Some(1.0),
                };
                (seq, Some(LimitClass::AddedPart))
            }
            _ => {
                let seq = if rng.gen_bool(0.5) {
                    SymbolicSequence {
                        fixed: vec![(
                            kappa + 1,
                            CoeffSeq::Oscillating { lo: 0.2, hi: 0.9 },
                        )],
                        drift: None,
                        norm_bound: Some(1.0),
                    }
                } else {
                    SymbolicSequence {
                        fixed: vec![(rng.gen_range(0..kappa), CoeffSeq::Unbounded)],
                        drift: None,
                        norm_bound: None,
                    }
                };
                (seq, None)
            }
        };
        match weak_limit(&seq) {
            Ok(coords) => {
                let class = classify_weak_limit(&coords, kappa);
                match class {
                    LimitClass::Image => report.image += 1,
                    LimitClass::AddedPart => report.added += 1,
                }
                if expect != Some(class) {
                    report.mismatches += 1;
                }
            }
            Err(WeakLimitError::Divergent) => {
                report.divergent += 1;
                if expect.is_some() {
                    report.mismatches += 1;
                }
            }
            Err(WeakLimitError::IllFormed(_)) => report.mismatches += 1,
        }
    }
    report
}
