use num_bigint::BigUint;
use thiserror::Error;

use crate::cardinal::Card;
use crate::ordinal::Ordinal;
use crate::rank::{level_size_term, point_count_term};
use crate::tree::{ChildSpec, FamilySpec, Term, TreeCompactum};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("the space has infinitely many points")]
    NotFinite,
    #[error("the literal space exceeds the node budget")]
    TooLarge,
}

/// Literal point count, by materializing every instance. Independent of the
/// stage-size formulas: this is plain counting over the expanded tree.
pub fn materialize_count(term: &Term, cap: u64) -> Result<u64, OracleError> {
    let total = match term {
        Term::Tree(t) => count_tree(t, cap)?,
        Term::Forest(f) => {
            let mut acc: u64 = 0;
            for (t, n) in f.trees() {
                let n = to_u64(n)?;
                let c = count_tree(t, cap)?;
                acc = n
                    .checked_mul(c)
                    .and_then(|v| acc.checked_add(v))
                    .ok_or(OracleError::TooLarge)?;
                if acc > cap {
                    return Err(OracleError::TooLarge);
                }
            }
            acc
        }
    };
    Ok(total)
}

fn count_tree(t: &TreeCompactum, cap: u64) -> Result<u64, OracleError> {
    let mut acc: u64 = 1;
    for spec in t.children() {
        let ChildSpec::Concrete { tree, mult } = spec else {
            return Err(OracleError::NotFinite);
        };
        let m = mult.as_finite().ok_or(OracleError::NotFinite)?;
        let m = to_u64(m)?;
        let c = count_tree(tree, cap)?;
        acc = m
            .checked_mul(c)
            .and_then(|v| acc.checked_add(v))
            .ok_or(OracleError::TooLarge)?;
        if acc > cap {
            return Err(OracleError::TooLarge);
        }
    }
    Ok(acc)
}

fn to_u64(n: &BigUint) -> Result<u64, OracleError> {
    u64::try_from(n).map_err(|_| OracleError::TooLarge)
}

/// Literal stage sizes of a finite space. A finite compactum is discrete, so
/// no point accumulates anywhere and one step empties it: the literal answer
/// is a single stage holding every point. The symbolic formulas must agree.
pub fn literal_stage_sizes(term: &Term, cap: u64) -> Result<Vec<u64>, OracleError> {
    let n = materialize_count(term, cap)?;
    if n == 0 {
        Ok(Vec::new())
    } else {
        Ok(vec![n])
    }
}

/// Vanishing rank computed with the family suprema refit from scratch.
///
/// The production route trusts the affine fit stored at validation time and
/// measured on scattering heights; this one measures vanishing ranks of the
/// first few members and refits, so the two must land on the same limit.
pub fn oracle_van(term: &Term) -> Ordinal {
    match term {
        Term::Tree(t) => oracle_van_tree(t),
        Term::Forest(f) => {
            let mut best = Ordinal::zero();
            for (t, _) in f.trees() {
                best = best.max(oracle_van_tree(t));
            }
            best
        }
    }
}

fn oracle_van_tree(t: &TreeCompactum) -> Ordinal {
    let mut threshold = Ordinal::zero();
    let mut out = Ordinal::zero().succ();
    for spec in t.children() {
        match spec {
            ChildSpec::Concrete { tree, mult } => {
                let v = oracle_van_tree(tree);
                if mult.as_finite().is_none() {
                    threshold = threshold.max(v.clone());
                }
                out = out.max(v);
            }
            ChildSpec::Family(f) => {
                threshold = threshold.max(oracle_family_sup(f));
            }
        }
    }
    out.max(threshold.succ())
}

const ORACLE_MEMBERS: usize = 6;

/// Affine refit of a family's supremum from member vanishing ranks.
pub fn oracle_family_sup(f: &FamilySpec) -> Ordinal {
    let vans: Vec<Ordinal> = (0..ORACLE_MEMBERS)
        .map(|k| oracle_van_tree(&f.member(k)))
        .collect();
    for start in 0..=ORACLE_MEMBERS - 3 {
        let window = &vans[start..];
        let Some(d) = window[0].left_diff(&window[1]) else { continue };
        if d.is_zero() {
            continue;
        }
        let ok = window
            .windows(2)
            .all(|w| w[0].left_diff(&w[1]).as_ref() == Some(&d));
        if ok {
            return window[0].add(&d.mul_by_omega());
        }
    }
    panic!("member ranks of {f:?} do not grow affinely");
}

/// The step route to stage sizes: iterate the one-step derivative and count,
/// then compare against the closed-form sizes at finite stages.
pub fn check_stage_counts(term: &Term, steps: usize) -> Result<(), String> {
    for k in 0..=steps {
        let via_steps = point_count_term(&Term::Forest(crate::derive::derived_forest_steps(
            term, k,
        )));
        let direct = level_size_term(term, &Ordinal::from(k as u64));
        if via_steps != direct {
            return Err(format!(
                "stage {k} of {term}: stepped {via_steps}, closed form {direct}"
            ));
        }
    }
    Ok(())
}

/// Cheap guard used by generators: a literal count, when one exists, must
/// match the closed-form count.
pub fn counts_agree(term: &Term, cap: u64) -> bool {
    match materialize_count(term, cap) {
        Ok(n) => point_count_term(term) == Card::Finite(BigUint::from(n)),
        Err(_) => true,
    }
}
