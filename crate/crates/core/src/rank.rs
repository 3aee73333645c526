use num_bigint::BigUint;
use thiserror::Error;

use crate::cardinal::Card;
use crate::ordinal::Ordinal;
use crate::tree::{ChildSpec, CompactForest, FamilySpec, Term, TreeCompactum, TreeContext, TreeError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RankError {
    #[error("term denotes an uncountable space")]
    Uncountable,
    #[error("term denotes the empty space")]
    Empty,
}

/// Stage at which the root stops accumulating: the supremum of the ranks of
/// its infinite sources. Finitely repeated children never keep a root alive.
pub(crate) fn root_threshold(t: &TreeCompactum) -> Ordinal {
    let mut gamma = Ordinal::zero();
    for spec in t.children() {
        let c = match spec {
            ChildSpec::Concrete { tree, mult } if !mult.is_finite() => van_rank(tree),
            ChildSpec::Concrete { .. } => continue,
            ChildSpec::Family(f) => f.rank_sup(),
        };
        gamma = gamma.max(c);
    }
    gamma
}

/// Vanishing rank: least stage at which the subspace is exhausted by
/// iterated isolated-point removal. The root point survives through its
/// threshold and vanishes one stage later.
pub fn van_rank(t: &TreeCompactum) -> Ordinal {
    let mut v = root_threshold(t).succ();
    for spec in t.children() {
        if let ChildSpec::Concrete { tree, .. } = spec {
            v = v.max(van_rank(tree));
        }
    }
    v
}

pub fn van_rank_forest(f: &CompactForest) -> Ordinal {
    Ordinal::sup(f.trees().iter().map(|(t, _)| t).map(van_rank).collect::<Vec<_>>().iter())
}

pub fn van_rank_term(term: &Term) -> Ordinal {
    match term {
        Term::Tree(t) => van_rank(t),
        Term::Forest(f) => van_rank_forest(f),
    }
}

/// Number of points alive at a given stage.
pub fn level_size(t: &TreeCompactum, stage: &Ordinal) -> Card {
    let mut total = if *stage <= root_threshold(t) {
        Card::from(1u64)
    } else {
        Card::zero()
    };
    for spec in t.children() {
        let part = match spec {
            ChildSpec::Concrete { tree, mult } => mult.times_card(&level_size(tree, stage)),
            ChildSpec::Family(f) => family_level(f, stage),
        };
        total = total.plus(&part);
    }
    total
}

/// Alive points contributed by a whole family at a stage below its rank sup.
///
/// Writing s_k for the stage size of member k and P for the hole path
/// multiplicity, s_{k+1} = g + P (x) s_k with g ranging over shell sizes whose
/// infinite parts already occur in s_1. Hence the supremum over all members is
/// exactly max(aleph_0, s_0, s_1, P).
fn family_level(f: &FamilySpec, stage: &Ordinal) -> Card {
    if *stage >= f.rank_sup() {
        return Card::zero();
    }
    let s0 = level_size(f.base(), stage);
    let m1 = f.context().plug(f.base());
    let s1 = level_size(&m1, stage);
    let p = f.context().hole_path_mult();
    [Card::aleph0(), s0, s1, p].into_iter().max().expect("nonempty")
}

pub fn level_size_forest(f: &CompactForest, stage: &Ordinal) -> Card {
    f.trees().iter().fold(Card::zero(), |acc, (t, n)| {
        acc.plus(&Card::Finite(n.clone()).times(&level_size(t, stage)))
    })
}

pub fn level_size_term(term: &Term, stage: &Ordinal) -> Card {
    match term {
        Term::Tree(t) => level_size(t, stage),
        Term::Forest(f) => level_size_forest(f, stage),
    }
}

pub fn point_count(t: &TreeCompactum) -> Card {
    level_size(t, &Ordinal::zero())
}

pub fn point_count_term(term: &Term) -> Card {
    level_size_term(term, &Ordinal::zero())
}

/// Scattered height from a vanishing rank: a final stage holding at most one
/// point does not count.
pub(crate) fn sch_from_van(v: &Ordinal, level_at: impl FnOnce(&Ordinal) -> Card) -> Ordinal {
    if v.is_zero() {
        return Ordinal::zero();
    }
    match v.pred() {
        Some(delta) => {
            if level_at(&delta) <= Card::from(1u64) {
                delta
            } else {
                v.clone()
            }
        }
        None => v.clone(),
    }
}

pub fn sch_height(t: &TreeCompactum) -> Ordinal {
    sch_from_van(&van_rank(t), |d| level_size(t, d))
}

pub fn sch_height_forest(f: &CompactForest) -> Ordinal {
    sch_from_van(&van_rank_forest(f), |d| level_size_forest(f, d))
}

pub fn sch_height_term(term: &Term) -> Ordinal {
    match term {
        Term::Tree(t) => sch_height(t),
        Term::Forest(f) => sch_height_forest(f),
    }
}

pub(crate) struct FamilyFit {
    pub sup: Ordinal,
}

const FIT_MEMBERS: usize = 6;

/// Regularity check for a tower family: among the first six members, some
/// window of four consecutive heights must show three equal positive
/// left-differences. The sliding window tolerates an irregular start, which
/// internally derived families exhibit.
///
/// Member heights interleave member vanishing ranks, so their shared limit is
/// the supremum of both sequences.
pub(crate) fn family_fit(ctx: &TreeContext, base: &TreeCompactum) -> Result<FamilyFit, TreeError> {
    let mut member = base.clone();
    let mut heights = Vec::with_capacity(FIT_MEMBERS);
    heights.push(sch_height(&member));
    for _ in 1..FIT_MEMBERS {
        member = ctx.plug(&member);
        heights.push(sch_height(&member));
    }
    for start in 0..=FIT_MEMBERS - 4 {
        let window = &heights[start..start + 4];
        let d = match window[0].left_diff(&window[1]) {
            Some(d) if !d.is_zero() => d,
            _ => continue,
        };
        if window[1].left_diff(&window[2]).as_ref() == Some(&d)
            && window[2].left_diff(&window[3]).as_ref() == Some(&d)
        {
            return Ok(FamilyFit { sup: window[0].add(&d.mul_by_omega()) });
        }
    }
    Err(TreeError::InvalidFamily)
}

/// Representation complexity: how deep the encoding machinery nests.
///
/// A family contributes one omega step over its base: its context repeats
/// finitely many frames, so the tower costs the base plus omega, capped
/// against the one-deeper cost of the context shell itself.
pub fn rep_complexity(t: &TreeCompactum) -> Ordinal {
    let mut r = Ordinal::zero();
    for spec in t.children() {
        r = r.max(spec_rep(spec));
    }
    r
}

fn spec_rep(spec: &ChildSpec) -> Ordinal {
    match spec {
        ChildSpec::Concrete { tree, .. } => rep_complexity(tree).succ(),
        ChildSpec::Family(f) => {
            let mut shell = Ordinal::zero();
            let mut frames = 0u64;
            for frame in f.context().frames().iter().rev() {
                let sib_max = Ordinal::sup(
                    frame
                        .siblings()
                        .iter()
                        .map(spec_rep)
                        .collect::<Vec<_>>()
                        .iter(),
                );
                shell = sib_max.max(shell.succ());
                frames += 1;
            }
            let tower = rep_complexity(f.base()).add(&Ordinal::from(frames).mul_by_omega());
            shell.succ().max(tower)
        }
    }
}

/// Multi-component spaces pay one extra level per component beyond the first;
/// a single component is just its tree.
pub fn rep_complexity_forest(f: &CompactForest) -> Ordinal {
    if f.is_empty() {
        return Ordinal::zero();
    }
    if f.total() == BigUint::from(1u32) {
        return rep_complexity(&f.trees()[0].0);
    }
    Ordinal::sup(
        f.trees()
            .iter()
            .map(|(t, _)| rep_complexity(t).succ())
            .collect::<Vec<_>>()
            .iter(),
    )
}

pub fn rep_complexity_term(term: &Term) -> Ordinal {
    match term {
        Term::Tree(t) => rep_complexity(t),
        Term::Forest(f) => rep_complexity_forest(f),
    }
}

/// Rank invariant of a countable nonempty compact scattered space: the pair
/// (height of the top level, number of its points). Determines the space up
/// to homeomorphism.
pub fn ms_invariant(term: &Term) -> Result<(Ordinal, BigUint), RankError> {
    if !term.is_countable() {
        return Err(RankError::Uncountable);
    }
    if term.is_empty_space() {
        return Err(RankError::Empty);
    }
    let v = van_rank_term(term);
    let rank = v.pred().expect("nonempty countable compacta have successor rank");
    let count = match level_size_term(term, &rank) {
        Card::Finite(n) => n,
        Card::Aleph(_) => unreachable!("top level of a countable compactum is finite"),
    };
    Ok((rank, count))
}

/// Homeomorphism test for countable terms, via the rank invariant.
pub fn homeo_countable(a: &Term, b: &Term) -> Result<bool, RankError> {
    match (a.is_empty_space(), b.is_empty_space()) {
        (true, true) => return Ok(true),
        (true, false) | (false, true) => {
            if !a.is_countable() || !b.is_countable() {
                return Err(RankError::Uncountable);
            }
            return Ok(false);
        }
        (false, false) => {}
    }
    Ok(ms_invariant(a)? == ms_invariant(b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cardinal::Multiplicity;
    use crate::tree::{canonical_tree, ordinal_tree, CtxFrame};

    fn leaf() -> TreeCompactum {
        TreeCompactum::leaf()
    }

    fn node(specs: Vec<ChildSpec>) -> TreeCompactum {
        TreeCompactum::new(specs)
    }

    fn conc(t: TreeCompactum, m: Multiplicity) -> ChildSpec {
        ChildSpec::Concrete { tree: t, mult: m }
    }

    fn omega_ctx() -> TreeContext {
        TreeContext::new(vec![CtxFrame::new(Vec::new(), Multiplicity::omega())]).unwrap()
    }

    #[test]
    fn leaf_ranks() {
        assert_eq!(van_rank(&leaf()), Ordinal::one());
        assert_eq!(sch_height(&leaf()), Ordinal::zero());
        assert_eq!(point_count(&leaf()), Card::from(1));
        assert_eq!(level_size(&leaf(), &Ordinal::one()), Card::zero());
    }

    #[test]
    fn convergent_sequence_ranks() {
        // A(1^w): one limit of omega isolated points.
        let t = node(vec![conc(leaf(), Multiplicity::omega())]);
        assert_eq!(van_rank(&t), Ordinal::from(2));
        assert_eq!(sch_height(&t), Ordinal::one());
        assert_eq!(point_count(&t), Card::aleph0());
        assert_eq!(level_size(&t, &Ordinal::one()), Card::from(1));
        assert_eq!(level_size(&t, &Ordinal::from(2)), Card::zero());
    }

    #[test]
    fn finite_trees_are_discrete() {
        let t = node(vec![conc(node(vec![conc(leaf(), Multiplicity::finite(2u32))]), Multiplicity::finite(3u32))]);
        assert_eq!(van_rank(&t), Ordinal::one());
        assert_eq!(point_count(&t), Card::from(10));
        assert_eq!(sch_height(&t), Ordinal::one());
        assert_eq!(sch_height(&leaf()), Ordinal::zero());
    }

    #[test]
    fn isolated_root_does_not_climb() {
        // A(A(1^2)^w): sch 1 even though the encoding nests twice.
        let inner = node(vec![conc(leaf(), Multiplicity::finite(2u32))]);
        let t = node(vec![conc(inner, Multiplicity::omega())]);
        assert_eq!(van_rank(&t), Ordinal::from(2));
        assert_eq!(sch_height(&t), Ordinal::one());
        assert_eq!(rep_complexity(&t), Ordinal::from(2));
    }

    #[test]
    fn tower_family_reaches_omega() {
        let fam = FamilySpec::new(omega_ctx(), leaf()).unwrap();
        assert_eq!(fam.rank_sup(), Ordinal::omega());
        let t = node(vec![ChildSpec::Family(fam)]);
        assert_eq!(van_rank(&t), Ordinal::omega().succ());
        assert_eq!(sch_height(&t), Ordinal::omega());
        assert_eq!(level_size(&t, &Ordinal::omega()), Card::from(1));
        assert_eq!(level_size(&t, &Ordinal::from(3)), Card::aleph0());
    }

    #[test]
    fn degenerate_towers_are_rejected() {
        // Hole multiplicity 1 with finite siblings: member heights stall.
        let ctx = TreeContext::new(vec![CtxFrame::new(
            vec![conc(leaf(), Multiplicity::omega())],
            Multiplicity::one(),
        )])
        .unwrap();
        assert!(FamilySpec::new(ctx, leaf()).is_err());
        // All-finite frames cannot grow at all.
        let ctx = TreeContext::new(vec![CtxFrame::new(
            vec![conc(leaf(), Multiplicity::finite(2u32))],
            Multiplicity::finite(2u32),
        )])
        .unwrap();
        assert!(FamilySpec::new(ctx, leaf()).is_err());
    }

    #[test]
    fn canonical_trees_have_expected_invariants() {
        for (h, expect_van) in [
            (Ordinal::zero(), Ordinal::one()),
            (Ordinal::from(2), Ordinal::from(3)),
            (Ordinal::omega(), Ordinal::omega().succ()),
            (Ordinal::omega().add(&Ordinal::one()), Ordinal::omega().add(&Ordinal::from(2))),
            (
                Ordinal::term(Ordinal::one(), 2u32.into()),
                Ordinal::term(Ordinal::one(), 2u32.into()).succ(),
            ),
        ] {
            let t = canonical_tree(&h).unwrap();
            assert_eq!(van_rank(&t), expect_van, "van of T_{h}");
            assert_eq!(sch_height(&t), h, "sch of T_{h}");
        }
    }

    #[test]
    fn level_sizes_of_ordinal_trees() {
        // Three copies of T_2: level 2 holds exactly the three top points.
        let f = ordinal_tree(&Ordinal::from(2), &BigUint::from(3u32)).unwrap();
        let term = Term::Forest(f);
        assert_eq!(level_size_term(&term, &Ordinal::from(2)), Card::from(3));
        assert_eq!(level_size_term(&term, &Ordinal::from(3)), Card::zero());
        assert_eq!(level_size_term(&term, &Ordinal::zero()), Card::aleph0());
    }

    #[test]
    fn ms_invariant_round_trips() {
        let t = node(vec![conc(node(vec![conc(leaf(), Multiplicity::omega())]), Multiplicity::omega())]);
        // A(A(1^w)^w) = T_2
        let (rank, count) = ms_invariant(&Term::Tree(t)).unwrap();
        assert_eq!(rank, Ordinal::from(2));
        assert_eq!(count, BigUint::from(1u32));

        let fam = FamilySpec::new(omega_ctx(), leaf()).unwrap();
        let t = node(vec![ChildSpec::Family(fam), conc(leaf(), Multiplicity::omega())]);
        let (rank, count) = ms_invariant(&Term::Tree(t)).unwrap();
        assert_eq!(rank, Ordinal::omega());
        assert_eq!(count, BigUint::from(1u32));
    }

    #[test]
    fn ms_invariant_rejects_edge_cases() {
        assert_eq!(
            ms_invariant(&Term::Forest(CompactForest::empty())),
            Err(RankError::Empty)
        );
        let t = node(vec![conc(leaf(), Multiplicity::Aleph(1))]);
        assert_eq!(ms_invariant(&Term::Tree(t)), Err(RankError::Uncountable));
    }

    #[test]
    fn homeo_by_invariant() {
        // A(1^w, 1) and A(1, 1^w) are equal syntax; compare against A(A(1^2)^w).
        let a = node(vec![conc(leaf(), Multiplicity::omega()), conc(leaf(), Multiplicity::one())]);
        let inner = node(vec![conc(leaf(), Multiplicity::finite(2u32))]);
        let b = node(vec![conc(inner, Multiplicity::omega())]);
        assert!(homeo_countable(&Term::Tree(a), &Term::Tree(b)).unwrap());
        let c = node(vec![conc(leaf(), Multiplicity::finite(2u32))]);
        assert!(!homeo_countable(&Term::Tree(c), &Term::Tree(leaf())).unwrap());
        let empty = Term::Forest(CompactForest::empty());
        assert!(homeo_countable(&empty, &empty).unwrap());
        assert!(!homeo_countable(&empty, &Term::Tree(leaf())).unwrap());
    }

    #[test]
    fn rep_complexity_examples() {
        assert_eq!(rep_complexity(&leaf()), Ordinal::zero());
        let t1 = node(vec![conc(leaf(), Multiplicity::omega())]);
        assert_eq!(rep_complexity(&t1), Ordinal::one());
        let tw = canonical_tree(&Ordinal::omega()).unwrap();
        assert_eq!(rep_complexity(&tw), Ordinal::omega());
        let tw2 = canonical_tree(&Ordinal::term(Ordinal::one(), 2u32.into())).unwrap();
        assert_eq!(rep_complexity(&tw2), Ordinal::term(Ordinal::one(), 2u32.into()));

        // Forest with two instances: one extra level over the component.
        let f = CompactForest::new(vec![(t1.clone(), BigUint::from(2u32))]);
        assert_eq!(rep_complexity_forest(&f), Ordinal::from(2));
        assert_eq!(sch_height_forest(&f), Ordinal::from(2));
        let single = CompactForest::singleton(t1);
        assert_eq!(rep_complexity_forest(&single), Ordinal::one());
        assert_eq!(rep_complexity_forest(&CompactForest::empty()), Ordinal::zero());
    }

    #[test]
    fn sch_is_at_most_rep() {
        let samples = vec![
            leaf(),
            node(vec![conc(leaf(), Multiplicity::finite(3u32))]),
            node(vec![conc(node(vec![conc(leaf(), Multiplicity::finite(2u32))]), Multiplicity::omega())]),
            canonical_tree(&Ordinal::omega()).unwrap(),
            canonical_tree(&Ordinal::omega().succ()).unwrap(),
        ];
        for t in samples {
            assert!(
                sch_height(&t) <= rep_complexity(&t),
                "sch > rep for {t}"
            );
        }
    }
}
