use num_bigint::BigUint;
use num_traits::One;

use crate::cardinal::Multiplicity;
use crate::rank::{ms_invariant, rep_complexity};
use crate::tree::{
    canonical_tree, ordinal_tree, ChildSpec, CompactForest, CtxFrame, FamilySpec, Term,
    TreeCompactum, TreeContext,
};

const REWRITE_GUARD: usize = 100_000;

/// Canonical form, preserving the kind of the input.
///
/// Countable inputs collapse to the ordinal normal form dictated by their
/// rank and top-level count. Uncountable inputs are driven to a fixpoint of
/// local homeomorphism-preserving rewrites; countable subtrees inside them
/// still collapse fully.
pub fn normalize(term: &Term) -> Term {
    match term {
        Term::Tree(t) => Term::Tree(norm_tree(t)),
        Term::Forest(f) => {
            if f.is_empty() {
                return Term::Forest(CompactForest::new(Vec::new()));
            }
            if f.is_countable() {
                let (a, n) = ms_invariant(term).expect("countable and nonempty");
                Term::Forest(ordinal_tree(&a, &n).expect("countable ranks stay below w^2"))
            } else {
                let entries = f
                    .trees()
                    .iter()
                    .map(|(t, n)| (norm_tree(t), n.clone()))
                    .collect();
                Term::Forest(CompactForest::new(entries))
            }
        }
    }
}

fn norm_tree(t: &TreeCompactum) -> TreeCompactum {
    if t.is_countable() {
        rebuild_countable(t)
    } else {
        let specs = t.children().iter().map(norm_spec).collect();
        TreeCompactum::new(simplify_node(specs))
    }
}

fn norm_spec(spec: &ChildSpec) -> ChildSpec {
    match spec {
        ChildSpec::Concrete { tree, mult } => ChildSpec::Concrete {
            tree: norm_tree(tree),
            mult: mult.clone(),
        },
        ChildSpec::Family(f) => {
            let frames = f
                .context()
                .frames()
                .iter()
                .map(|fr| {
                    CtxFrame::new(
                        fr.siblings().iter().map(norm_spec).collect(),
                        fr.hole_mult().clone(),
                    )
                })
                .collect();
            let ctx = TreeContext::new(frames).expect("frame count unchanged");
            ChildSpec::Family(FamilySpec::new_unchecked(ctx, norm_tree(f.base())))
        }
    }
}

/// A countable tree is determined up to homeomorphism by its rank and the
/// size of its last level, so it rebuilds from scratch.
fn rebuild_countable(t: &TreeCompactum) -> TreeCompactum {
    let (a, n) = ms_invariant(&Term::Tree(t.clone())).expect("trees are nonempty");
    let n_big = n.clone();
    if a.is_zero() {
        if n_big == BigUint::one() {
            return TreeCompactum::leaf();
        }
        return TreeCompactum::new(vec![ChildSpec::Concrete {
            tree: TreeCompactum::leaf(),
            mult: Multiplicity::finite(n_big - BigUint::one()),
        }]);
    }
    let core = canonical_tree(&a).expect("countable ranks stay below w^2");
    if n_big == BigUint::one() {
        core
    } else {
        TreeCompactum::new(vec![ChildSpec::Concrete {
            tree: core,
            mult: Multiplicity::finite(n_big),
        }])
    }
}

fn simplify_node(mut specs: Vec<ChildSpec>) -> Vec<ChildSpec> {
    let mut guard = 0usize;
    let mut absorbed_a_child = false;
    loop {
        guard += 1;
        assert!(guard < REWRITE_GUARD, "rewriting failed to converge");
        if merge_equal_subtrees(&mut specs)
            || flatten_isolated_child(&mut specs)
            || pull_dominant_piece(&mut specs)
        {
            continue;
        }
        if !absorbed_a_child && absorb_into_live_child(&mut specs) {
            absorbed_a_child = true;
            continue;
        }
        break;
    }
    specs
}

/// Two specs for the same subtree are one spec with the multiplicities added.
fn merge_equal_subtrees(specs: &mut Vec<ChildSpec>) -> bool {
    for i in 0..specs.len() {
        let ChildSpec::Concrete { tree: ti, .. } = &specs[i] else { continue };
        for j in i + 1..specs.len() {
            let ChildSpec::Concrete { tree: tj, .. } = &specs[j] else { continue };
            if ti == tj {
                let ChildSpec::Concrete { mult: mj, .. } = specs.remove(j) else {
                    unreachable!()
                };
                let ChildSpec::Concrete { mult: mi, .. } = &mut specs[i] else {
                    unreachable!()
                };
                *mi = mi.plus(&mj);
                return true;
            }
        }
    }
    false
}

/// A child whose root is isolated is a finite disjoint union of its own
/// children plus a point, and clopen pieces can regroup freely.
fn flatten_isolated_child(specs: &mut Vec<ChildSpec>) -> bool {
    for i in 0..specs.len() {
        let ChildSpec::Concrete { tree, .. } = &specs[i] else { continue };
        if tree.children().is_empty() || !tree.root_isolated() {
            continue;
        }
        let ChildSpec::Concrete { tree, mult } = specs.remove(i) else { unreachable!() };
        for spec in tree.children() {
            let ChildSpec::Concrete { tree: u, mult: inner } = spec else {
                unreachable!("isolated roots have concrete children");
            };
            specs.push(ChildSpec::Concrete { tree: u.clone(), mult: mult.times(inner) });
        }
        specs.push(ChildSpec::Concrete { tree: TreeCompactum::leaf(), mult });
        return true;
    }
    false
}

/// A finitely repeated piece inside a live child sits in a clopen island, so
/// it can migrate to the parent when it alone carries the child's complexity.
fn pull_dominant_piece(specs: &mut Vec<ChildSpec>) -> bool {
    for i in 0..specs.len() {
        let ChildSpec::Concrete { tree: c, .. } = &specs[i] else { continue };
        if c.root_isolated() {
            continue;
        }
        let rep_c = rep_complexity(c);
        let mut pulled = None;
        for (k, spec) in c.children().iter().enumerate() {
            let ChildSpec::Concrete { tree: u, mult } = spec else { continue };
            if mult.as_finite().is_none() {
                continue;
            }
            if rep_complexity(u).succ() != rep_c {
                continue;
            }
            let mut rest: Vec<ChildSpec> = c.children().to_vec();
            rest.remove(k);
            let remainder = TreeCompactum::new(rest);
            if rep_complexity(&remainder) < rep_c {
                pulled = Some((remainder, u.clone(), mult.clone()));
                break;
            }
        }
        let Some((remainder, u, inner)) = pulled else { continue };
        let ChildSpec::Concrete { mult, .. } = specs.remove(i) else { unreachable!() };
        specs.push(ChildSpec::Concrete { tree: remainder, mult: mult.clone() });
        specs.push(ChildSpec::Concrete { tree: u, mult: mult.times(&inner) });
        return true;
    }
    false
}

/// An isolated root next to a child with a live root is the same space as
/// that child with one extra stray point, so the root identifies with the
/// least such child. Fires at most once per node; afterwards the root is live.
fn absorb_into_live_child(specs: &mut Vec<ChildSpec>) -> bool {
    let isolated = specs.iter().all(|s| match s {
        ChildSpec::Concrete { mult, .. } => mult.as_finite().is_some(),
        ChildSpec::Family(_) => false,
    });
    if !isolated {
        return false;
    }
    let mut best: Option<usize> = None;
    for (i, spec) in specs.iter().enumerate() {
        let ChildSpec::Concrete { tree, .. } = spec else { continue };
        if tree.root_isolated() {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let ChildSpec::Concrete { tree: tb, .. } = &specs[b] else { unreachable!() };
                tree < tb
            }
        };
        if better {
            best = Some(i);
        }
    }
    let Some(i) = best else { return false };
    let ChildSpec::Concrete { tree, mult } = specs.remove(i) else { unreachable!() };
    let m = mult.as_finite().expect("isolated root").clone();
    specs.extend(tree.children().iter().cloned());
    if m > BigUint::one() {
        specs.push(ChildSpec::Concrete {
            tree,
            mult: Multiplicity::finite(m - BigUint::one()),
        });
    }
    specs.push(ChildSpec::Concrete {
        tree: TreeCompactum::leaf(),
        mult: Multiplicity::one(),
    });
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordinal::Ordinal;
    use crate::rank::{homeo_countable, level_size_term, sch_height_term, van_rank_term};

    fn leaf() -> TreeCompactum {
        TreeCompactum::leaf()
    }

    fn node(specs: Vec<ChildSpec>) -> TreeCompactum {
        TreeCompactum::new(specs)
    }

    fn conc(t: TreeCompactum, m: Multiplicity) -> ChildSpec {
        ChildSpec::Concrete { tree: t, mult: m }
    }

    fn fin(n: u32) -> Multiplicity {
        Multiplicity::finite(n)
    }

    #[test]
    fn countable_trees_collapse_to_ordinal_form() {
        // Six isolated points presented as a bushy tree.
        let t = node(vec![
            conc(leaf(), fin(2)),
            conc(node(vec![conc(leaf(), fin(1))]), fin(1)),
            conc(leaf(), fin(1)),
        ]);
        let n = normalize(&Term::Tree(t));
        assert_eq!(n, Term::Tree(node(vec![conc(leaf(), fin(5))])));
    }

    #[test]
    fn canonical_countable_forms_are_fixpoints() {
        let samples = vec![
            leaf(),
            node(vec![conc(leaf(), fin(4))]),
            canonical_tree(&Ordinal::omega()).unwrap(),
            node(vec![conc(canonical_tree(&Ordinal::from(2)).unwrap(), fin(3))]),
        ];
        for t in samples {
            let term = Term::Tree(t);
            assert_eq!(normalize(&term), term);
        }
    }

    #[test]
    fn countable_normalization_is_homeomorphism() {
        let squished = node(vec![
            conc(node(vec![conc(leaf(), Multiplicity::omega())]), fin(2)),
            conc(leaf(), Multiplicity::omega()),
        ]);
        let term = Term::Tree(squished);
        let n = normalize(&term);
        assert_eq!(homeo_countable(&term, &n), Ok(true));
        assert_eq!(normalize(&n), n);
    }

    #[test]
    fn countable_forests_rebuild_as_ordinal_copies() {
        let f = CompactForest::new(vec![
            (node(vec![conc(leaf(), Multiplicity::omega())]), BigUint::from(2u32)),
            (leaf(), BigUint::from(3u32)),
        ]);
        // Rank 1 with two limit points: two copies of the rank-1 tree.
        let n = normalize(&Term::Forest(f));
        let expect = ordinal_tree(&Ordinal::one(), &BigUint::from(2u32)).unwrap();
        assert_eq!(n, Term::Forest(expect));

        let empty = Term::Forest(CompactForest::new(Vec::new()));
        assert_eq!(normalize(&empty), empty);
    }

    #[test]
    fn dead_inner_roots_flatten_under_aleph_repetition() {
        // A(A(A(1^w)^2)^a1): the middle root is isolated, so its content
        // spreads out, leaving A(A(1^w)^a1, 1^a1).
        let seq = node(vec![conc(leaf(), Multiplicity::omega())]);
        let mid = node(vec![conc(seq.clone(), fin(2))]);
        let t = node(vec![conc(mid, Multiplicity::Aleph(1))]);
        let n = normalize(&Term::Tree(t));
        let expect = node(vec![
            conc(seq, Multiplicity::Aleph(1)),
            conc(leaf(), Multiplicity::Aleph(1)),
        ]);
        assert_eq!(n, Term::Tree(expect));
    }

    #[test]
    fn dominant_pieces_migrate_and_merge() {
        // A(A(1^a1, A(1^a1)^1)^a1): the singly repeated inner cluster
        // migrates out and merges with the aleph copies: A(A(1^a1)^a1).
        let cluster = node(vec![conc(leaf(), Multiplicity::Aleph(1))]);
        let c = node(vec![
            conc(leaf(), Multiplicity::Aleph(1)),
            conc(cluster.clone(), fin(1)),
        ]);
        let t = node(vec![conc(c, Multiplicity::Aleph(1))]);
        let n = normalize(&Term::Tree(t));
        let expect = node(vec![conc(cluster, Multiplicity::Aleph(1))]);
        assert_eq!(n, Term::Tree(expect));
    }

    #[test]
    fn isolated_roots_identify_with_a_live_child() {
        // A(A(1^a1)^2, 1^3): the root rides on one copy of the live child.
        let live = node(vec![conc(leaf(), Multiplicity::Aleph(1))]);
        let t = node(vec![conc(live.clone(), fin(2)), conc(leaf(), fin(3))]);
        let n = normalize(&Term::Tree(t));
        let expect = node(vec![
            conc(leaf(), Multiplicity::Aleph(1)),
            conc(live, fin(1)),
        ]);
        assert_eq!(n, Term::Tree(expect));
    }

    #[test]
    fn uncountable_normalization_preserves_rank_data() {
        let seq = node(vec![conc(leaf(), Multiplicity::omega())]);
        let samples = vec![
            node(vec![conc(node(vec![conc(seq.clone(), fin(2))]), Multiplicity::Aleph(1))]),
            node(vec![
                conc(node(vec![conc(leaf(), Multiplicity::Aleph(2))]), fin(2)),
                conc(leaf(), fin(1)),
            ]),
            node(vec![
                conc(seq.clone(), Multiplicity::Aleph(1)),
                conc(node(vec![conc(seq, fin(3))]), Multiplicity::omega()),
            ]),
        ];
        let stages = [
            Ordinal::zero(),
            Ordinal::one(),
            Ordinal::from(2),
            Ordinal::omega(),
        ];
        for t in samples {
            let term = Term::Tree(t);
            let n = normalize(&term);
            assert_eq!(van_rank_term(&term), van_rank_term(&n), "{term}");
            assert_eq!(sch_height_term(&term), sch_height_term(&n), "{term}");
            for stage in &stages {
                assert_eq!(
                    level_size_term(&term, stage),
                    level_size_term(&n, stage),
                    "stage {stage} of {term}"
                );
            }
            assert_eq!(normalize(&n), n, "stable for {term}");
        }
    }

    #[test]
    fn families_normalize_inside() {
        // Tower family whose base hides a collapsible countable tree.
        let messy_base = node(vec![conc(node(vec![conc(leaf(), fin(1))]), fin(1))]);
        let ctx = TreeContext::new(vec![CtxFrame::new(Vec::new(), Multiplicity::omega())])
            .unwrap();
        let fam = FamilySpec::new(ctx.clone(), messy_base).unwrap();
        let t = node(vec![
            conc(leaf(), Multiplicity::Aleph(1)),
            ChildSpec::Family(fam),
        ]);
        let n = normalize(&Term::Tree(t));
        let tidy = FamilySpec::new(ctx, node(vec![conc(leaf(), fin(2))])).unwrap();
        let expect = node(vec![
            conc(leaf(), Multiplicity::Aleph(1)),
            ChildSpec::Family(tidy),
        ]);
        assert_eq!(n, Term::Tree(expect));
    }

    #[test]
    fn aleph_points_spread_from_distinct_shapes() {
        // Distinct subtrees with equal content merge only after they agree.
        let a = node(vec![conc(leaf(), fin(2)), conc(leaf(), fin(1))]);
        let b = node(vec![conc(leaf(), fin(3))]);
        let t = node(vec![
            conc(a, Multiplicity::Aleph(1)),
            conc(b, Multiplicity::Aleph(1)),
        ]);
        // Both children are isolated-rooted four-point blocks; they flatten
        // and merge into plain aleph many points.
        let n = normalize(&Term::Tree(t));
        let expect = node(vec![conc(leaf(), Multiplicity::Aleph(1))]);
        assert_eq!(n, Term::Tree(expect));
    }
}
