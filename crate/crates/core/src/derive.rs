use num_bigint::BigUint;
use num_traits::One;

use crate::cardinal::Multiplicity;
use crate::tree::{
    ChildSpec, CompactForest, CtxFrame, FamilySpec, Term, TreeCompactum, TreeContext,
};

/// One isolated-point-removal step. A node survives exactly when infinitely
/// many child instances accumulate at it; a dead node spills its surviving
/// children into the surrounding space.
pub fn derived_forest(term: &Term) -> CompactForest {
    match term {
        Term::Tree(t) => derived_tree(t),
        Term::Forest(f) => {
            let mut entries = Vec::new();
            for (t, n) in f.trees() {
                for (w, m) in derived_tree(t).trees() {
                    entries.push((w.clone(), m * n));
                }
            }
            CompactForest::new(entries)
        }
    }
}

/// Iterated derivative.
pub fn derived_forest_steps(term: &Term, steps: usize) -> CompactForest {
    let mut cur = match term {
        Term::Tree(t) => CompactForest::singleton(t.clone()),
        Term::Forest(f) => f.clone(),
    };
    for _ in 0..steps {
        cur = derived_forest(&Term::Forest(cur));
    }
    cur
}

fn derived_tree(t: &TreeCompactum) -> CompactForest {
    if t.root_isolated() {
        // The root vanishes; each of the finitely many child copies derives
        // independently.
        let mut entries = Vec::new();
        for spec in t.children() {
            let ChildSpec::Concrete { tree, mult } = spec else {
                unreachable!("families keep a root alive");
            };
            let m = mult.as_finite().expect("isolated root has finite multiplicities");
            for (w, n) in derived_tree(tree).trees() {
                entries.push((w.clone(), n * m));
            }
        }
        CompactForest::new(entries)
    } else {
        let mut specs = Vec::new();
        for spec in t.children() {
            specs.extend(derived_specs(spec));
        }
        CompactForest::singleton(TreeCompactum::new(specs))
    }
}

/// Derived child content of a surviving node.
fn derived_specs(spec: &ChildSpec) -> Vec<ChildSpec> {
    match spec {
        ChildSpec::Concrete { tree, mult } => derived_tree(tree)
            .trees()
            .iter()
            .map(|(w, n)| ChildSpec::Concrete { tree: w.clone(), mult: mult.times_count(n) })
            .collect(),
        ChildSpec::Family(f) => derived_family_specs(f),
    }
}

fn derived_forest_of_specs(specs: &[ChildSpec]) -> Vec<(TreeCompactum, BigUint)> {
    let mut entries = Vec::new();
    for spec in specs {
        let ChildSpec::Concrete { tree, mult } = spec else {
            unreachable!("dead frames hold only concrete finite specs");
        };
        let m = mult.as_finite().expect("dead frame mult is finite");
        for (w, n) in derived_tree(tree).trees() {
            entries.push((w.clone(), n * m));
        }
    }
    entries
}

fn frame_survives(frame: &CtxFrame) -> bool {
    !frame.hole_mult().is_finite()
        || frame.siblings().iter().any(|s| !s.instance_card().is_finite())
}

/// Re-encodes the derivative of a whole tower family.
///
/// Walking one context copy from the hole outward, dead frames dissolve into
/// loose derived siblings (`pre`) and a finite multiplier (`coeff`) on
/// whatever tower continues below; each surviving frame absorbs the pending
/// spill and becomes a frame of the derived context. The walk composes across
/// copies, so the derived family repeats the steady-state context over the
/// derived first member, while member zero and the per-copy top spill fall
/// out as plain specs.
fn derived_family_specs(f: &FamilySpec) -> Vec<ChildSpec> {
    let m0 = derived_tree(f.base());

    let mut pre: Vec<(TreeCompactum, BigUint)> = Vec::new();
    let mut coeff = BigUint::one();
    let mut built: Vec<CtxFrame> = Vec::new();
    for frame in f.context().frames().iter().rev() {
        if frame_survives(frame) {
            let mut sibs: Vec<ChildSpec> =
                frame.siblings().iter().flat_map(derived_specs).collect();
            for (p, n) in CompactForest::new(std::mem::take(&mut pre)).trees() {
                sibs.push(ChildSpec::Concrete {
                    tree: p.clone(),
                    mult: frame.hole_mult().times_count(n),
                });
            }
            let hole = frame.hole_mult().times_count(&coeff);
            built.insert(0, CtxFrame::new(sibs, hole));
            coeff = BigUint::one();
        } else {
            let m = frame.hole_mult().as_finite().expect("dead frame").clone();
            let mut next = derived_forest_of_specs(frame.siblings());
            for (p, n) in pre {
                next.push((p, n * &m));
            }
            pre = next;
            coeff *= m;
        }
    }
    let pre_top = CompactForest::new(pre);
    let mult_top = coeff;

    assert!(
        !built.is_empty(),
        "a regular family has at least one surviving frame"
    );
    let inner = built.last().expect("nonempty").clone();
    let h = inner.hole_mult().clone();
    let ctx2 = TreeContext::new(built.clone()).expect("nonempty");
    let v1 = ctx2.plug_forest(&m0);

    let mut inner_sibs = inner.siblings().to_vec();
    for (p, n) in pre_top.trees() {
        inner_sibs.push(ChildSpec::Concrete { tree: p.clone(), mult: h.times_count(n) });
    }
    let inner3 = CtxFrame::new(inner_sibs, h.times_count(&mult_top));
    let mut frames3 = built;
    frames3.pop();
    frames3.push(inner3);
    let ctx3 = TreeContext::new(frames3).expect("nonempty");
    let fam3 = FamilySpec::new_unchecked(ctx3, v1);

    let mut specs: Vec<ChildSpec> = Vec::new();
    for (w, n) in m0.trees() {
        specs.push(ChildSpec::Concrete {
            tree: w.clone(),
            mult: Multiplicity::finite(n.clone()),
        });
    }
    for (p, _) in pre_top.trees() {
        specs.push(ChildSpec::Concrete { tree: p.clone(), mult: Multiplicity::omega() });
    }
    let copies = usize::try_from(&mult_top).expect("derived copy count fits in memory");
    for _ in 0..copies {
        specs.push(ChildSpec::Family(fam3.clone()));
    }
    specs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cardinal::Card;
    use crate::ordinal::Ordinal;
    use crate::rank::{level_size_term, point_count_term, van_rank_term};
    use crate::tree::{canonical_tree, ordinal_tree};

    fn leaf() -> TreeCompactum {
        TreeCompactum::leaf()
    }

    fn node(specs: Vec<ChildSpec>) -> TreeCompactum {
        TreeCompactum::new(specs)
    }

    fn conc(t: TreeCompactum, m: Multiplicity) -> ChildSpec {
        ChildSpec::Concrete { tree: t, mult: m }
    }

    #[test]
    fn finite_trees_derive_to_nothing() {
        let t = node(vec![conc(leaf(), Multiplicity::finite(3u32))]);
        assert!(derived_tree(&t).is_empty());
        assert!(derived_tree(&leaf()).is_empty());
    }

    #[test]
    fn convergent_sequence_leaves_its_limit() {
        let t = node(vec![conc(leaf(), Multiplicity::omega())]);
        assert_eq!(derived_tree(&t), CompactForest::singleton(leaf()));
    }

    #[test]
    fn isolated_root_spills_survivors() {
        // A(A(1^w)^2): dead root, two sequences below; derivative is 2 points.
        let seq = node(vec![conc(leaf(), Multiplicity::omega())]);
        let t = node(vec![conc(seq, Multiplicity::finite(2u32))]);
        let d = derived_tree(&t);
        assert_eq!(d, CompactForest::new(vec![(leaf(), BigUint::from(2u32))]));
    }

    #[test]
    fn tower_tree_is_derivative_stationary() {
        // T_w has height w; removing isolated points leaves a copy of itself.
        let tw = canonical_tree(&Ordinal::omega()).unwrap();
        let d = derived_tree(&tw);
        assert_eq!(d, CompactForest::singleton(tw));
    }

    #[test]
    fn derivative_matches_level_sizes() {
        let samples: Vec<Term> = vec![
            Term::Tree(canonical_tree(&Ordinal::from(3)).unwrap()),
            Term::Tree(canonical_tree(&Ordinal::omega()).unwrap()),
            Term::Tree(canonical_tree(&Ordinal::omega().succ()).unwrap()),
            Term::Forest(ordinal_tree(&Ordinal::from(2), &BigUint::from(3u32)).unwrap()),
            Term::Tree(node(vec![
                conc(node(vec![conc(leaf(), Multiplicity::finite(2u32))]), Multiplicity::omega()),
                conc(leaf(), Multiplicity::finite(5u32)),
            ])),
        ];
        for term in samples {
            for stage in 0..5usize {
                let derived = derived_forest_steps(&term, stage);
                let direct = level_size_term(&term, &Ordinal::from(stage as u64));
                let via_derive = point_count_term(&Term::Forest(derived));
                assert_eq!(direct, via_derive, "stage {stage} of {term}");
            }
        }
    }

    #[test]
    fn derivative_drops_rank_by_one_from_the_left() {
        let samples: Vec<Term> = vec![
            Term::Tree(canonical_tree(&Ordinal::from(2)).unwrap()),
            Term::Tree(canonical_tree(&Ordinal::omega()).unwrap()),
            Term::Tree(canonical_tree(&Ordinal::omega().add(&Ordinal::from(2))).unwrap()),
        ];
        for term in samples {
            let v = van_rank_term(&term);
            let d = derived_forest(&term);
            let dv = van_rank_term(&Term::Forest(d));
            assert_eq!(
                Ordinal::one().add(&dv),
                v,
                "1 + van(derivative) = van for {term}"
            );
        }
    }

    #[test]
    fn derived_family_keeps_counting(){
        // Level sizes of T_{w+1} through several stages, via derivatives.
        let t = Term::Tree(canonical_tree(&Ordinal::omega().succ()).unwrap());
        for stage in 0..6usize {
            let derived = derived_forest_steps(&t, stage);
            assert_eq!(
                point_count_term(&Term::Forest(derived)),
                Card::aleph0(),
                "T_(w+1) keeps infinitely many points at finite stages"
            );
        }
    }
}
