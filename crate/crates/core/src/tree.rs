use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::cardinal::{Card, Multiplicity, NatJson};
use crate::ordinal::Ordinal;
use crate::rank;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("family members do not settle into a constant positive height increment")]
    InvalidFamily,
    #[error("a context needs at least one frame")]
    EmptyContext,
    #[error("no canonical tree encodes height {0}: representable heights lie below w^2")]
    UnrepresentableHeight(Ordinal),
    #[error("height too large to materialize")]
    HeightTooLarge,
}

/// Tree encoding of an omega-scattered compactum. Each node is one point;
/// child specs describe clopen copies of subspaces accumulating at the node.
///
/// Child specs are kept sorted. Equal subtrees are NOT merged here: merging
/// is a normalization step, and unmerged forms must stay representable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
#[serde(transparent)]
pub struct TreeCompactum {
    children: Vec<ChildSpec>,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
#[serde(untagged)]
pub enum ChildSpec {
    Concrete { tree: TreeCompactum, mult: Multiplicity },
    Family(FamilySpec),
}

/// Countable tower family: the instances are `ctx^k(base)` for every k >= 0.
/// Validated so that member heights eventually grow by a constant positive
/// increment, which pins down the supremum of the member ranks.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub struct FamilySpec {
    context: TreeContext,
    base: TreeCompactum,
}

/// One-hole tree context. `frames[0]` is the outermost frame; the hole sits
/// in the innermost frame, always at a concrete child position.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
#[serde(transparent)]
pub struct TreeContext {
    frames: Vec<CtxFrame>,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub struct CtxFrame {
    siblings: Vec<ChildSpec>,
    hole_mult: Multiplicity,
}

/// Finite multiset of trees: a compact space with finitely many components.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct CompactForest {
    trees: Vec<(TreeCompactum, BigUint)>,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Tree(TreeCompactum),
    Forest(CompactForest),
}

impl TreeCompactum {
    pub fn new(mut children: Vec<ChildSpec>) -> Self {
        children.sort();
        TreeCompactum { children }
    }

    /// Builds from an already sorted spec list. Used where specs are sorted
    /// together with auxiliary payloads that must track final positions.
    pub(crate) fn from_sorted(children: Vec<ChildSpec>) -> Self {
        debug_assert!(children.windows(2).all(|w| w[0] <= w[1]));
        TreeCompactum { children }
    }

    pub fn leaf() -> Self {
        TreeCompactum { children: Vec::new() }
    }

    pub fn children(&self) -> &[ChildSpec] {
        &self.children
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Total number of immediate child instances, as a cardinal.
    pub fn total_child_instances(&self) -> Card {
        self.children
            .iter()
            .fold(Card::zero(), |acc, s| acc.plus(&s.instance_card()))
    }

    /// The root is isolated exactly when finitely many instances accumulate.
    pub fn root_isolated(&self) -> bool {
        self.total_child_instances().is_finite()
    }

    /// Syntactically countable: no multiplicity above aleph_0 anywhere.
    pub fn is_countable(&self) -> bool {
        self.children.iter().all(ChildSpec::is_countable)
    }

    /// Number of syntax nodes, counting each spec once.
    pub fn syntactic_size(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(|s| match s {
                ChildSpec::Concrete { tree, .. } => tree.syntactic_size(),
                ChildSpec::Family(f) => {
                    f.base().syntactic_size()
                        + f.context()
                            .frames()
                            .iter()
                            .map(|fr| {
                                1 + fr.siblings.iter().map(|s| s.syntactic_size()).sum::<usize>()
                            })
                            .sum::<usize>()
                }
            })
            .sum::<usize>()
    }
}

impl ChildSpec {
    pub fn concrete(tree: TreeCompactum, mult: Multiplicity) -> Self {
        ChildSpec::Concrete { tree, mult }
    }

    /// How many instances this spec contributes; families contribute one
    /// instance per member, hence aleph_0.
    pub fn instance_card(&self) -> Card {
        match self {
            ChildSpec::Concrete { mult, .. } => mult.as_card(),
            ChildSpec::Family(_) => Card::aleph0(),
        }
    }

    pub fn is_countable(&self) -> bool {
        match self {
            ChildSpec::Concrete { tree, mult } => {
                !matches!(mult, Multiplicity::Aleph(k) if *k >= 1) && tree.is_countable()
            }
            ChildSpec::Family(f) => {
                f.base().is_countable()
                    && f.context().frames().iter().all(|fr| {
                        !matches!(fr.hole_mult, Multiplicity::Aleph(k) if k >= 1)
                            && fr.siblings.iter().all(ChildSpec::is_countable)
                    })
            }
        }
    }

    fn syntactic_size(&self) -> usize {
        match self {
            ChildSpec::Concrete { tree, .. } => tree.syntactic_size(),
            ChildSpec::Family(f) => {
                f.base().syntactic_size()
                    + f.context()
                        .frames()
                        .iter()
                        .map(|fr| 1 + fr.siblings.iter().map(|s| s.syntactic_size()).sum::<usize>())
                        .sum::<usize>()
            }
        }
    }
}

impl CtxFrame {
    pub fn new(mut siblings: Vec<ChildSpec>, hole_mult: Multiplicity) -> Self {
        siblings.sort();
        CtxFrame { siblings, hole_mult }
    }

    pub fn siblings(&self) -> &[ChildSpec] {
        &self.siblings
    }

    pub fn hole_mult(&self) -> &Multiplicity {
        &self.hole_mult
    }
}

impl TreeContext {
    pub fn new(frames: Vec<CtxFrame>) -> Result<Self, TreeError> {
        if frames.is_empty() {
            return Err(TreeError::EmptyContext);
        }
        Ok(TreeContext { frames })
    }

    pub fn frames(&self) -> &[CtxFrame] {
        &self.frames
    }

    /// Replace the hole by a tree, folding frames from the inside out.
    pub fn plug(&self, t: &TreeCompactum) -> TreeCompactum {
        let mut cur = t.clone();
        for frame in self.frames.iter().rev() {
            let mut specs = frame.siblings.clone();
            specs.push(ChildSpec::Concrete { tree: cur, mult: frame.hole_mult.clone() });
            cur = TreeCompactum::new(specs);
        }
        cur
    }

    /// Replace the hole by a whole forest: every forest component lands in
    /// the innermost frame, scaled by the hole multiplicity.
    pub fn plug_forest(&self, forest: &CompactForest) -> TreeCompactum {
        let (inner, outer) = self.frames.split_last().expect("contexts are nonempty");
        let mut specs = inner.siblings.clone();
        for (t, n) in forest.trees() {
            specs.push(ChildSpec::Concrete {
                tree: t.clone(),
                mult: inner.hole_mult.times_count(n),
            });
        }
        let mut cur = TreeCompactum::new(specs);
        for frame in outer.iter().rev() {
            let mut specs = frame.siblings.clone();
            specs.push(ChildSpec::Concrete { tree: cur, mult: frame.hole_mult.clone() });
            cur = TreeCompactum::new(specs);
        }
        cur
    }

    pub fn iterate(&self, base: &TreeCompactum, k: usize) -> TreeCompactum {
        let mut cur = base.clone();
        for _ in 0..k {
            cur = self.plug(&cur);
        }
        cur
    }

    /// Product of all hole multiplicities along the hole path.
    pub(crate) fn hole_path_mult(&self) -> Card {
        self.frames
            .iter()
            .fold(Card::Finite(BigUint::one()), |acc, fr| acc.times(&fr.hole_mult.as_card()))
    }
}

impl FamilySpec {
    pub fn new(context: TreeContext, base: TreeCompactum) -> Result<Self, TreeError> {
        rank::family_fit(&context, &base)?;
        Ok(FamilySpec { context, base })
    }

    /// For internally constructed families whose regularity is guaranteed by
    /// construction. Still checked in debug builds.
    pub(crate) fn new_unchecked(context: TreeContext, base: TreeCompactum) -> Self {
        debug_assert!(
            rank::family_fit(&context, &base).is_ok(),
            "internally built family failed regularity: ctx={context:?} base={base:?}"
        );
        FamilySpec { context, base }
    }

    pub fn context(&self) -> &TreeContext {
        &self.context
    }

    pub fn base(&self) -> &TreeCompactum {
        &self.base
    }

    pub fn member(&self, k: usize) -> TreeCompactum {
        self.context.iterate(&self.base, k)
    }

    /// Supremum of the member ranks; the stage at which the family's points
    /// stop keeping the parent alive.
    pub(crate) fn rank_sup(&self) -> Ordinal {
        rank::family_fit(&self.context, &self.base)
            .expect("constructed families are regular")
            .sup
    }
}

impl CompactForest {
    /// Builds a forest, merging equal trees and dropping zero counts. Two
    /// entries with the same tree denote the same multiset as one entry with
    /// the summed count.
    pub fn new(entries: Vec<(TreeCompactum, BigUint)>) -> Self {
        let mut map: BTreeMap<TreeCompactum, BigUint> = BTreeMap::new();
        for (t, n) in entries {
            if !n.is_zero() {
                *map.entry(t).or_default() += n;
            }
        }
        CompactForest { trees: map.into_iter().collect() }
    }

    pub fn empty() -> Self {
        CompactForest::default()
    }

    pub fn singleton(t: TreeCompactum) -> Self {
        CompactForest { trees: vec![(t, BigUint::one())] }
    }

    pub fn trees(&self) -> &[(TreeCompactum, BigUint)] {
        &self.trees
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn total(&self) -> BigUint {
        self.trees.iter().map(|(_, n)| n).sum()
    }

    pub fn is_countable(&self) -> bool {
        self.trees.iter().all(|(t, _)| t.is_countable())
    }
}

impl Serialize for CompactForest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.trees.len()))?;
        for (t, n) in &self.trees {
            seq.serialize_element(&(t, NatJson(n)))?;
        }
        seq.end()
    }
}

impl Term {
    pub fn is_countable(&self) -> bool {
        match self {
            Term::Tree(t) => t.is_countable(),
            Term::Forest(f) => f.is_countable(),
        }
    }

    pub fn is_empty_space(&self) -> bool {
        matches!(self, Term::Forest(f) if f.is_empty())
    }
}

/// One-point compactification step used by encoders: a finite collection is
/// already compact and stays a forest; an infinite collection gains a limit
/// root and becomes a tree.
pub fn aleksandrov(specs: Vec<ChildSpec>) -> Term {
    let total = specs
        .iter()
        .fold(Card::zero(), |acc, s| acc.plus(&s.instance_card()));
    if total.is_finite() {
        let entries = specs
            .into_iter()
            .map(|s| match s {
                ChildSpec::Concrete { tree, mult } => {
                    let n = mult.as_finite().expect("finite total implies finite mults").clone();
                    (tree, n)
                }
                ChildSpec::Family(_) => unreachable!("families are infinite"),
            })
            .collect();
        Term::Forest(CompactForest::new(entries))
    } else {
        Term::Tree(TreeCompactum::new(specs))
    }
}

/// The canonical tree of a given scattered height below w^2.
///
/// Heights w*m + r are reached by stacking m tower families and r successor
/// layers over a leaf. Heights with w^2 or above in their normal form have no
/// tree encoding, because every tower family advances the height by a fixed
/// finite increment per member.
pub fn canonical_tree(height: &Ordinal) -> Result<TreeCompactum, TreeError> {
    let mut omega_coeff = 0usize;
    let mut finite = 0usize;
    for (e, c) in height.terms() {
        let e_nat = e.as_nat().and_then(|n| n.to_u64());
        let c_small = c.to_usize().ok_or(TreeError::HeightTooLarge)?;
        match e_nat {
            Some(0) => finite = c_small,
            Some(1) => omega_coeff = c_small,
            _ => return Err(TreeError::UnrepresentableHeight(height.clone())),
        }
    }
    let omega_ctx = TreeContext::new(vec![CtxFrame::new(Vec::new(), Multiplicity::omega())])
        .expect("one frame");
    let mut t = TreeCompactum::leaf();
    for _ in 0..omega_coeff {
        let fam = FamilySpec::new(omega_ctx.clone(), t)?;
        t = TreeCompactum::new(vec![ChildSpec::Family(fam)]);
    }
    for _ in 0..finite {
        t = TreeCompactum::new(vec![ChildSpec::Concrete {
            tree: t,
            mult: Multiplicity::omega(),
        }]);
    }
    Ok(t)
}

/// Canonical space with rank invariant (height, count): `count` copies of the
/// canonical tree of the given height.
pub fn ordinal_tree(height: &Ordinal, copies: &BigUint) -> Result<CompactForest, TreeError> {
    if copies.is_zero() {
        return Ok(CompactForest::empty());
    }
    let t = canonical_tree(height)?;
    Ok(CompactForest::new(vec![(t, copies.clone())]))
}

impl fmt::Display for TreeCompactum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_leaf() {
            return write!(f, "1");
        }
        write!(f, "A(")?;
        for (i, spec) in self.children.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", spec)?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for ChildSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChildSpec::Concrete { tree, mult } => {
                write!(f, "{}", tree)?;
                if *mult != Multiplicity::one() {
                    write!(f, "^{}", mult)?;
                }
                Ok(())
            }
            ChildSpec::Family(fam) => write!(f, "fam({}, {})", fam.context(), fam.base()),
        }
    }
}

impl fmt::Display for TreeContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Innermost first: the hole slot is wrapped by each outer frame.
        let mut cur = String::from("_");
        for frame in self.frames.iter().rev() {
            let mut s = String::from("A(");
            s.push_str(&cur);
            if *frame.hole_mult() != Multiplicity::one() {
                s.push('^');
                s.push_str(&frame.hole_mult().to_string());
            }
            for spec in frame.siblings() {
                s.push_str(", ");
                s.push_str(&spec.to_string());
            }
            s.push(')');
            cur = s;
        }
        write!(f, "{}", cur)
    }
}

impl fmt::Display for CompactForest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F[")?;
        for (i, (t, n)) in self.trees.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({}, {})", t, n)?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Tree(t) => write!(f, "{}", t),
            Term::Forest(fo) => write!(f, "{}", fo),
        }
    }
}
