//! Compactification of presentations into tree encodings, together with a
//! density witness: a record of where every presentation point landed and
//! which tree points are new.
//!
//! The result is always a compact encoding. Points are only ever added at
//! positions that infinitely much image material accumulates on, so the
//! image stays dense; `check_dense` verifies that from the witness alone,
//! and `check_bound` pins the height overhead of the construction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::cardinal::{Card, Multiplicity};
use crate::ordinal::Ordinal;
use crate::present::{pres_level, pres_sch, PresFamily, PresFrame, Presentation};
use crate::rank::{point_count, sch_height_term};
use crate::tree::{ChildSpec, CompactForest, CtxFrame, FamilySpec, Term, TreeCompactum, TreeContext};

/// Address of a node in a tree encoding: which child specs to descend,
/// and where inside a family spec (frame node, frame sibling, base).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum SchemaStep {
    Spec(usize),
    Frame(usize),
    FrameSib(usize, usize),
    Base,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct SchemaPath(Vec<SchemaStep>);

impl SchemaPath {
    pub fn steps(&self) -> &[SchemaStep] {
        &self.0
    }

    fn child(&self, step: SchemaStep) -> SchemaPath {
        let mut steps = self.0.clone();
        steps.push(step);
        SchemaPath(steps)
    }
}

impl fmt::Display for SchemaPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, ".");
        }
        for (i, step) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "/")?;
            }
            match step {
                SchemaStep::Spec(k) => write!(f, "{}", k)?,
                SchemaStep::Frame(j) => write!(f, "f{}", j)?,
                SchemaStep::FrameSib(j, s) => write!(f, "f{}s{}", j, s)?,
                SchemaStep::Base => write!(f, "b")?,
            }
        }
        Ok(())
    }
}

/// Address of a point or subexpression of a presentation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum PresStep {
    /// k-th summand of a sum.
    Part(usize),
    /// The base point of a `PointWithBase`.
    Point,
    /// k-th slot of the once-only prefix (hole slots counted).
    Prefix(usize),
    /// k-th slot of the cyclic tail.
    Tail(usize),
    /// Member zero of family i, spilled beside the encoded family.
    FamilyMemberZero(usize),
    /// Content of the base inside the encoded family of family i.
    FamilyBase(usize),
    /// Fixed content of frame j in family i's context.
    FamilyFrame(usize, usize),
    /// One tower level into family i: the innermost context copy.
    FamilyInnerCopy(usize),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct PresPath(Vec<PresStep>);

impl PresPath {
    pub fn steps(&self) -> &[PresStep] {
        &self.0
    }

    fn child(&self, step: PresStep) -> PresPath {
        let mut steps = self.0.clone();
        steps.push(step);
        PresPath(steps)
    }
}

impl fmt::Display for PresPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, ".");
        }
        for (i, step) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "/")?;
            }
            match step {
                PresStep::Part(k) => write!(f, "p{}", k)?,
                PresStep::Point => write!(f, "pt")?,
                PresStep::Prefix(k) => write!(f, "x{}", k)?,
                PresStep::Tail(k) => write!(f, "t{}", k)?,
                PresStep::FamilyMemberZero(i) => write!(f, "z{}", i)?,
                PresStep::FamilyBase(i) => write!(f, "b{}", i)?,
                PresStep::FamilyFrame(i, j) => write!(f, "c{}.{}", i, j)?,
                PresStep::FamilyInnerCopy(i) => write!(f, "v{}", i)?,
            }
        }
        Ok(())
    }
}

/// Where a tree point came from: the image of a presentation point, or a
/// point the compactification added.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Tag {
    Image(PresPath),
    Added,
}

/// Map from every node position of the encoding to its origin.
///
/// Multi-count forest entries and multiplicities stand for interchangeable
/// copies of one position; an image tag records one representative source.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct DensityWitness {
    entries: BTreeMap<SchemaPath, Tag>,
}

impl DensityWitness {
    pub(crate) fn new(entries: BTreeMap<SchemaPath, Tag>) -> Self {
        DensityWitness { entries }
    }

    pub fn entries(&self) -> &BTreeMap<SchemaPath, Tag> {
        &self.entries
    }

    pub fn image_count(&self) -> usize {
        self.entries.values().filter(|t| matches!(t, Tag::Image(_))).count()
    }

    pub fn added_count(&self) -> usize {
        self.entries.len() - self.image_count()
    }
}

impl Serialize for DensityWitness {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut points: BTreeMap<String, String> = BTreeMap::new();
        let mut added: Vec<String> = Vec::new();
        for (path, tag) in &self.entries {
            match tag {
                Tag::Image(src) => {
                    points.insert(src.to_string(), path.to_string());
                }
                Tag::Added => added.push(path.to_string()),
            }
        }
        let mut st = s.serialize_struct("DensityWitness", 2)?;
        st.serialize_field("points", &points)?;
        st.serialize_field("added", &added)?;
        st.end()
    }
}

/// Which proof route the compactified height estimate takes: a single
/// survivor at the top stage, a successor top stage, or a limit one.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Case {
    Singleton,
    Successor,
    Limit,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Case::Singleton => write!(f, "singleton"),
            Case::Successor => write!(f, "successor"),
            Case::Limit => write!(f, "limit"),
        }
    }
}

impl Serialize for Case {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub fn case_of(p: &Presentation) -> Case {
    let alpha = pres_sch(p);
    if pres_level(p, &alpha) == Card::from(1u64) {
        Case::Singleton
    } else if alpha.is_limit() {
        Case::Limit
    } else {
        Case::Successor
    }
}

/// One future child spec of a node under assembly, with the witness of its
/// interior keyed relative to the spec itself.
#[derive(Clone, Debug)]
struct Placed {
    spec: ChildSpec,
    w: BTreeMap<SchemaPath, Tag>,
}

fn prefix_map(prefix: &SchemaPath, map: BTreeMap<SchemaPath, Tag>) -> BTreeMap<SchemaPath, Tag> {
    map.into_iter()
        .map(|(k, v)| {
            let mut steps = prefix.0.clone();
            steps.extend(k.0);
            (SchemaPath(steps), v)
        })
        .collect()
}

/// Sorts the placed specs the way the node constructor will, then builds
/// the node, so witness indices match the final spec order.
fn assemble_node(node_tag: Tag, mut placed: Vec<Placed>) -> (TreeCompactum, BTreeMap<SchemaPath, Tag>) {
    placed.sort_by(|a, b| a.spec.cmp(&b.spec));
    let mut map = BTreeMap::new();
    map.insert(SchemaPath::default(), node_tag);
    let mut specs = Vec::with_capacity(placed.len());
    for (i, pl) in placed.into_iter().enumerate() {
        let at = SchemaPath(vec![SchemaStep::Spec(i)]);
        map.extend(prefix_map(&at, pl.w));
        specs.push(pl.spec);
    }
    (TreeCompactum::from_sorted(specs), map)
}

/// Repeat placed content `m` times. Concrete specs absorb the factor into
/// their multiplicity. A family already yields infinitely many instances at
/// every live stage, so a countable factor changes no stage size and the
/// family stands for all its copies; an uncountable factor does change
/// stage sizes and is carried by a fresh root over the family.
fn scale_placed(placed: Vec<Placed>, m: &Multiplicity) -> Vec<Placed> {
    if *m == Multiplicity::one() {
        return placed;
    }
    let countable = matches!(m, Multiplicity::Finite(_)) || *m == Multiplicity::omega();
    placed
        .into_iter()
        .map(|p| match p.spec {
            ChildSpec::Concrete { tree, mult } => {
                Placed { spec: ChildSpec::Concrete { tree, mult: mult.times(m) }, w: p.w }
            }
            spec @ ChildSpec::Family(_) => {
                if countable {
                    Placed { spec, w: p.w }
                } else {
                    let (tree, w) = assemble_node(Tag::Added, vec![Placed { spec, w: p.w }]);
                    Placed { spec: ChildSpec::Concrete { tree, mult: m.clone() }, w }
                }
            }
        })
        .collect()
}

/// Child specs (with witness) a presentation contributes to its hosting
/// node. A sum spills its parts; a point-with-base becomes one self-rooted
/// tree whose root is the image of the base point.
fn comp_specs(p: &Presentation, src: &PresPath) -> Vec<Placed> {
    match p {
        Presentation::Empty => vec![],
        Presentation::Single => {
            let mut w = BTreeMap::new();
            w.insert(SchemaPath::default(), Tag::Image(src.clone()));
            vec![Placed { spec: ChildSpec::Concrete { tree: TreeCompactum::leaf(), mult: Multiplicity::one() }, w }]
        }
        Presentation::Sum { parts, families } => {
            let mut out = Vec::new();
            for (k, (q, m)) in parts.iter().enumerate() {
                let sub = comp_specs(q, &src.child(PresStep::Part(k)));
                out.extend(scale_placed(sub, m));
            }
            for (i, fam) in families.iter().enumerate() {
                out.extend(placed_family(fam, i, src));
            }
            out
        }
        Presentation::PointWithBase { prefix, tail } => {
            let mut children = Vec::new();
            for (k, q) in prefix.iter().enumerate() {
                children.extend(comp_specs(q, &src.child(PresStep::Prefix(k))));
            }
            for (k, q) in tail.iter().enumerate() {
                let sub = comp_specs(q, &src.child(PresStep::Tail(k)));
                children.extend(scale_placed(sub, &Multiplicity::omega()));
            }
            let (tree, w) = assemble_node(Tag::Image(src.child(PresStep::Point)), children);
            vec![Placed { spec: ChildSpec::Concrete { tree, mult: Multiplicity::one() }, w }]
        }
    }
}

/// Rewrites of presentation sources when base content moves inside the
/// encoded family: the freestanding member-zero copy keeps its address, the
/// copy living in the family base is readdressed under the family.
fn readdress(tag: Tag, at: usize, idx: usize) -> Tag {
    let Tag::Image(path) = tag else { return tag };
    let mut steps = path.0;
    match steps.get(at) {
        Some(PresStep::FamilyMemberZero(i)) if *i == idx => {
            steps[at] = PresStep::FamilyBase(idx);
        }
        Some(PresStep::FamilyFrame(i, _)) if *i == idx => {
            steps.insert(at, PresStep::FamilyInnerCopy(idx));
        }
        _ => {}
    }
    Tag::Image(PresPath(steps))
}

fn readdress_map(map: BTreeMap<SchemaPath, Tag>, at: usize, idx: usize) -> BTreeMap<SchemaPath, Tag> {
    map.into_iter().map(|(k, v)| (k, readdress(v, at, idx))).collect()
}

/// Encode one presentation family as specs: a tree family over the
/// compactified context, plus a spilled copy of member zero whenever the
/// base does not fit a family base slot directly.
fn placed_family(fam: &PresFamily, idx: usize, src: &PresPath) -> Vec<Placed> {
    struct BuiltFrame {
        frame: CtxFrame,
        tag: Tag,
        sibs: Vec<Placed>,
    }

    let mut built: Vec<BuiltFrame> = Vec::new();
    for (j, frame) in fam.context().frames().iter().enumerate() {
        let fsrc = src.child(PresStep::FamilyFrame(idx, j));
        let (tag, mut sibs, hole_mult) = match frame {
            PresFrame::Sum { parts, families, hole_mult } => {
                let mut sibs = Vec::new();
                for (k, (q, m)) in parts.iter().enumerate() {
                    sibs.extend(scale_placed(comp_specs(q, &fsrc.child(PresStep::Part(k))), m));
                }
                for (fi, f2) in families.iter().enumerate() {
                    sibs.extend(placed_family(f2, fi, &fsrc));
                }
                (Tag::Added, sibs, hole_mult.clone())
            }
            PresFrame::PwbPrefix { before, after, tail } => {
                let mut sibs = Vec::new();
                for (k, q) in before.iter().enumerate() {
                    sibs.extend(comp_specs(q, &fsrc.child(PresStep::Prefix(k))));
                }
                for (k, q) in after.iter().enumerate() {
                    sibs.extend(comp_specs(q, &fsrc.child(PresStep::Prefix(before.len() + 1 + k))));
                }
                for (k, q) in tail.iter().enumerate() {
                    let sub = comp_specs(q, &fsrc.child(PresStep::Tail(k)));
                    sibs.extend(scale_placed(sub, &Multiplicity::omega()));
                }
                (Tag::Image(fsrc.child(PresStep::Point)), sibs, Multiplicity::one())
            }
            PresFrame::PwbTail { prefix, before, after } => {
                let mut sibs = Vec::new();
                for (k, q) in prefix.iter().enumerate() {
                    sibs.extend(comp_specs(q, &fsrc.child(PresStep::Prefix(k))));
                }
                for (k, q) in before.iter().enumerate() {
                    let sub = comp_specs(q, &fsrc.child(PresStep::Tail(k)));
                    sibs.extend(scale_placed(sub, &Multiplicity::omega()));
                }
                for (k, q) in after.iter().enumerate() {
                    let sub = comp_specs(q, &fsrc.child(PresStep::Tail(before.len() + 1 + k)));
                    sibs.extend(scale_placed(sub, &Multiplicity::omega()));
                }
                (Tag::Image(fsrc.child(PresStep::Point)), sibs, Multiplicity::omega())
            }
        };
        sibs.sort_by(|a, b| a.spec.cmp(&b.spec));
        let frame = CtxFrame::new(sibs.iter().map(|p| p.spec.clone()).collect(), hole_mult);
        built.push(BuiltFrame { frame, tag, sibs });
    }

    let tree_ctx = TreeContext::new(built.iter().map(|b| b.frame.clone()).collect())
        .expect("presentation contexts are nonempty");
    let mut fam_w: BTreeMap<SchemaPath, Tag> = BTreeMap::new();
    for (j, b) in built.iter().enumerate() {
        fam_w.insert(SchemaPath(vec![SchemaStep::Frame(j)]), b.tag.clone());
        for (s, sib) in b.sibs.iter().enumerate() {
            let at = SchemaPath(vec![SchemaStep::FrameSib(j, s)]);
            fam_w.extend(prefix_map(&at, sib.w.clone()));
        }
    }

    let m0 = comp_specs(fam.base(), &src.child(PresStep::FamilyMemberZero(idx)));

    // A base that is already a single plain tree slots in directly and the
    // family carries every member including the base itself.
    if let [Placed { spec: ChildSpec::Concrete { tree, mult }, w }] = m0.as_slice() {
        if *mult == Multiplicity::one() {
            let base_w = readdress_map(w.clone(), src.0.len(), idx);
            fam_w.extend(prefix_map(&SchemaPath(vec![SchemaStep::Base]), base_w));
            let spec = ChildSpec::Family(FamilySpec::new_unchecked(tree_ctx, tree.clone()));
            return vec![Placed { spec, w: fam_w }];
        }
    }

    // Otherwise the family starts at member one: its base is the first
    // context copy wrapped around the base content, and member zero is
    // spilled beside the family as plain specs.
    let (inner, outer) = built.split_last().expect("contexts are nonempty");
    let mut v1_children: Vec<Placed> = inner.sibs.clone();
    v1_children.extend(scale_placed(m0.clone(), inner.frame.hole_mult()));
    let (mut v1_tree, mut v1_map) = assemble_node(inner.tag.clone(), v1_children);
    for b in outer.iter().rev() {
        let mut children = b.sibs.clone();
        children.push(Placed {
            spec: ChildSpec::Concrete { tree: v1_tree, mult: b.frame.hole_mult().clone() },
            w: v1_map,
        });
        let (t, m) = assemble_node(b.tag.clone(), children);
        v1_tree = t;
        v1_map = m;
    }
    let v1_map = readdress_map(v1_map, src.0.len(), idx);
    fam_w.extend(prefix_map(&SchemaPath(vec![SchemaStep::Base]), v1_map));

    let mut out = m0;
    out.push(Placed {
        spec: ChildSpec::Family(FamilySpec::new_unchecked(tree_ctx, v1_tree)),
        w: fam_w,
    });
    out
}

/// Compactify a presentation into a tree encoding plus density witness.
///
/// Compact material keeps its shape (a finite discrete sum stays a forest);
/// anything escaping gets gathered under added limit points.
pub fn compactify(p: &Presentation) -> (Term, DensityWitness) {
    let src = PresPath::default();
    match p {
        Presentation::Empty => (Term::Forest(CompactForest::empty()), DensityWitness::default()),
        Presentation::Single => {
            let mut entries = BTreeMap::new();
            entries.insert(SchemaPath::default(), Tag::Image(src));
            (Term::Tree(TreeCompactum::leaf()), DensityWitness::new(entries))
        }
        Presentation::PointWithBase { .. } => {
            let placed = comp_specs(p, &src);
            let [Placed { spec: ChildSpec::Concrete { tree, .. }, w }] = placed.as_slice() else {
                unreachable!("a point with base encodes as one rooted tree");
            };
            (Term::Tree(tree.clone()), DensityWitness::new(w.clone()))
        }
        Presentation::Sum { .. } => {
            let mut placed = comp_specs(p, &src);
            let finite_concrete = placed.iter().all(|pl| match &pl.spec {
                ChildSpec::Concrete { mult, .. } => mult.is_finite(),
                ChildSpec::Family(_) => false,
            });
            if finite_concrete {
                placed.sort_by(|a, b| a.spec.cmp(&b.spec));
                let mut entries: Vec<(TreeCompactum, BigUint)> = Vec::new();
                let mut map = BTreeMap::new();
                for pl in placed {
                    let ChildSpec::Concrete { tree, mult } = pl.spec else { unreachable!() };
                    let n = mult.as_finite().expect("finite branch").clone();
                    match entries.last_mut() {
                        Some((t, c)) if *t == tree => *c += n,
                        _ => {
                            let at = SchemaPath(vec![SchemaStep::Spec(entries.len())]);
                            map.extend(prefix_map(&at, pl.w));
                            entries.push((tree, n));
                        }
                    }
                }
                (Term::Forest(CompactForest::new(entries)), DensityWitness::new(map))
            } else {
                let (tree, map) = assemble_node(Tag::Added, placed);
                (Term::Tree(tree), DensityWitness::new(map))
            }
        }
    }
}

/// Height bookkeeping: the encoded height may exceed the presentation
/// height only by the finite excess the construction introduces, namely at
/// most one more than the finite part of the height again.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub alpha: Ordinal,
    pub finite_part: BigUint,
    pub bound: Ordinal,
    pub actual: Ordinal,
    pub ok: bool,
}

pub fn check_bound(p: &Presentation, t: &Term) -> BoundReport {
    let alpha = pres_sch(p);
    let (_, n) = alpha.split_limit_finite();
    let bound = alpha.add(&Ordinal::from_nat(&n + BigUint::one()));
    let actual = sch_height_term(t);
    let ok = actual <= bound;
    BoundReport { alpha, finite_part: n, bound, actual, ok }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum DensityIssue {
    Missing(SchemaPath),
    Extra(SchemaPath),
    LeafNotImage(SchemaPath),
    AddedAtFinite(SchemaPath),
    DuplicateSource(PresPath),
}

impl fmt::Display for DensityIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityIssue::Missing(p) => write!(f, "position {} has no witness entry", p),
            DensityIssue::Extra(p) => write!(f, "witness entry {} matches no position", p),
            DensityIssue::LeafNotImage(p) => write!(f, "added point at leaf {}", p),
            DensityIssue::AddedAtFinite(p) => {
                write!(f, "added point at {} accumulates only finitely many instances", p)
            }
            DensityIssue::DuplicateSource(p) => {
                write!(f, "presentation point {} used as image twice", p)
            }
        }
    }
}

fn collect_positions(term: &Term) -> BTreeSet<SchemaPath> {
    fn walk_tree(t: &TreeCompactum, at: &SchemaPath, out: &mut BTreeSet<SchemaPath>) {
        out.insert(at.clone());
        for (i, spec) in t.children().iter().enumerate() {
            walk_spec(spec, &at.child(SchemaStep::Spec(i)), out);
        }
    }
    fn walk_spec(spec: &ChildSpec, at: &SchemaPath, out: &mut BTreeSet<SchemaPath>) {
        match spec {
            ChildSpec::Concrete { tree, .. } => walk_tree(tree, at, out),
            ChildSpec::Family(fam) => {
                for (j, frame) in fam.context().frames().iter().enumerate() {
                    out.insert(at.child(SchemaStep::Frame(j)));
                    for (s, sib) in frame.siblings().iter().enumerate() {
                        walk_spec(sib, &at.child(SchemaStep::FrameSib(j, s)), out);
                    }
                }
                walk_tree(fam.base(), &at.child(SchemaStep::Base), out);
            }
        }
    }
    let mut out = BTreeSet::new();
    match term {
        Term::Tree(t) => walk_tree(t, &SchemaPath::default(), &mut out),
        Term::Forest(f) => {
            for (i, (t, _)) in f.trees().iter().enumerate() {
                walk_tree(t, &SchemaPath(vec![SchemaStep::Spec(i)]), &mut out);
            }
        }
    }
    out
}

enum Node<'a> {
    Tree(&'a TreeCompactum),
    Frame(&'a FamilySpec, usize),
}

fn find_node<'a>(term: &'a Term, path: &SchemaPath) -> Option<Node<'a>> {
    enum Cursor<'a> {
        Tree(&'a TreeCompactum),
        Fam(&'a FamilySpec),
    }
    let mut steps = path.0.iter().peekable();
    let mut cur = match term {
        Term::Tree(t) => Cursor::Tree(t),
        Term::Forest(f) => {
            let Some(SchemaStep::Spec(i)) = steps.next() else { return None };
            Cursor::Tree(&f.trees().get(*i)?.0)
        }
    };
    while let Some(step) = steps.next() {
        cur = match (cur, step) {
            (Cursor::Tree(t), SchemaStep::Spec(i)) => match t.children().get(*i)? {
                ChildSpec::Concrete { tree, .. } => Cursor::Tree(tree),
                ChildSpec::Family(fam) => Cursor::Fam(fam),
            },
            (Cursor::Fam(fam), SchemaStep::Frame(j)) => {
                if steps.peek().is_some() {
                    return None;
                }
                if *j >= fam.context().frames().len() {
                    return None;
                }
                return Some(Node::Frame(fam, *j));
            }
            (Cursor::Fam(fam), SchemaStep::FrameSib(j, s)) => {
                match fam.context().frames().get(*j)?.siblings().get(*s)? {
                    ChildSpec::Concrete { tree, .. } => Cursor::Tree(tree),
                    ChildSpec::Family(f2) => Cursor::Fam(f2),
                }
            }
            (Cursor::Fam(fam), SchemaStep::Base) => Cursor::Tree(fam.base()),
            _ => return None,
        };
    }
    match cur {
        Cursor::Tree(t) => Some(Node::Tree(t)),
        Cursor::Fam(_) => None,
    }
}

/// Instances accumulating at a frame node, in its weakest copy: fixed
/// siblings plus the hole filled through the inner frames with the family
/// base. Later copies only gain content, so this is the worst case.
fn frame_instances(fam: &FamilySpec, j: usize) -> Card {
    let frames = fam.context().frames();
    let mut total = Card::zero();
    for sib in frames[j].siblings() {
        total = total.plus(&sib.instance_card());
    }
    let filling = if j + 1 == frames.len() {
        fam.base().clone()
    } else {
        TreeContext::new(frames[j + 1..].to_vec())
            .expect("nonempty tail of frames")
            .plug(fam.base())
    };
    total.plus(&frames[j].hole_mult().as_card().times(&point_count(&filling)))
}

/// Structural density check, entirely from the witness: every position is
/// accounted for, added points sit only where infinitely many instances of
/// witnessed material accumulate, and no presentation point is used twice.
pub fn check_dense(term: &Term, witness: &DensityWitness) -> Result<(), Vec<DensityIssue>> {
    let mut issues = Vec::new();
    let positions = collect_positions(term);
    for pos in &positions {
        if !witness.entries.contains_key(pos) {
            issues.push(DensityIssue::Missing(pos.clone()));
        }
    }
    for path in witness.entries.keys() {
        if !positions.contains(path) {
            issues.push(DensityIssue::Extra(path.clone()));
        }
    }
    let mut seen: BTreeSet<&PresPath> = BTreeSet::new();
    for (path, tag) in &witness.entries {
        match tag {
            Tag::Image(src) => {
                if !seen.insert(src) {
                    issues.push(DensityIssue::DuplicateSource(src.clone()));
                }
            }
            Tag::Added => match find_node(term, path) {
                Some(Node::Tree(t)) if t.is_leaf() => {
                    issues.push(DensityIssue::LeafNotImage(path.clone()));
                }
                Some(Node::Tree(t)) => {
                    if t.root_isolated() {
                        issues.push(DensityIssue::AddedAtFinite(path.clone()));
                    }
                }
                Some(Node::Frame(fam, j)) if frame_instances(fam, j).is_finite() => {
                    issues.push(DensityIssue::AddedAtFinite(path.clone()));
                }
                Some(Node::Frame(..)) => {}
                None => {}
            },
        }
    }
    if issues.is_empty() {
        Ok(())
    } else {
        Err(issues)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::present::{pres_point_count, pres_van, PresContext};
    use crate::rank::{homeo_countable, level_size_term, van_rank_term};

    fn pt() -> Presentation {
        Presentation::Single
    }

    fn psum(parts: Vec<(Presentation, Multiplicity)>) -> Presentation {
        Presentation::sum(parts, vec![])
    }

    fn pwb(prefix: Vec<Presentation>, tail: Vec<Presentation>) -> Presentation {
        Presentation::PointWithBase { prefix, tail }
    }

    fn tail_tower() -> PresContext {
        PresContext::new(vec![PresFrame::PwbTail { prefix: vec![], before: vec![], after: vec![] }])
            .unwrap()
    }

    fn seq_tree() -> TreeCompactum {
        TreeCompactum::new(vec![ChildSpec::Concrete {
            tree: TreeCompactum::leaf(),
            mult: Multiplicity::omega(),
        }])
    }

    /// Independent encoder for compact presentations, used to cross-check
    /// the compactification against a directly built space.
    fn direct_entries(p: &Presentation) -> Vec<(TreeCompactum, BigUint)> {
        match p {
            Presentation::Empty => vec![],
            Presentation::Single => vec![(TreeCompactum::leaf(), BigUint::one())],
            Presentation::Sum { parts, families } => {
                assert!(families.is_empty(), "compact sums have no families");
                let mut out = Vec::new();
                for (q, m) in parts {
                    let n = m.as_finite().expect("compact sums are finite").clone();
                    for (t, c) in direct_entries(q) {
                        out.push((t, c * &n));
                    }
                }
                out
            }
            Presentation::PointWithBase { prefix, tail } => {
                let mut specs = Vec::new();
                for q in prefix {
                    for (t, c) in direct_entries(q) {
                        specs.push(ChildSpec::Concrete { tree: t, mult: Multiplicity::finite(c) });
                    }
                }
                for q in tail {
                    for (t, _) in direct_entries(q) {
                        specs.push(ChildSpec::Concrete { tree: t, mult: Multiplicity::omega() });
                    }
                }
                vec![(TreeCompactum::new(specs), BigUint::one())]
            }
        }
    }

    fn direct(p: &Presentation) -> Term {
        Term::Forest(CompactForest::new(direct_entries(p)))
    }

    fn witness_json(w: &DensityWitness) -> serde_json::Value {
        serde_json::to_value(w).unwrap()
    }

    #[test]
    fn single_point_is_a_leaf() {
        let (t, w) = compactify(&pt());
        assert_eq!(t, Term::Tree(TreeCompactum::leaf()));
        assert_eq!(check_dense(&t, &w), Ok(()));
        assert!(check_bound(&pt(), &t).ok);
        assert_eq!(case_of(&pt()), Case::Singleton);
        assert_eq!(witness_json(&w), serde_json::json!({"points": {".": "."}, "added": []}));
    }

    #[test]
    fn finite_sums_stay_forests() {
        let p = psum(vec![(pt(), Multiplicity::one()), (pt(), Multiplicity::finite(2u64))]);
        let (t, w) = compactify(&p);
        assert_eq!(
            t,
            Term::Forest(CompactForest::new(vec![(TreeCompactum::leaf(), BigUint::from(3u64))]))
        );
        assert_eq!(check_dense(&t, &w), Ok(()));
        assert!(check_bound(&p, &t).ok);
        assert_eq!(case_of(&p), Case::Successor);
        assert_eq!(homeo_countable(&t, &direct(&p)), Ok(true));
        // Merged copies keep one representative source.
        assert_eq!(w.image_count(), 1);
    }

    #[test]
    fn escaping_sums_get_a_limit_root() {
        let p = psum(vec![(pt(), Multiplicity::omega())]);
        let (t, w) = compactify(&p);
        assert_eq!(t, Term::Tree(seq_tree()));
        assert_eq!(check_dense(&t, &w), Ok(()));
        assert!(check_bound(&p, &t).ok);
        assert_eq!(case_of(&p), Case::Successor);
        assert_eq!(
            witness_json(&w),
            serde_json::json!({"points": {"p0": "0"}, "added": ["."]})
        );
        // The presentation height never exceeds the encoded height.
        assert!(pres_sch(&p) <= sch_height_term(&t));
    }

    #[test]
    fn base_points_root_their_own_tree() {
        let p = pwb(vec![], vec![pt()]);
        let (t, w) = compactify(&p);
        assert_eq!(t, Term::Tree(seq_tree()));
        assert_eq!(check_dense(&t, &w), Ok(()));
        assert!(check_bound(&p, &t).ok);
        assert_eq!(case_of(&p), Case::Singleton);
        assert_eq!(homeo_countable(&t, &direct(&p)), Ok(true));
        assert_eq!(
            witness_json(&w),
            serde_json::json!({"points": {"pt": ".", "t0": "0"}, "added": []})
        );
    }

    #[test]
    fn prefixes_enter_once_and_tails_cyclically() {
        let p = pwb(vec![pt(), pwb(vec![], vec![pt()])], vec![pt()]);
        let (t, w) = compactify(&p);
        let expect = TreeCompactum::new(vec![
            ChildSpec::Concrete { tree: TreeCompactum::leaf(), mult: Multiplicity::one() },
            ChildSpec::Concrete { tree: TreeCompactum::leaf(), mult: Multiplicity::omega() },
            ChildSpec::Concrete { tree: seq_tree(), mult: Multiplicity::one() },
        ]);
        assert_eq!(t, Term::Tree(expect));
        assert_eq!(check_dense(&t, &w), Ok(()));
        assert!(check_bound(&p, &t).ok);
        assert_eq!(homeo_countable(&t, &direct(&p)), Ok(true));
    }

    #[test]
    fn isolated_base_points_stay_isolated() {
        // Compact: a lone point beside a convergent sequence. The root has
        // finitely many child instances, so no false limit appears.
        let p = pwb(vec![pwb(vec![], vec![pt()])], vec![]);
        let (t, w) = compactify(&p);
        assert_eq!(
            t,
            Term::Tree(TreeCompactum::new(vec![ChildSpec::Concrete {
                tree: seq_tree(),
                mult: Multiplicity::one(),
            }]))
        );
        assert_eq!(check_dense(&t, &w), Ok(()));
        assert_eq!(homeo_countable(&t, &direct(&p)), Ok(true));
        assert!(check_bound(&p, &t).ok);
    }

    #[test]
    fn tower_families_encode_as_tree_families() {
        let fam = PresFamily::new(tail_tower(), pt()).unwrap();
        let p = Presentation::sum(vec![], vec![fam]);
        assert_eq!(case_of(&p), Case::Limit);

        let (t, w) = compactify(&p);
        let expect_fam = FamilySpec::new(
            TreeContext::new(vec![CtxFrame::new(vec![], Multiplicity::omega())]).unwrap(),
            TreeCompactum::leaf(),
        )
        .unwrap();
        assert_eq!(
            t,
            Term::Tree(TreeCompactum::new(vec![ChildSpec::Family(expect_fam)]))
        );
        assert_eq!(check_dense(&t, &w), Ok(()));
        let report = check_bound(&p, &t);
        assert!(report.ok);
        assert_eq!(report.alpha, Ordinal::omega());
        assert_eq!(sch_height_term(&t), Ordinal::omega());
        assert_eq!(
            witness_json(&w),
            serde_json::json!({
                "points": {"b0": "0/b", "c0.0/pt": "0/f0"},
                "added": ["."]
            })
        );
    }

    #[test]
    fn wide_bases_spill_member_zero() {
        let base = psum(vec![(pt(), Multiplicity::finite(2u64))]);
        let fam = PresFamily::new(tail_tower(), base).unwrap();
        let p = Presentation::sum(vec![], vec![fam]);
        let (t, w) = compactify(&p);

        let v1 = TreeCompactum::new(vec![ChildSpec::Concrete {
            tree: TreeCompactum::leaf(),
            mult: Multiplicity::omega(),
        }]);
        let expect_fam = FamilySpec::new(
            TreeContext::new(vec![CtxFrame::new(vec![], Multiplicity::omega())]).unwrap(),
            v1,
        )
        .unwrap();
        let expect = TreeCompactum::new(vec![
            ChildSpec::Concrete { tree: TreeCompactum::leaf(), mult: Multiplicity::finite(2u64) },
            ChildSpec::Family(expect_fam),
        ]);
        assert_eq!(t, Term::Tree(expect));
        assert_eq!(check_dense(&t, &w), Ok(()));
        assert!(check_bound(&p, &t).ok);
        assert_eq!(
            witness_json(&w),
            serde_json::json!({
                "points": {
                    "z0/p0": "0",
                    "c0.0/pt": "1/f0",
                    "v0/c0.0/pt": "1/b",
                    "b0/p0": "1/b/0"
                },
                "added": ["."]
            })
        );
    }

    #[test]
    fn countable_repetition_absorbs_into_the_family() {
        // Two copies of a family union have the same stage sizes as one, so
        // the factor vanishes instead of stacking wrapper nodes.
        let fam = PresFamily::new(tail_tower(), pt()).unwrap();
        let inner = Presentation::sum(vec![], vec![fam]);
        let p = psum(vec![(inner, Multiplicity::finite(2u64))]);
        let (t, w) = compactify(&p);

        let expect_fam = FamilySpec::new(
            TreeContext::new(vec![CtxFrame::new(vec![], Multiplicity::omega())]).unwrap(),
            TreeCompactum::leaf(),
        )
        .unwrap();
        assert_eq!(t, Term::Tree(TreeCompactum::new(vec![ChildSpec::Family(expect_fam)])));
        assert_eq!(check_dense(&t, &w), Ok(()));
        assert!(check_bound(&p, &t).ok);
        assert_eq!(pres_sch(&p), sch_height_term(&t));
        assert_eq!(
            witness_json(&w),
            serde_json::json!({
                "points": {"p0/b0": "0/b", "p0/c0.0/pt": "0/f0"},
                "added": ["."]
            })
        );
    }

    #[test]
    fn uncountable_repetition_of_families_is_rooted() {
        let fam = PresFamily::new(tail_tower(), pt()).unwrap();
        let inner = Presentation::sum(vec![], vec![fam]);
        let p = psum(vec![(inner, Multiplicity::Aleph(1))]);
        let (t, w) = compactify(&p);

        let expect_fam = FamilySpec::new(
            TreeContext::new(vec![CtxFrame::new(vec![], Multiplicity::omega())]).unwrap(),
            TreeCompactum::leaf(),
        )
        .unwrap();
        let wrapped = TreeCompactum::new(vec![ChildSpec::Family(expect_fam)]);
        let expect = TreeCompactum::new(vec![ChildSpec::Concrete {
            tree: wrapped,
            mult: Multiplicity::Aleph(1),
        }]);
        assert_eq!(t, Term::Tree(expect));
        assert_eq!(check_dense(&t, &w), Ok(()));
        let report = check_bound(&p, &t);
        assert!(report.ok);
        assert_eq!(report.actual, Ordinal::omega().succ());
    }

    #[test]
    fn nested_scaling_stays_flat() {
        // Families behind several layers of countable repetition must not
        // pick up one wrapper node per layer, or the height bound breaks.
        let fam_r = PresFamily::new(tail_tower(), pt()).unwrap();
        let r = Presentation::sum(vec![], vec![fam_r]);
        let fam_q = PresFamily::new(tail_tower(), pwb(vec![], vec![pt()])).unwrap();
        let q = Presentation::sum(vec![(r, Multiplicity::omega())], vec![fam_q]);
        let p = psum(vec![(q, Multiplicity::omega())]);
        let (t, w) = compactify(&p);

        let Term::Tree(tree) = &t else { panic!("escaping sum roots a tree") };
        assert_eq!(tree.children().len(), 2);
        assert!(tree.children().iter().all(|s| matches!(s, ChildSpec::Family(_))));
        assert_eq!(check_dense(&t, &w), Ok(()));
        let report = check_bound(&p, &t);
        assert!(report.ok, "{} > {}", report.actual, report.bound);
        assert_eq!(sch_height_term(&t), Ordinal::omega());
    }

    #[test]
    fn uncountable_sums_survive_encoding() {
        let p = psum(vec![(pt(), Multiplicity::Aleph(1))]);
        let (t, w) = compactify(&p);
        assert_eq!(
            t,
            Term::Tree(TreeCompactum::new(vec![ChildSpec::Concrete {
                tree: TreeCompactum::leaf(),
                mult: Multiplicity::Aleph(1),
            }]))
        );
        assert_eq!(check_dense(&t, &w), Ok(()));
        assert!(check_bound(&p, &t).ok);
        assert_eq!(level_size_term(&t, &Ordinal::zero()), Card::Aleph(1));
    }

    #[test]
    fn ranks_transport_through_compactification() {
        let samples = vec![
            pt(),
            psum(vec![(pt(), Multiplicity::finite(3u64))]),
            psum(vec![(pt(), Multiplicity::omega()), (pwb(vec![], vec![pt()]), Multiplicity::one())]),
            pwb(vec![psum(vec![(pt(), Multiplicity::omega())])], vec![pt(), pt()]),
            pwb(vec![], vec![pwb(vec![], vec![pt()])]),
        ];
        for p in samples {
            let (t, w) = compactify(&p);
            assert_eq!(check_dense(&t, &w), Ok(()), "{p}");
            let report = check_bound(&p, &t);
            assert!(report.ok, "{p}: {} > {}", report.actual, report.bound);
            assert!(pres_sch(&p) <= sch_height_term(&t), "{p}");
            // The base point count is preserved: nothing is lost, additions
            // are at most countably many limit points.
            assert!(pres_point_count(&p) <= crate::rank::point_count_term(&t), "{p}");
            if p.is_compact() && p.is_countable() {
                assert_eq!(homeo_countable(&t, &direct(&p)), Ok(true), "{p}");
            }
        }
    }

    #[test]
    fn tampered_witnesses_fail_the_density_check() {
        let p = pwb(vec![], vec![pt()]);
        let (t, w) = compactify(&p);

        // Retag the tail leaf as added: an added point may not be isolated.
        let mut bad = w.entries().clone();
        bad.insert(SchemaPath(vec![SchemaStep::Spec(0)]), Tag::Added);
        let issues = check_dense(&t, &DensityWitness::new(bad)).unwrap_err();
        assert!(issues.contains(&DensityIssue::LeafNotImage(SchemaPath(vec![SchemaStep::Spec(0)]))));

        // Drop the root entry.
        let mut missing = w.entries().clone();
        missing.remove(&SchemaPath::default());
        let issues = check_dense(&t, &DensityWitness::new(missing)).unwrap_err();
        assert!(issues.contains(&DensityIssue::Missing(SchemaPath::default())));

        // Invent an entry off the tree.
        let mut extra = w.entries().clone();
        extra.insert(SchemaPath(vec![SchemaStep::Spec(7)]), Tag::Added);
        let issues = check_dense(&t, &DensityWitness::new(extra)).unwrap_err();
        assert!(issues.contains(&DensityIssue::Extra(SchemaPath(vec![SchemaStep::Spec(7)]))));

        // Reuse a source for two positions.
        let mut dup = w.entries().clone();
        dup.insert(
            SchemaPath(vec![SchemaStep::Spec(0)]),
            Tag::Image(PresPath(vec![PresStep::Point])),
        );
        let issues = check_dense(&t, &DensityWitness::new(dup)).unwrap_err();
        assert!(issues
            .iter()
            .any(|i| matches!(i, DensityIssue::DuplicateSource(_))));
    }

    #[test]
    fn every_case_occurs() {
        assert_eq!(case_of(&Presentation::Empty), Case::Successor);
        assert_eq!(case_of(&pwb(vec![], vec![pt()])), Case::Singleton);
        assert_eq!(case_of(&psum(vec![(pt(), Multiplicity::finite(2u64))])), Case::Successor);
        let fam = PresFamily::new(tail_tower(), pt()).unwrap();
        assert_eq!(case_of(&Presentation::sum(vec![], vec![fam])), Case::Limit);
    }

    #[test]
    fn derived_levels_agree_for_encoded_towers() {
        let fam = PresFamily::new(tail_tower(), pt()).unwrap();
        let p = Presentation::sum(vec![(pt(), Multiplicity::omega())], vec![fam]);
        let (t, _) = compactify(&p);
        assert_eq!(van_rank_term(&t), pres_van(&p).succ());
        for stage in [Ordinal::zero(), Ordinal::from(3u64)] {
            // The encoding only adds countably many points per stage.
            assert_eq!(level_size_term(&t, &stage), pres_level(&p, &stage));
        }
    }
}
