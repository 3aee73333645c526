//! Presentations: constructor-style recipes for scattered spaces. Instead of
//! a tree of points, a presentation is built from nothing, single points,
//! formal disjoint sums, and points carrying a convergent neighborhood base.
//!
//! Sums contribute no point of their own; a `PointWithBase` owns exactly one.
//! Tower families (omega-many members produced by iterating a context) let a
//! presentation reach limit heights.

use std::fmt;

use thiserror::Error;

use crate::cardinal::{Card, Multiplicity};
use crate::ordinal::Ordinal;
use crate::rank::sch_from_van;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PresError {
    #[error("presentation family members do not settle into a constant positive height increment")]
    InvalidFamily,
    #[error("a presentation context needs at least one frame")]
    EmptyContext,
    #[error("a sum frame must keep infinitely many points beside its hole in every copy")]
    DeadFrame,
}

/// A scattered-space recipe.
///
/// `Sum` parts are kept sorted (build through [`Presentation::sum`]); like
/// forest entries they are a formal union and add no point. `PointWithBase`
/// is one point `a` together with clopen pieces marching toward it: each
/// `prefix` piece appears once, then the `tail` pieces repeat forever, and
/// only the cyclic tail keeps `a` from being isolated.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Presentation {
    Empty,
    Single,
    Sum {
        parts: Vec<(Presentation, Multiplicity)>,
        families: Vec<PresFamily>,
    },
    PointWithBase {
        prefix: Vec<Presentation>,
        tail: Vec<Presentation>,
    },
}

impl Presentation {
    pub fn sum(mut parts: Vec<(Presentation, Multiplicity)>, mut families: Vec<PresFamily>) -> Self {
        parts.sort();
        families.sort();
        Presentation::Sum { parts, families }
    }

    pub fn is_countable(&self) -> bool {
        pres_point_count(self) <= Card::aleph0()
    }

    pub fn is_empty_space(&self) -> bool {
        pres_point_count(self) == Card::zero()
    }

    /// Compactness is syntactic: sums must be finite unions of compact parts
    /// (a family is an escaping omega-union), while a base point compactifies
    /// its own tail, so a `PointWithBase` only needs compact pieces.
    pub fn is_compact(&self) -> bool {
        match self {
            Presentation::Empty | Presentation::Single => true,
            Presentation::Sum { parts, families } => {
                families.is_empty()
                    && parts.iter().all(|(q, m)| m.is_finite() && q.is_compact())
            }
            Presentation::PointWithBase { prefix, tail } => {
                prefix.iter().all(|q| q.is_compact()) && tail.iter().all(|q| q.is_compact())
            }
        }
    }
}

/// One layer of a presentation context: where the hole sits inside the node
/// built around it.
///
/// A `Sum` frame adds the member as one more summand; when encoded as a tree
/// it grows a carrier node, which is why such frames must stay alive (see
/// [`PresFamily::new`]). The two `Pwb` frames put the member into a point's
/// base, either once (`PwbPrefix`) or cyclically (`PwbTail`); only the
/// cyclic slot raises member heights.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum PresFrame {
    Sum {
        parts: Vec<(Presentation, Multiplicity)>,
        families: Vec<PresFamily>,
        hole_mult: Multiplicity,
    },
    PwbPrefix {
        before: Vec<Presentation>,
        after: Vec<Presentation>,
        tail: Vec<Presentation>,
    },
    PwbTail {
        prefix: Vec<Presentation>,
        before: Vec<Presentation>,
        after: Vec<Presentation>,
    },
}

impl PresFrame {
    fn plug(&self, member: &Presentation) -> Presentation {
        match self {
            PresFrame::Sum { parts, families, hole_mult } => {
                let mut all = parts.clone();
                all.push((member.clone(), hole_mult.clone()));
                Presentation::sum(all, families.clone())
            }
            PresFrame::PwbPrefix { before, after, tail } => {
                let mut prefix = before.clone();
                prefix.push(member.clone());
                prefix.extend(after.iter().cloned());
                Presentation::PointWithBase { prefix, tail: tail.clone() }
            }
            PresFrame::PwbTail { prefix, before, after } => {
                let mut tail = before.clone();
                tail.push(member.clone());
                tail.extend(after.iter().cloned());
                Presentation::PointWithBase { prefix: prefix.clone(), tail }
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PresContext {
    frames: Vec<PresFrame>,
}

impl PresContext {
    pub fn new(frames: Vec<PresFrame>) -> Result<Self, PresError> {
        if frames.is_empty() {
            return Err(PresError::EmptyContext);
        }
        Ok(PresContext { frames })
    }

    pub fn frames(&self) -> &[PresFrame] {
        &self.frames
    }

    /// Replace the hole by a presentation, folding frames from the inside out.
    pub fn plug(&self, member: &Presentation) -> Presentation {
        let mut cur = member.clone();
        for frame in self.frames.iter().rev() {
            cur = frame.plug(&cur);
        }
        cur
    }

    pub fn iterate(&self, base: &Presentation, k: usize) -> Presentation {
        let mut cur = base.clone();
        for _ in 0..k {
            cur = self.plug(&cur);
        }
        cur
    }

    /// How often one hole copy is repeated: sum holes multiply by their
    /// multiplicity, a prefix slot holds one copy, a cyclic tail slot
    /// countably many.
    pub(crate) fn hole_path_mult(&self) -> Card {
        let mut m = Card::from(1u64);
        for frame in &self.frames {
            match frame {
                PresFrame::Sum { hole_mult, .. } => m = m.times(&hole_mult.as_card()),
                PresFrame::PwbPrefix { .. } => {}
                PresFrame::PwbTail { .. } => m = m.times(&Card::aleph0()),
            }
        }
        m
    }
}

/// Omega-many members `base`, `ctx[base]`, `ctx[ctx[base]]`, ... taken as one
/// formal union inside a sum.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PresFamily {
    context: PresContext,
    base: Presentation,
}

const PRES_FIT_MEMBERS: usize = 6;

impl PresFamily {
    /// Validates liveness of every sum frame, then regularity of member
    /// growth (same sliding-window scheme as tree families).
    ///
    /// A sum frame grows a carrier node when the family is encoded as a
    /// tree; that node must sit at a limit of its child instances. Points
    /// deep inside a single piece accumulate at that piece's own root, not
    /// at the carrier, so what counts is how many pieces the frame gathers:
    /// parts weighted by the pieces they split into, any inner family
    /// (infinitely many members), and the filled hole. Iterated members fill
    /// the hole with one wrapped copy per multiplicity unit; the first built
    /// member fills it with the base, which contributes its own pieces and
    /// may be empty. The `Pwb` frames carry a real base point of the
    /// presentation and need no such check.
    pub fn new(context: PresContext, base: Presentation) -> Result<Self, PresError> {
        let innermost = context.frames().len() - 1;
        for (i, frame) in context.frames().iter().enumerate() {
            let PresFrame::Sum { parts, families, hole_mult } = frame else {
                continue;
            };
            let mut around = Card::zero();
            for (q, m) in parts {
                around = around.plus(&m.times_card(&root_pieces(q)));
            }
            if !families.is_empty() {
                around = around.plus(&Card::aleph0());
            }
            if around.plus(&hole_mult.as_card()).is_finite() {
                return Err(PresError::DeadFrame);
            }
            if i == innermost && around.plus(&hole_mult.times_card(&root_pieces(&base))).is_finite()
            {
                return Err(PresError::DeadFrame);
            }
        }
        let fam = PresFamily { context, base };
        fam.fit()?;
        Ok(fam)
    }

    pub fn context(&self) -> &PresContext {
        &self.context
    }

    pub fn base(&self) -> &Presentation {
        &self.base
    }

    pub fn member(&self, k: usize) -> Presentation {
        self.context.iterate(&self.base, k)
    }

    /// Supremum of the member heights; the stage at which the family's
    /// points are exhausted.
    pub fn sup(&self) -> Ordinal {
        self.fit().expect("constructed presentation families are regular")
    }

    fn fit(&self) -> Result<Ordinal, PresError> {
        let mut member = self.base.clone();
        let mut heights = Vec::with_capacity(PRES_FIT_MEMBERS);
        heights.push(pres_sch(&member));
        for _ in 1..PRES_FIT_MEMBERS {
            member = self.context.plug(&member);
            heights.push(pres_sch(&member));
        }
        for start in 0..=PRES_FIT_MEMBERS - 4 {
            let window = &heights[start..start + 4];
            let d = match window[0].left_diff(&window[1]) {
                Some(d) if !d.is_zero() => d,
                _ => continue,
            };
            if window[1].left_diff(&window[2]).as_ref() == Some(&d)
                && window[2].left_diff(&window[3]).as_ref() == Some(&d)
            {
                return Ok(window[0].add(&d.mul_by_omega()));
            }
        }
        Err(PresError::InvalidFamily)
    }
}

/// Largest height of any cyclic tail piece: the rank of the base point
/// itself, since cofinally repeated content of rank approaching tau keeps
/// the point alive through stage tau and no further.
fn tail_rank(tail: &[Presentation]) -> Ordinal {
    let mut tau = Ordinal::zero();
    for q in tail {
        tau = tau.max(pres_van(q));
    }
    tau
}

/// Least stage whose derived set is empty.
pub fn pres_van(p: &Presentation) -> Ordinal {
    match p {
        Presentation::Empty => Ordinal::zero(),
        Presentation::Single => Ordinal::one(),
        Presentation::Sum { parts, families } => {
            let mut v = Ordinal::zero();
            for (q, _) in parts {
                v = v.max(pres_van(q));
            }
            for f in families {
                v = v.max(f.sup());
            }
            v
        }
        Presentation::PointWithBase { prefix, tail } => {
            let mut v = tail_rank(tail).succ();
            for q in prefix {
                v = v.max(pres_van(q));
            }
            v
        }
    }
}

/// Size of the derived set at `stage`. Pieces converging to a base point are
/// clopen, so they derive independently; the point survives exactly while
/// its cyclic tail does.
pub fn pres_level(p: &Presentation, stage: &Ordinal) -> Card {
    match p {
        Presentation::Empty => Card::zero(),
        Presentation::Single => {
            if stage.is_zero() {
                Card::from(1u64)
            } else {
                Card::zero()
            }
        }
        Presentation::Sum { parts, families } => {
            let mut total = Card::zero();
            for (q, m) in parts {
                total = total.plus(&m.times_card(&pres_level(q, stage)));
            }
            for f in families {
                total = total.plus(&pres_family_level(f, stage));
            }
            total
        }
        Presentation::PointWithBase { prefix, tail } => {
            let mut total = if *stage <= tail_rank(tail) {
                Card::from(1u64)
            } else {
                Card::zero()
            };
            for q in prefix {
                total = total.plus(&pres_level(q, stage));
            }
            for q in tail {
                let l = pres_level(q, stage);
                if l != Card::zero() {
                    total = total.plus(&Card::aleph0().times(&l));
                }
            }
            total
        }
    }
}

/// Family contribution to a level: omega-many members below the supremum.
/// Beyond the first member the recurrence `level(m_j) = fixed + path *
/// level(m_(j-1))` makes levels monotone, and infinite cards absorb their
/// own products, so the first two members together with the hole path bound
/// every later one; countably many members of unbounded rank supply at
/// least aleph_0 at each stage below the supremum.
fn pres_family_level(f: &PresFamily, stage: &Ordinal) -> Card {
    if *stage >= f.sup() {
        return Card::zero();
    }
    let s0 = pres_level(f.base(), stage);
    let s1 = pres_level(&f.member(1), stage);
    let p = f.context().hole_path_mult();
    [Card::aleph0(), s0, s1, p].into_iter().max().expect("nonempty")
}

pub fn pres_sch(p: &Presentation) -> Ordinal {
    sch_from_van(&pres_van(p), |d| pres_level(p, d))
}

pub fn pres_point_count(p: &Presentation) -> Card {
    pres_level(p, &Ordinal::zero())
}

/// How many rooted pieces `p` splits into when encoded under a sum carrier:
/// a point or a based layer roots one subtree no matter how many points it
/// holds, sums flatten into their own pieces, and a family contributes one
/// piece per member.
fn root_pieces(p: &Presentation) -> Card {
    match p {
        Presentation::Empty => Card::zero(),
        Presentation::Single | Presentation::PointWithBase { .. } => Card::from(1u64),
        Presentation::Sum { parts, families } => {
            let mut n = Card::zero();
            for (q, m) in parts {
                n = n.plus(&m.times_card(&root_pieces(q)));
            }
            if !families.is_empty() {
                n = n.plus(&Card::aleph0());
            }
            n
        }
    }
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Presentation::Empty => write!(f, "empty"),
            Presentation::Single => write!(f, "pt"),
            Presentation::Sum { parts, families } => {
                write!(f, "sum(")?;
                let mut first = true;
                for (q, m) in parts {
                    if !first {
                        write!(f, ", ")?;
                    }
                    first = false;
                    write!(f, "{}", q)?;
                    if *m != Multiplicity::one() {
                        write!(f, "^{}", m)?;
                    }
                }
                for fam in families {
                    if !first {
                        write!(f, ", ")?;
                    }
                    first = false;
                    write!(f, "{}", fam)?;
                }
                write!(f, ")")
            }
            Presentation::PointWithBase { prefix, tail } => {
                write!(f, "pwb([")?;
                for (i, q) in prefix.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", q)?;
                }
                write!(f, ";")?;
                for (i, q) in tail.iter().enumerate() {
                    write!(f, "{}", if i > 0 { ", " } else { " " })?;
                    write!(f, "{}", q)?;
                }
                write!(f, "])")
            }
        }
    }
}

impl fmt::Display for PresFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fam({}, {})", self.context, self.base)
    }
}

impl fmt::Display for PresContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Innermost first: the hole slot is wrapped by each outer frame.
        let mut cur = String::from("_");
        for frame in self.frames.iter().rev() {
            cur = match frame {
                PresFrame::Sum { parts, families, hole_mult } => {
                    let mut s = String::from("sum(");
                    s.push_str(&cur);
                    if *hole_mult != Multiplicity::one() {
                        s.push('^');
                        s.push_str(&hole_mult.to_string());
                    }
                    for (q, m) in parts {
                        s.push_str(", ");
                        s.push_str(&q.to_string());
                        if *m != Multiplicity::one() {
                            s.push('^');
                            s.push_str(&m.to_string());
                        }
                    }
                    for fam in families {
                        s.push_str(", ");
                        s.push_str(&fam.to_string());
                    }
                    s.push(')');
                    s
                }
                PresFrame::PwbPrefix { before, after, tail } => {
                    let slots: Vec<String> = before
                        .iter()
                        .map(Presentation::to_string)
                        .chain(std::iter::once(cur))
                        .chain(after.iter().map(Presentation::to_string))
                        .collect();
                    let tails: Vec<String> = tail.iter().map(Presentation::to_string).collect();
                    format!(
                        "pwb([{};{}])",
                        slots.join(", "),
                        if tails.is_empty() { String::new() } else { format!(" {}", tails.join(", ")) }
                    )
                }
                PresFrame::PwbTail { prefix, before, after } => {
                    let fronts: Vec<String> = prefix.iter().map(Presentation::to_string).collect();
                    let slots: Vec<String> = before
                        .iter()
                        .map(Presentation::to_string)
                        .chain(std::iter::once(cur))
                        .chain(after.iter().map(Presentation::to_string))
                        .collect();
                    format!("pwb([{}; {}])", fronts.join(", "), slots.join(", "))
                }
            };
        }
        write!(f, "{}", cur)
    }
}
