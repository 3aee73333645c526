//! Coordinate embeddings of tree encodings: the indicator embedding into a
//! sigma-product of two-point factors, and a weighted prefix embedding into
//! Hilbert space that sends the root, and only the root, to the origin.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::tree::{ChildSpec, TreeCompactum};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmbedError {
    #[error("address step {0} does not match the tree")]
    BadAddress(usize),
    #[error("the weight must lie strictly between zero and one")]
    BadWeight,
}

/// One descent step: into a numbered copy of a concrete child spec, or into
/// a numbered member of a family spec.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum NodeStep {
    Copy { spec: usize, copy: u64 },
    Member { spec: usize, member: u64 },
}

/// Address of a point: the descent steps from the root of a tree encoding.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct NodeAddr(Vec<NodeStep>);

impl NodeAddr {
    pub fn root() -> Self {
        NodeAddr(Vec::new())
    }

    pub fn new(steps: Vec<NodeStep>) -> Self {
        NodeAddr(steps)
    }

    pub fn steps(&self) -> &[NodeStep] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, step: NodeStep) -> NodeAddr {
        let mut steps = self.0.clone();
        steps.push(step);
        NodeAddr(steps)
    }

    /// All prefixes from the root up to and including the address itself.
    pub fn prefixes(&self) -> impl Iterator<Item = NodeAddr> + '_ {
        (0..=self.0.len()).map(|k| NodeAddr(self.0[..k].to_vec()))
    }
}

impl fmt::Display for NodeAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, ".");
        }
        for (i, step) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "/")?;
            }
            match step {
                NodeStep::Copy { spec, copy } => write!(f, "{}.{}", spec, copy)?,
                NodeStep::Member { spec, member } => write!(f, "{}~{}", spec, member)?,
            }
        }
        Ok(())
    }
}

/// Resolve an address to the subtree rooted at the addressed node. Family
/// members are materialized, so the result is owned.
pub fn node_at(tree: &TreeCompactum, addr: &NodeAddr) -> Result<TreeCompactum, EmbedError> {
    let mut cur = tree.clone();
    for (i, step) in addr.0.iter().enumerate() {
        cur = match step {
            NodeStep::Copy { spec, copy } => match cur.children().get(*spec) {
                Some(ChildSpec::Concrete { tree, mult }) => {
                    let in_range = match mult.as_finite() {
                        Some(n) => BigUint::from(*copy) < *n,
                        None => true,
                    };
                    if !in_range {
                        return Err(EmbedError::BadAddress(i));
                    }
                    tree.clone()
                }
                _ => return Err(EmbedError::BadAddress(i)),
            },
            NodeStep::Member { spec, member } => match cur.children().get(*spec) {
                Some(ChildSpec::Family(fam)) => {
                    let k = usize::try_from(*member).map_err(|_| EmbedError::BadAddress(i))?;
                    fam.member(k)
                }
                _ => return Err(EmbedError::BadAddress(i)),
            },
        };
    }
    Ok(cur)
}

/// Depth-first census of addresses, with infinite multiplicities cut at
/// `copy_cap` copies and families cut at `member_cap` members.
pub fn enumerate_nodes(tree: &TreeCompactum, copy_cap: u64, member_cap: u64) -> Vec<NodeAddr> {
    fn walk(t: &TreeCompactum, at: NodeAddr, cc: u64, mc: u64, out: &mut Vec<NodeAddr>) {
        out.push(at.clone());
        for (i, spec) in t.children().iter().enumerate() {
            match spec {
                ChildSpec::Concrete { tree, mult } => {
                    let copies = match mult.as_finite() {
                        Some(n) => u64::try_from(n).unwrap_or(u64::MAX).min(cc),
                        None => cc,
                    };
                    for c in 0..copies {
                        walk(tree, at.child(NodeStep::Copy { spec: i, copy: c }), cc, mc, out);
                    }
                }
                ChildSpec::Family(fam) => {
                    for k in 0..mc {
                        let member = fam.member(k as usize);
                        walk(&member, at.child(NodeStep::Member { spec: i, member: k }), cc, mc, out);
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(tree, NodeAddr::root(), copy_cap, member_cap, &mut out);
    out
}

/// Finitely supported coordinate vector: unlisted coordinates are zero.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FsVec<K: Ord, V>(BTreeMap<K, V>);

impl<K: Ord, V> Default for FsVec<K, V> {
    fn default() -> Self {
        FsVec(BTreeMap::new())
    }
}

impl<K: Ord, V> FsVec<K, V> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, k: K, v: V) {
        self.0.insert(k, v);
    }

    pub fn get(&self, k: &K) -> Option<&V> {
        self.0.get(k)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &V)> {
        self.0.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &K> {
        self.0.keys()
    }

    pub fn support_size(&self) -> usize {
        self.0.len()
    }

    /// True for the vector with empty support, the origin.
    pub fn is_origin(&self) -> bool {
        self.0.is_empty()
    }
}

impl<K: Ord> FsVec<K, BigRational> {
    pub fn norm_sq(&self) -> BigRational {
        self.0.values().map(|v| v * v).sum()
    }
}

/// Indicator embedding: a point maps to the characteristic vector of its
/// prefix set, one two-point factor per node. Convergence in the space is
/// exactly coordinatewise convergence of these vectors.
pub fn sigma_embed(tree: &TreeCompactum, addr: &NodeAddr) -> Result<FsVec<NodeAddr, u8>, EmbedError> {
    node_at(tree, addr)?;
    let mut v = FsVec::new();
    for p in addr.prefixes() {
        v.insert(p, 1);
    }
    Ok(v)
}

/// Weighted prefix embedding: coordinate `u` of the image of `x` holds
/// `weight^|u|` when `u` is a nonroot prefix of `x`. Squared norms stay
/// below `w^2 / (1 - w^2)`, and the root alone lands on the origin.
pub fn hilbert_embed(
    tree: &TreeCompactum,
    addr: &NodeAddr,
    weight: &BigRational,
) -> Result<FsVec<NodeAddr, BigRational>, EmbedError> {
    if *weight <= BigRational::zero() || *weight >= BigRational::one() {
        return Err(EmbedError::BadWeight);
    }
    node_at(tree, addr)?;
    let mut v = FsVec::new();
    let mut scale = BigRational::one();
    for k in 1..=addr.0.len() {
        scale *= weight;
        v.insert(NodeAddr(addr.0[..k].to_vec()), scale.clone());
    }
    Ok(v)
}
