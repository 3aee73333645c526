use num_bigint::BigUint;
use rand::Rng;

use crate::cardinal::Multiplicity;
use crate::ordinal::Ordinal;
use crate::present::{PresContext, PresFamily, PresFrame, Presentation};
use crate::tree::{
    ChildSpec, CompactForest, CtxFrame, FamilySpec, Term, TreeCompactum, TreeContext,
};

/// Knobs for the seeded generators. `SC_MAX_DEPTH` in the environment caps
/// `max_depth` globally, which keeps fuzzing under control on slow machines.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_depth: usize,
    pub mult_palette: Vec<Multiplicity>,
    pub family_prob: f64,
    pub ensure_infinite: bool,
    pub max_children: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_depth: 4,
            mult_palette: vec![
                Multiplicity::one(),
                Multiplicity::finite(2u32),
                Multiplicity::omega(),
            ],
            family_prob: 0.15,
            ensure_infinite: false,
            max_children: 3,
        }
    }
}

impl GenConfig {
    fn depth(&self) -> usize {
        match std::env::var("SC_MAX_DEPTH").ok().and_then(|v| v.parse().ok()) {
            Some(cap) => self.max_depth.min(cap),
            None => self.max_depth,
        }
    }
}

pub fn random_ordinal(rng: &mut impl Rng, exp_depth: usize) -> Ordinal {
    let terms = rng.gen_range(0..=3);
    let mut out = Ordinal::zero();
    for _ in 0..terms {
        let exp = if exp_depth == 0 {
            Ordinal::from(rng.gen_range(0..3u64))
        } else {
            random_ordinal(rng, exp_depth - 1)
        };
        let coeff = BigUint::from(rng.gen_range(1..=3u32));
        out = out.add(&Ordinal::term(exp, coeff));
    }
    out
}

pub fn random_tree(rng: &mut impl Rng, cfg: &GenConfig) -> TreeCompactum {
    let mut t = tree_at(rng, cfg, cfg.depth());
    if cfg.ensure_infinite && !crate::rank::point_count(&t).is_finite() {
        return t;
    }
    if cfg.ensure_infinite {
        let mut specs = t.children().to_vec();
        specs.push(ChildSpec::Concrete {
            tree: TreeCompactum::leaf(),
            mult: Multiplicity::omega(),
        });
        t = TreeCompactum::new(specs);
    }
    t
}

fn tree_at(rng: &mut impl Rng, cfg: &GenConfig, depth: usize) -> TreeCompactum {
    if depth == 0 {
        return TreeCompactum::leaf();
    }
    let n = rng.gen_range(0..=cfg.max_children);
    let mut specs = Vec::with_capacity(n);
    for _ in 0..n {
        if depth >= 2 && rng.gen_bool(cfg.family_prob) {
            specs.push(ChildSpec::Family(random_family(rng, cfg, depth - 1)));
        } else {
            let mult = cfg.mult_palette[rng.gen_range(0..cfg.mult_palette.len())].clone();
            specs.push(ChildSpec::Concrete { tree: tree_at(rng, cfg, depth - 1), mult });
        }
    }
    TreeCompactum::new(specs)
}

/// Random families lean on the plain tower context, which fits for every
/// base; now and then a richer context is tried and kept only if it fits.
fn random_family(rng: &mut impl Rng, cfg: &GenConfig, depth: usize) -> FamilySpec {
    let base = tree_at(rng, cfg, depth.saturating_sub(1).min(2));
    if rng.gen_bool(0.3) {
        let frames = (0..rng.gen_range(1..=2))
            .map(|_| {
                let sibs = (0..rng.gen_range(0..=2))
                    .map(|_| ChildSpec::Concrete {
                        tree: tree_at(rng, cfg, 1),
                        mult: cfg.mult_palette[rng.gen_range(0..cfg.mult_palette.len())]
                            .clone(),
                    })
                    .collect();
                CtxFrame::new(sibs, Multiplicity::omega())
            })
            .collect();
        let ctx = TreeContext::new(frames).expect("at least one frame");
        if let Ok(f) = FamilySpec::new(ctx, base.clone()) {
            return f;
        }
    }
    let tower = TreeContext::new(vec![CtxFrame::new(Vec::new(), Multiplicity::omega())])
        .expect("one frame");
    FamilySpec::new(tower, base).expect("towers fit over every base")
}

pub fn random_forest(rng: &mut impl Rng, cfg: &GenConfig) -> CompactForest {
    let n = rng.gen_range(0..=3);
    let entries = (0..n)
        .map(|_| {
            (
                tree_at(rng, cfg, cfg.depth().saturating_sub(1)),
                BigUint::from(rng.gen_range(1..=3u32)),
            )
        })
        .collect();
    CompactForest::new(entries)
}

pub fn random_term(rng: &mut impl Rng, cfg: &GenConfig) -> Term {
    if rng.gen_bool(0.7) {
        Term::Tree(random_tree(rng, cfg))
    } else {
        Term::Forest(random_forest(rng, cfg))
    }
}

pub fn random_presentation(rng: &mut impl Rng, cfg: &GenConfig) -> Presentation {
    pres_at(rng, cfg, cfg.depth())
}

fn pres_at(rng: &mut impl Rng, cfg: &GenConfig, depth: usize) -> Presentation {
    if depth == 0 {
        return Presentation::Single;
    }
    match rng.gen_range(0..10) {
        0 => Presentation::Single,
        1..=5 => {
            let n = rng.gen_range(0..=cfg.max_children);
            let mut parts = Vec::with_capacity(n);
            for _ in 0..n {
                let mult = cfg.mult_palette[rng.gen_range(0..cfg.mult_palette.len())].clone();
                parts.push((pres_at(rng, cfg, depth - 1), mult));
            }
            let mut families = Vec::new();
            if depth >= 2 && rng.gen_bool(cfg.family_prob) {
                families.push(random_pres_family(rng, cfg, depth - 1));
            }
            if parts.is_empty() && families.is_empty() {
                return Presentation::Empty;
            }
            Presentation::sum(parts, families)
        }
        _ => {
            let np = rng.gen_range(0..=2);
            let nt = rng.gen_range(0..=2);
            let prefix = (0..np).map(|_| pres_at(rng, cfg, depth - 1)).collect();
            let tail = (0..nt).map(|_| pres_at(rng, cfg, depth - 1)).collect();
            Presentation::PointWithBase { prefix, tail }
        }
    }
}

/// Contexts need a cyclic tail slot for member heights to keep climbing, so
/// every sampled context contains one. A plain tail tower fits over every
/// base and backs up the occasional richer context that gets rejected.
fn random_pres_family(rng: &mut impl Rng, cfg: &GenConfig, depth: usize) -> PresFamily {
    let base = pres_at(rng, cfg, depth.min(2));
    if rng.gen_bool(0.4) {
        let tail_frame = PresFrame::PwbTail {
            prefix: (0..rng.gen_range(0..=1)).map(|_| pres_at(rng, cfg, 1)).collect(),
            before: Vec::new(),
            after: (0..rng.gen_range(0..=1)).map(|_| pres_at(rng, cfg, 1)).collect(),
        };
        let mut frames = vec![tail_frame];
        if rng.gen_bool(0.5) {
            let parts = (0..rng.gen_range(1..=2))
                .map(|_| {
                    let mult = cfg.mult_palette[rng.gen_range(0..cfg.mult_palette.len())].clone();
                    (pres_at(rng, cfg, 1), mult)
                })
                .collect();
            let sum_frame =
                PresFrame::Sum { parts, families: Vec::new(), hole_mult: Multiplicity::omega() };
            let at = rng.gen_range(0..=1);
            frames.insert(at, sum_frame);
        }
        let ctx = PresContext::new(frames).expect("frames are nonempty");
        if let Ok(fam) = PresFamily::new(ctx, base.clone()) {
            return fam;
        }
    }
    let tower = PresContext::new(vec![PresFrame::PwbTail {
        prefix: Vec::new(),
        before: Vec::new(),
        after: Vec::new(),
    }])
    .expect("one frame");
    PresFamily::new(tower, base).expect("tail towers fit over every base")
}

/// Every tree with at most three child instances per node, subtrees drawn
/// from the previous level, and depth at most three. Spec lists stay in
/// merged form (one entry per distinct subtree), so each shape appears once.
pub fn enumerate_small_trees() -> Vec<TreeCompactum> {
    let mut level = vec![TreeCompactum::leaf()];
    for _ in 0..3 {
        let mut next = Vec::new();
        let mut choice = Vec::new();
        multisets(&level, 3, 0, &mut choice, &mut next);
        level = next;
    }
    level
}

fn multisets(
    pool: &[TreeCompactum],
    budget: usize,
    from: usize,
    choice: &mut Vec<(TreeCompactum, usize)>,
    out: &mut Vec<TreeCompactum>,
) {
    out.push(TreeCompactum::new(
        choice
            .iter()
            .map(|(t, m)| ChildSpec::Concrete {
                tree: t.clone(),
                mult: Multiplicity::finite(*m as u32),
            })
            .collect(),
    ));
    for i in from..pool.len() {
        for m in 1..=budget {
            choice.push((pool[i].clone(), m));
            multisets(pool, budget - m, i + 1, choice, out);
            choice.pop();
        }
    }
}
