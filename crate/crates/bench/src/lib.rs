//! Shared fixtures for the benchmark targets: a deterministic spread of
//! prescribed forests and presentation expressions that exercise the hot
//! paths without drowning the timer in setup.

use num_bigint::BigUint;
use sc_core::{ordinal_tree, Ordinal, Term};

/// Heights covering a finite stack, a limit, a successor past it, and a
/// second limit block, each with a small copy count.
pub fn bench_heights() -> Vec<(Ordinal, BigUint)> {
    let w = Ordinal::omega();
    let w2 = Ordinal::term(Ordinal::one(), 2u32.into());
    vec![
        (Ordinal::from_nat(3u32), 2u32.into()),
        (w.clone(), 1u32.into()),
        (w.succ(), 3u32.into()),
        (w2, 3u32.into()),
    ]
}

/// The forests those heights prescribe, as rank-function inputs.
pub fn bench_forests() -> Vec<Term> {
    bench_heights()
        .into_iter()
        .map(|(h, n)| Term::Forest(ordinal_tree(&h, &n).expect("height is prescribable")))
        .collect()
}

/// Tree expressions in display syntax, mixing depth, families, and forests.
pub const TREE_EXPRS: &[&str] = &[
    "A(1^w)",
    "A(1^3, fam(A(A(_^w)^2, 1), A(1^w)))",
    "A(A(1^w)^w, fam(A(_^w), 1))",
    "F[(1, 2), (A(1^w), 1)]",
];

/// Presentation expressions in display syntax, one per compactification case.
pub const PRES_EXPRS: &[&str] = &[
    "pt",
    "sum(pt^2, pt^w)",
    "pwb([pt, empty; pt, pt])",
    "sum(fam(pwb([; _]), pt))",
    "sum(fam(pwb([; _, pt]), sum(pt^2)), pt^w)",
];
