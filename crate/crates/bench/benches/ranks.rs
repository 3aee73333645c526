use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sc_bench::{bench_forests, bench_heights};
use sc_core::{ms_invariant, normalize, ordinal_tree, sch_height_term, van_rank_term};

fn ranks(c: &mut Criterion) {
    let forests = bench_forests();
    c.bench_function("ranks/van", |b| {
        b.iter(|| {
            for t in &forests {
                black_box(van_rank_term(black_box(t)));
            }
        })
    });
    c.bench_function("ranks/sch", |b| {
        b.iter(|| {
            for t in &forests {
                black_box(sch_height_term(black_box(t)));
            }
        })
    });
    c.bench_function("ranks/ms", |b| {
        b.iter(|| {
            for t in &forests {
                black_box(ms_invariant(black_box(t)).expect("prescribed forests are countable"));
            }
        })
    });
}

fn prescribe(c: &mut Criterion) {
    let heights = bench_heights();
    c.bench_function("prescribe/ordinal_tree", |b| {
        b.iter(|| {
            for (h, n) in &heights {
                black_box(ordinal_tree(black_box(h), black_box(n)).expect("prescribable"));
            }
        })
    });
}

fn normal_forms(c: &mut Criterion) {
    let forests = bench_forests();
    c.bench_function("normalize/prescribed", |b| {
        b.iter(|| {
            for t in &forests {
                black_box(normalize(black_box(t)));
            }
        })
    });
}

criterion_group!(benches, ranks, prescribe, normal_forms);
criterion_main!(benches);
