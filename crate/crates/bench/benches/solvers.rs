use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use hm_core::dla::{dla_run, DlaMode, DlaOptions};
use hm_core::families::{generate, FamilySpec};
use hm_core::harmonic::{check_reverse_path, harmonic_stationary};
use hm_core::hitting::{uniform_transience, UMode};
use hm_core::spectrum;
use hm_core::VertexSet;

fn regular(n: usize) -> hm_core::Chain {
    generate(&FamilySpec::RandomRegular { n, d: 3, seed: 7 }).unwrap()
}

fn sparse_set(n: usize) -> VertexSet {
    VertexSet::new(n, (0..n).step_by(8)).unwrap()
}

fn harmonic(c: &mut Criterion) {
    let mut group = c.benchmark_group("harmonic_stationary");
    for n in [64, 256, 512] {
        let chain = regular(n);
        let set = sparse_set(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| harmonic_stationary(black_box(&chain), black_box(&set)).unwrap())
        });
    }
    group.finish();
}

fn reverse_path(c: &mut Criterion) {
    let mut group = c.benchmark_group("reverse_path");
    group.sample_size(10);
    for n in [32, 64] {
        let chain = regular(n);
        let set = sparse_set(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| check_reverse_path(black_box(&chain), black_box(&set)).unwrap())
        });
    }
    group.finish();
}

fn spectral(c: &mut Criterion) {
    // The eigensystem is cached on the chain, so each iteration builds a
    // fresh one.
    let mut group = c.benchmark_group("generate_and_spectrum");
    for n in [64, 256] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| spectrum(&regular(black_box(n))).unwrap())
        });
    }
    group.finish();
}

fn transience(c: &mut Criterion) {
    let chain = regular(128);
    c.bench_function("uniform_transience/full/128", |b| {
        b.iter(|| uniform_transience(black_box(&chain), UMode::Full).unwrap())
    });
}

fn dla(c: &mut Criterion) {
    let mut group = c.benchmark_group("dla_run");
    group.sample_size(10);
    let chain = regular(256);
    for mode in [DlaMode::Exact, DlaMode::Walk] {
        let opts = DlaOptions {
            mode,
            ..DlaOptions::default()
        };
        group.bench_function(format!("{mode:?}/256").to_lowercase(), |b| {
            let mut seed = 0;
            b.iter(|| {
                seed += 1;
                dla_run(black_box(&chain), 0, 255, opts, seed).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, harmonic, reverse_path, spectral, transience, dla);
criterion_main!(benches);
