//! Benchmarks for the hot kernels: the co-reference posterior in both its
//! summation forms, surface similarity, and one full clustering round on a
//! synthetic corpus.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use synres_core::corpus::{Corpus, LoadOptions};
use synres_core::esp::{esp_posterior_from_potentials, esp_posterior_from_potentials_direct};
use synres_core::metrics::monge_elkan;
use synres_core::pipeline::{resolve, RunConfig};
use synres_core::synth::{self, SynthConfig};

fn bench_posterior(c: &mut Criterion) {
    let mut group = c.benchmark_group("esp_posterior");
    for &(k, n, multiple) in &[(4u64, 30u64, 30u64), (10, 100, 30), (25, 300, 30)] {
        let p = n * multiple;
        group.bench_with_input(BenchmarkId::new("single_sum", n), &n, |b, _| {
            b.iter(|| esp_posterior_from_potentials(black_box(k), n, n, p, p).unwrap())
        });
        if n <= 100 {
            group.bench_with_input(BenchmarkId::new("direct_sum", n), &n, |b, _| {
                b.iter(|| esp_posterior_from_potentials_direct(black_box(k), n, n, p, p).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_similarity(c: &mut Criterion) {
    c.bench_function("monge_elkan", |b| {
        b.iter(|| {
            monge_elkan(
                black_box("United States of America"),
                black_box("United Staets"),
            )
        })
    });
}

fn bench_resolve(c: &mut Criterion) {
    let out = synth::generate(&SynthConfig::zipf_only(2000, 1.0, 17)).unwrap();
    let corpus = Corpus::from_reader(
        out.corpus_tsv.as_bytes(),
        LoadOptions {
            min_count: 5,
            proper_nouns_only: true,
            slot_tagged: false,
        },
    )
    .unwrap();
    let config = RunConfig {
        min_count: 5,
        workers: 1,
        ..RunConfig::default()
    };
    c.bench_function("resolve_zipf_2k", |b| {
        b.iter(|| resolve(black_box(&corpus), &config, None).unwrap())
    });
}

criterion_group!(benches, bench_posterior, bench_similarity, bench_resolve);
criterion_main!(benches);
