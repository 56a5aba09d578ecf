use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use icfkm_core::cluster::cluster_factor;
use icfkm_core::data::{gaussian_mixture, MixtureSpec};
use icfkm_core::{
    approx_kkmeans, icf_factorize, icf_kkmeans, nystrom_kmeans, rff_kmeans, KernelSpec, LloydParams,
};

const N: usize = 3000;
const K: usize = 10;
const S: usize = 50;

fn setup() -> (icfkm_core::Dataset, KernelSpec) {
    let spec = MixtureSpec {
        n: N,
        ..MixtureSpec::pendigits_like()
    };
    (
        gaussian_mixture(&spec, 0).unwrap(),
        KernelSpec::gaussian(1.0 / 65536.0).unwrap(),
    )
}

fn lloyd_on_factor(c: &mut Criterion) {
    let (data, spec) = setup();
    let params = LloydParams::default();
    let mut group = c.benchmark_group("lloyd_on_factor");
    group.sample_size(10);
    for s in [25, 50, 100] {
        let factor = icf_factorize(&data, &spec, s, 1e-300).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(s), &factor, |b, f| {
            b.iter(|| cluster_factor(black_box(f), K, 0, &params).unwrap())
        });
    }
    group.finish();
}

fn algorithms(c: &mut Criterion) {
    let (data, spec) = setup();
    let params = LloydParams::default();
    let mut group = c.benchmark_group("end_to_end");
    group.sample_size(10);
    group.bench_function("icf", |b| {
        b.iter(|| icf_kkmeans(black_box(&data), &spec, S, K, 0, 1e-300, &params).unwrap())
    });
    group.bench_function("nystrom", |b| {
        b.iter(|| nystrom_kmeans(black_box(&data), &spec, S, K, 0, &params).unwrap())
    });
    group.bench_function("rff", |b| {
        b.iter(|| rff_kmeans(black_box(&data), &spec, 2 * S, K, 0, &params).unwrap())
    });
    group.bench_function("approx", |b| {
        b.iter(|| approx_kkmeans(black_box(&data), &spec, S, K, 0, &params).unwrap())
    });
    group.finish();
}

criterion_group!(benches, lloyd_on_factor, algorithms);
criterion_main!(benches);
