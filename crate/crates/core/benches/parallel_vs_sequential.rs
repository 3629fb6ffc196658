//! Sequential vs data-parallel execution of the hot loops.
//!
//! "sequential" runs inside a one-thread rayon pool; "parallel" uses the
//! global pool. Building with `--no-default-features` removes rayon from the
//! library altogether, in which case both variants run the plain loops.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand_distr::{Distribution, StandardNormal};

use dprof::rank::rank_all;
use dprof::rng::substream;
use dprof::simulation::{ScenarioName, ScenarioSpec};
use dprof::two_sample::permutation_replicates;
use dprof::{
    build_profiles, distance_matrix, MetricSpec, ObjectSample, PooledDistances, ProfileMode,
    WeightProfile,
};

fn gaussian_sample(n: usize, p: usize) -> ObjectSample {
    let mut rng = substream(1, &[n as u64]);
    let rows = (0..n)
        .map(|_| (0..p).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    ObjectSample::vectors(rows).unwrap()
}

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("sequential", one), ("parallel", all)]
}

fn bench_distance_matrix(c: &mut Criterion) {
    let mut group = c.benchmark_group("distance_matrix");
    let sample = gaussian_sample(400, 30);
    let spec = MetricSpec::euclidean();
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new(name, 400), |b| {
            b.iter(|| pool.install(|| distance_matrix(&spec, black_box(&sample)).unwrap()))
        });
    }
    group.finish();
}

fn bench_networks(c: &mut Criterion) {
    let mut group = c.benchmark_group("frobenius_networks");
    group.sample_size(10);
    let spec = ScenarioSpec::new(ScenarioName::PrefAttach, 200, 0.5, 60, 60);
    let (x, y) = spec.generate(3).unwrap();
    let pooled = x.concat(&y).unwrap();
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new(name, 120), |b| {
            b.iter(|| pool.install(|| distance_matrix(&spec.metric(), black_box(&pooled)).unwrap()))
        });
    }
    group.finish();
}

fn bench_ranks(c: &mut Criterion) {
    let mut group = c.benchmark_group("rank_all");
    let d = distance_matrix(&MetricSpec::euclidean(), &gaussian_sample(300, 5)).unwrap();
    let profiles = build_profiles(&d, ProfileMode::WithSelf).unwrap();
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new(name, 300), |b| {
            b.iter(|| pool.install(|| rank_all(black_box(&profiles)).unwrap()))
        });
    }
    group.finish();
}

fn bench_permutations(c: &mut Criterion) {
    let mut group = c.benchmark_group("dp_permutation_replicates");
    group.sample_size(10);
    let d = distance_matrix(&MetricSpec::euclidean(), &gaussian_sample(200, 5)).unwrap();
    let pooled = PooledDistances::new(d, 100).unwrap();
    let w = WeightProfile::unit();
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new(name, 200), |b| {
            b.iter(|| {
                pool.install(|| permutation_replicates(black_box(&pooled), &w, 200, 7).unwrap())
            })
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_distance_matrix,
    bench_networks,
    bench_ranks,
    bench_permutations
);
criterion_main!(benches);
