use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use stablelab::rng::{self, family};
use stablelab::theory::gamma_d;
use stablelab::{greedy_stable_matching, sample_exp_sequence, total_cost, transform_sequence, Distribution};
use stablelab_bench::{exp_sequence, exponential_instance};

fn greedy(c: &mut Criterion) {
    let mut group = c.benchmark_group("greedy_stable_matching");
    for n in [50, 200, 800] {
        let m = exponential_instance(n, 1);
        group.throughput(Throughput::Elements((n * n) as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| greedy_stable_matching(m))
        });
    }
    group.finish();
}

fn recursion(c: &mut Criterion) {
    let mut group = c.benchmark_group("recursion");
    let weibull = Distribution::weibull(3.0).unwrap();
    let chi = Distribution::chi_squared(6).unwrap();
    for n in [1_000, 100_000] {
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("sample_exp_sequence", n), &n, |b, &n| {
            let mut rng = rng::stream(2, family::RECURSION, 0);
            b.iter(|| sample_exp_sequence(n, &mut rng).unwrap())
        });
        let base = exp_sequence(n, 3);
        group.bench_with_input(BenchmarkId::new("weibull_total", n), &base, |b, base| {
            b.iter(|| total_cost(&transform_sequence(base, &weibull).unwrap()))
        });
        group.bench_with_input(
            BenchmarkId::new("chi_squared_coupled_total", n),
            &base,
            |b, base| b.iter(|| total_cost(&transform_sequence(base, &chi).unwrap())),
        );
    }
    group.finish();
}

fn gamma(c: &mut Criterion) {
    let mut group = c.benchmark_group("gamma_d");
    for d in [2.5, 4.0, 8.0] {
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| {
            b.iter(|| gamma_d(d, 1e-10).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, greedy, recursion, gamma);
criterion_main!(benches);
