use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use polylab::brownian::sample_last_passage;
use polylab::coupling::dyadic_coupling;
use polylab::drift::sample_drifted;
use polylab::rmt_tw::{sample_gue_top, TwTable};
use polylab::{generate_field, log_partition, log_partition_d, passage_time, DistSpec, Endpoint, ScalingRegime};

fn lattice(c: &mut Criterion) {
    let mut g = c.benchmark_group("planar_sweep");
    for &(n, m) in &[(10_000usize, 10usize), (10_000, 100)] {
        let field = generate_field(DistSpec::Gaussian, &[n + 1, m + 1], 1).unwrap();
        let end = Endpoint::planar(n, m);
        g.throughput(Throughput::Elements(((n + 1) * (m + 1)) as u64));
        g.bench_with_input(BenchmarkId::new("max_plus", format!("{n}x{m}")), &end, |b, e| {
            b.iter(|| passage_time(black_box(&field), e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("log_sum_exp", format!("{n}x{m}")), &end, |b, e| {
            b.iter(|| log_partition(black_box(&field), e, 0.1, true).unwrap())
        });
    }
    g.finish();

    let field = generate_field(DistSpec::Gaussian, &[1001, 21, 21], 2).unwrap();
    let end = Endpoint::new(vec![1000, 20, 20]).unwrap();
    c.bench_function("sweep_d3_1000x20x20", |b| {
        b.iter(|| log_partition_d(black_box(&field), &end, 0.1, true).unwrap())
    });
}

fn samplers(c: &mut Criterion) {
    c.bench_function("brownian_lpp_50_lines_step_1e-3", |b| {
        b.iter(|| sample_last_passage(50, 1.0, 1e-3, black_box(3)).unwrap())
    });
    c.bench_function("gue_top_n1000", |b| b.iter(|| sample_gue_top(1000, black_box(4)).unwrap()));
    c.bench_function("coupling_rademacher_2^16", |b| {
        b.iter(|| dyadic_coupling(DistSpec::Rademacher, 16, black_box(5)).unwrap())
    });
    let regime = ScalingRegime::new(0.25, 1.0, 1.0).unwrap();
    c.bench_function("drift_n10000", |b| {
        b.iter(|| sample_drifted(10_000, &regime, DistSpec::Gaussian, black_box(6)).unwrap())
    });
    let mut g = c.benchmark_group("tracy_widom");
    g.sample_size(10);
    g.bench_function("table_1601_points", |b| b.iter(|| TwTable::build(-10.0, 6.0, 1601, 1e-10).unwrap()));
    g.finish();
}

criterion_group!(benches, lattice, samplers);
criterion_main!(benches);
