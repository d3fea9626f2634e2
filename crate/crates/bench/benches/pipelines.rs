use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use slelab::cft::{check_m2_identity, check_perturbed_identity, q};
use slelab::experiments::levelline_driving;
use slelab::levelline::{default_level, extract_level_line};
use slelab::loewner::compute_trace;
use slelab::zipper::extract_driving;
use slelab::CurveInput;
use slelab_bench::{driving, unit_charge_sampler};

fn trace(c: &mut Criterion) {
    let mut g = c.benchmark_group("trace");
    for n in [500, 2000] {
        let path = driving(4.0, n, 1);
        g.bench_with_input(BenchmarkId::from_parameter(n), &path, |b, p| b.iter(|| compute_trace(black_box(p)).unwrap()));
    }
    g.finish();
}

fn zipper(c: &mut Criterion) {
    let mut g = c.benchmark_group("zipper");
    for n in [500, 2000] {
        let curve = CurveInput::from_trace(&compute_trace(&driving(4.0, n, 2)).unwrap()).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &curve, |b, c| b.iter(|| extract_driving(black_box(c)).unwrap()));
    }
    g.finish();
}

fn field(c: &mut Criterion) {
    let mut g = c.benchmark_group("gff");
    g.sample_size(20);
    for r in [32, 64] {
        let s = unit_charge_sampler(r);
        g.bench_with_input(BenchmarkId::new("sample", r), &s, |b, s| {
            let mut k = 0;
            b.iter(|| {
                k += 1;
                s.sample(1, k)
            })
        });
        let field = s.sample(1, 0);
        let level = default_level(&s.domain, &field.total());
        g.bench_with_input(BenchmarkId::new("level_line", r), &field, |b, f| {
            b.iter(|| extract_level_line(&s.domain, black_box(f), level).unwrap())
        });
    }
    g.finish();
}

fn levelline_pipeline(c: &mut Criterion) {
    let s = unit_charge_sampler(64);
    let mut g = c.benchmark_group("levelline_driving");
    g.sample_size(10);
    g.bench_function("R=64", |b| {
        let mut k = 0;
        b.iter(|| {
            k += 1;
            levelline_driving(&s, 1, k)
        })
    });
    g.finish();
}

fn cft(c: &mut Criterion) {
    c.bench_function("cft/m2 q=1/2 k=3", |b| b.iter(|| check_m2_identity(black_box(&q(1, 2)), &q(3, 1)).unwrap()));
    c.bench_function("cft/perturbed q=2/3 s=9/4", |b| {
        b.iter(|| check_perturbed_identity(black_box(&q(2, 3)), &q(9, 4)).unwrap())
    });
}

criterion_group!(benches, trace, zipper, field, levelline_pipeline, cft);
criterion_main!(benches);
