use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kusuoka::gasket::generate_system;
use kusuoka::spectral::{c_k, theta1};
use kusuoka::{builtin, Budget, KusuokaMeasure};

fn bench_theta1(c: &mut Criterion) {
    let mut group = c.benchmark_group("theta1");
    for n in 2..=5 {
        let sys = generate_system(n).unwrap();
        group.bench_with_input(BenchmarkId::new("exact", n), &sys, |b, sys| {
            b.iter(|| theta1(black_box(sys)).unwrap())
        });
        let float = sys.to_f64();
        group.bench_with_input(BenchmarkId::new("float", n), &float, |b, sys| {
            b.iter(|| theta1(black_box(sys)).unwrap())
        });
    }
    group.finish();
}

fn bench_ck(c: &mut Criterion) {
    let sys = builtin::sg();
    let float = sys.to_f64();
    let budget = Budget::default();
    let mut group = c.benchmark_group("c_k");
    for k in 1..=6 {
        group.bench_with_input(BenchmarkId::new("exact", k), &k, |b, &k| {
            b.iter(|| c_k(&sys, k, &budget).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("float", k), &k, |b, &k| {
            b.iter(|| c_k(&float, k, &budget).unwrap())
        });
    }
    group.finish();
}

fn bench_gasket(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate_system");
    group.sample_size(10);
    for n in [2, 4, 6] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| generate_system(black_box(n)).unwrap())
        });
    }
    group.finish();
}

fn bench_nu_level(c: &mut Criterion) {
    let m = KusuokaMeasure::new(builtin::sg()).unwrap();
    let budget = Budget::default();
    c.bench_function("nu_level/sg/6", |b| {
        b.iter(|| m.nu_level(black_box(6), &budget).unwrap())
    });
}

criterion_group!(
    benches,
    bench_theta1,
    bench_ck,
    bench_gasket,
    bench_nu_level
);
criterion_main!(benches);
