use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use greenlab_bench::{henon, points, regular_c3};
use greenlab_core::degrees::degree_sequence;
use greenlab_core::Precision;

fn degrees(c: &mut Criterion) {
    let mut g = c.benchmark_group("degree_sequence");
    for n in [2, 4, 6] {
        let f = henon();
        g.bench_with_input(BenchmarkId::new("henon", n), &n, |b, &n| b.iter(|| degree_sequence(&f, n).unwrap()));
    }
    let f = regular_c3();
    g.bench_function("regular_c3/4", |b| b.iter(|| degree_sequence(&f, 4).unwrap()));
    g.finish();
}

fn compose(c: &mut Criterion) {
    let f = henon();
    let lift = f.lift();
    c.bench_function("compose/henon_square", |b| b.iter(|| lift.compose(black_box(lift)).unwrap()));
}

fn evaluate(c: &mut Criterion) {
    let f = regular_c3();
    let pts = points(3, 1000);
    let mut g = c.benchmark_group("eval_with_jacobian");
    for bits in [53, 128] {
        let cv = f.lift().compile::<greenlab_core::Mp>(Precision(bits));
        let zs: Vec<Vec<_>> = pts
            .iter()
            .map(|z| z.iter().map(|c| greenlab_core::Cx::from_c64(*c, bits)).collect())
            .collect();
        g.bench_with_input(BenchmarkId::new("mp", bits), &zs, |b, zs| {
            b.iter(|| {
                zs.iter().for_each(|z| {
                    black_box(cv.eval_with_jacobian(z));
                })
            })
        });
    }
    let cv = f.lift().compile::<f64>(Precision::DOUBLE);
    let zs: Vec<Vec<_>> = pts
        .iter()
        .map(|z| z.iter().map(|c| greenlab_core::Cx::from_c64(*c, 53)).collect())
        .collect();
    g.bench_function("f64", |b| {
        b.iter(|| {
            zs.iter().for_each(|z| {
                black_box(cv.eval_with_jacobian(z));
            })
        })
    });
    g.finish();
}

criterion_group!(benches, degrees, compose, evaluate);
criterion_main!(benches);
