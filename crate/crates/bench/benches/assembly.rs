use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use screenwave::operators::{assemble_hypersingular, assemble_single_layer, kernel_oracle_single_layer};
use screenwave::sobolev::{gram, WaveContext};
use screenwave::solver::solve_problem_S;
use screenwave::trace::{Incident, TraceData};
use screenwave::{build_mesh, make_screen, BasisKind, Screen};
use std::hint::black_box;

fn unit() -> Screen {
    make_screen(2, vec![(vec![0.0], vec![1.0])]).unwrap()
}

fn single_layer(c: &mut Criterion) {
    let mut g = c.benchmark_group("single_layer");
    g.sample_size(10);
    for n in [16usize, 64] {
        let mesh = build_mesh(&unit(), 1.0 / n as f64, BasisKind::P0).unwrap();
        let ctx = WaveContext::new(10.0).unwrap();
        g.bench_with_input(BenchmarkId::new("symbol", n), &mesh, |b, m| b.iter(|| assemble_single_layer(black_box(m), ctx, 1e-8).unwrap()));
        if n <= 16 {
            g.bench_with_input(BenchmarkId::new("kernel_oracle", n), &mesh, |b, m| {
                b.iter(|| kernel_oracle_single_layer(black_box(m), ctx, 1e-8).unwrap())
            });
        }
    }
    g.finish();
}

fn hypersingular(c: &mut Criterion) {
    let mut g = c.benchmark_group("hypersingular");
    g.sample_size(10);
    for n in [16usize, 64] {
        let mesh = build_mesh(&unit(), 1.0 / n as f64, BasisKind::P1).unwrap();
        let ctx = WaveContext::new(10.0).unwrap();
        g.bench_with_input(BenchmarkId::new("symbol", n), &mesh, |b, m| {
            b.iter(|| assemble_hypersingular(black_box(m), ctx, 1e-8).unwrap())
        });
    }
    g.finish();
}

fn gram_and_solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("gram_and_solve");
    g.sample_size(10);
    let ctx = WaveContext::new(10.0).unwrap();
    let mesh = build_mesh(&unit(), 1.0 / 32.0, BasisKind::P0).unwrap();
    g.bench_function("gram_minus_half_32", |b| b.iter(|| gram(black_box(&mesh), -0.5, ctx, 1e-8).unwrap()));
    let data = TraceData::sound_soft(Incident::plane_wave(vec![0.6, -0.8]));
    g.bench_function("solve_sound_soft_32", |b| b.iter(|| solve_problem_S(&unit(), ctx, black_box(&data), 1.0 / 32.0, 1e-8).unwrap()));
    g.finish();
}

criterion_group!(benches, single_layer, hypersingular, gram_and_solve);
criterion_main!(benches);
