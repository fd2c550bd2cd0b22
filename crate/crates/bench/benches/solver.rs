use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use ensrob_bench::{random_game, random_lp, relu_instance};
use ensrob_core::emitters::{emit_lp, emit_smtlib, parse_lp};
use ensrob_core::encoder::{encode_base, IntervalBounds};
use ensrob_core::fixtures;
use ensrob_core::milp::{solve_lp, solve_matrix_game};
use ensrob_core::oracle::brute_force_optimal;
use ensrob_core::pipeline::verify;
use ensrob_core::{SolveMode, SolverBackend, VerificationSpec};

fn simplex(c: &mut Criterion) {
    let mut group = c.benchmark_group("simplex");
    for (n, m) in [(10, 10), (30, 30), (60, 40)] {
        let lp = random_lp(7, n, m);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{n}x{m}")), &lp, |b, lp| {
            b.iter(|| solve_lp(black_box(lp), None).unwrap())
        });
    }
    group.finish();
}

fn matrix_game(c: &mut Criterion) {
    let game = random_game(3, 9, 6);
    c.bench_function("matrix_game/9x6", |b| b.iter(|| solve_matrix_game(black_box(&game)).unwrap()));
}

fn verify_instances(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify");
    group.sample_size(20);
    let backend = SolverBackend::internal(None);
    let (e, d) = fixtures::two_linear_classifiers();
    let spec = VerificationSpec::new(2.0, 0.5, 2, 1e-4).unwrap();
    group.bench_function("two_linear", |b| {
        b.iter(|| verify(&e, &d, &spec, SolveMode::Feasibility, &backend).unwrap())
    });
    let (e, d) = relu_instance(5, 2, 2, 3, 4);
    let spec = VerificationSpec::new(0.5, 0.5, 2, 1e-4).unwrap();
    group.bench_function("relu_2x2_hidden4", |b| {
        b.iter(|| verify(&e, &d, &spec, SolveMode::Feasibility, &backend).unwrap())
    });
    group.finish();
}

fn emitters(c: &mut Criterion) {
    let (e, d) = relu_instance(9, 3, 3, 4, 8);
    let spec = VerificationSpec::new(0.5, 0.5, 3, 1e-4).unwrap();
    let cs = encode_base(&e, &d, &spec, &IntervalBounds).unwrap();
    let text = emit_lp(&cs);
    c.bench_function("emit/lp", |b| b.iter(|| emit_lp(black_box(&cs))));
    c.bench_function("emit/smt2", |b| b.iter(|| emit_smtlib(black_box(&cs))));
    c.bench_function("parse/lp", |b| b.iter(|| parse_lp(black_box(&text)).unwrap()));
}

fn brute_force(c: &mut Criterion) {
    let (e, d) = fixtures::two_linear_classifiers();
    let mut group = c.benchmark_group("brute_force");
    group.sample_size(20);
    for step in [0.5, 0.1] {
        group.bench_with_input(BenchmarkId::from_parameter(step), &step, |b, &step| {
            b.iter(|| brute_force_optimal(&e, &d, 2.0, step, 1e-4).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, simplex, matrix_game, verify_instances, emitters, brute_force);
criterion_main!(benches);
