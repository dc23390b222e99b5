use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use seqtrial::binary::solve_with;
use seqtrial::dist::prob_superior_exact;
use seqtrial::pg::pg_laplace_prob_superior;
use seqtrial::sim::standard_binary_spec;
use seqtrial::{solve_normal, BetaParams, NormalDesignSpec, PgLaplaceProblem};

fn binary(c: &mut Criterion) {
    let spec = standard_binary_spec();
    let mut g = c.benchmark_group("binary_backward_induction");
    g.sample_size(10);
    g.bench_function("T200_serial", |b| b.iter(|| solve_with(black_box(&spec), false).unwrap()));
    g.bench_function("T200_parallel", |b| b.iter(|| solve_with(black_box(&spec), true).unwrap()));
    g.finish();
}

fn normal(c: &mut Criterion) {
    let spec = NormalDesignSpec::default();
    let mut g = c.benchmark_group("normal_grid");
    g.sample_size(10);
    g.bench_function("default_grid", |b| b.iter(|| solve_normal(black_box(&spec)).unwrap()));
    g.finish();
}

fn superiority(c: &mut Criterion) {
    let a = BetaParams::new(61.0, 91.0).unwrap();
    let b0 = BetaParams::new(27.0, 118.0).unwrap();
    c.bench_function("prob_superior_exact_150", |b| b.iter(|| prob_superior_exact(black_box(&a), black_box(&b0)).unwrap()));
    let p = PgLaplaceProblem::uniform(60, 150, 26, 143).unwrap();
    c.bench_function("pg_laplace_150", |b| b.iter(|| pg_laplace_prob_superior(black_box(&p)).unwrap()));
}

criterion_group!(benches, binary, normal, superiority);
criterion_main!(benches);
