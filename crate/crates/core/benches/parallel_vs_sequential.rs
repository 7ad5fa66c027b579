use std::hint::black_box;

use bucketing::codes::{shell_analytics, shell_code};
use bucketing::information::{conjecture_scan_with, info_numeric_with, InfoQuery, NumericSettings, DEFAULT_SLACK};
use bucketing::probmodel::ProbabilityMatrix;
use bucketing::simharness::run_experiment_with;
use bucketing::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn modes() -> Vec<(&'static str, Execution)> {
    let mut m = vec![("sequential", Execution::Sequential)];
    #[cfg(feature = "parallel")]
    m.push(("parallel", Execution::Parallel));
    m
}

fn simulation(c: &mut Criterion) {
    let p = ProbabilityMatrix::bernoulli(0.9).unwrap();
    let a = shell_analytics(12, 7, 0.9, 0.1).unwrap();
    let code = shell_code(12, 7, a.t as u64, 1).unwrap();
    let n = a.n as usize;
    let mut g = c.benchmark_group("run_experiment");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::new(name, "shell d=12"), |b| {
            b.iter(|| run_experiment_with(exec, &code, &p, 12, n, n, 500, black_box(3)).unwrap())
        });
    }
    g.finish();
}

fn scan(c: &mut Criterion) {
    let mut g = c.benchmark_group("conjecture_scan");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::new(name, "resolution 30"), |b| {
            b.iter(|| conjecture_scan_with(exec, black_box(&[0.65, 0.85]), 30, DEFAULT_SLACK))
        });
    }
    g.finish();
}

fn optimizer(c: &mut Criterion) {
    let p = ProbabilityMatrix::new(vec![vec![0.4, 0.1, 0.05], vec![0.05, 0.2, 0.2]]).unwrap();
    let settings = NumericSettings::default();
    let mut g = c.benchmark_group("info_numeric");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::new(name, "2x3 mu=2"), |b| {
            b.iter(|| info_numeric_with(exec, &p, black_box(InfoQuery::new(1.0, 0.75, 2.0)), &settings))
        });
    }
    g.finish();
}

criterion_group!(benches, simulation, scan, optimizer);
criterion_main!(benches);
