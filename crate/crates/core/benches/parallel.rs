//! Thread-count comparison for the data-parallel kernels.
//!
//! Build with `--no-default-features` to measure the sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use eu_core::hypothesis::{build_posterior, Geometric};
use eu_core::interaction::History;
use eu_core::minilang::{Alphabets, PerceptionMode, StepBudget};
use eu_core::par::{is_parallel, with_threads};
use eu_core::utility::naturals;
use eu_core::witness::theta_outputs;

fn thread_counts() -> Vec<usize> {
    let n = std::thread::available_parallelism().map_or(1, |n| n.get());
    if is_parallel() && n > 1 {
        vec![1, n]
    } else {
        vec![1]
    }
}

fn theta(c: &mut Criterion) {
    let budget = StepBudget::new(256).unwrap();
    let mut g = c.benchmark_group("theta_outputs");
    g.sample_size(10);
    for t in thread_counts() {
        g.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| with_threads(t, || theta_outputs(1 << 15, budget)))
        });
    }
    g.finish();
}

fn posterior(c: &mut Criterion) {
    let a = Alphabets::new(2, PerceptionMode::Finite(2)).unwrap();
    let h = History::new(vec![0, 1, 1], naturals(&[1, 0, 1])).unwrap();
    let budget = StepBudget::new(128).unwrap();
    let mut g = c.benchmark_group("build_posterior");
    g.sample_size(10);
    for t in thread_counts() {
        g.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| with_threads(t, || build_posterior(&h, 1 << 14, budget, &Geometric, &a)))
        });
    }
    g.finish();
}

criterion_group!(benches, theta, posterior);
criterion_main!(benches);
