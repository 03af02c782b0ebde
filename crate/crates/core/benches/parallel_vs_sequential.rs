//! Sequential vs rayon execution of the two hot loops: Monte Carlo
//! replications and payoff-curve evaluation. Build with
//! `--no-default-features` to compare against the sequential-only build.

use std::hint::black_box;

use coopetition::provider::{linspace, payoff_curve};
use coopetition::simulation::run_replications;
use coopetition::{EquilibriumStrategy, Execution, MarketConfig, TypeDistribution};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn market() -> MarketConfig {
    let d = TypeDistribution::truncated_normal(125.0, 50.0, 50.0, 200.0).unwrap();
    MarketConfig::new(4, d, 0.3, 0.4, 370.0).unwrap()
}

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn replications(c: &mut Criterion) {
    let m = market();
    let s = EquilibriumStrategy::new(&m, 112.0).unwrap();
    let mut g = c.benchmark_group("replications");
    g.sample_size(20);
    for n in [1_000usize, 5_000] {
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| run_replications(&m, &s, black_box(n), 0, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn curve(c: &mut Criterion) {
    let m = market();
    let cs = linspace(40.0, 200.0, 200);
    let mut g = c.benchmark_group("payoff_curve");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| payoff_curve(&m, black_box(&cs), exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, replications, curve);
criterion_main!(benches);
