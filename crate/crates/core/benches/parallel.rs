//! Sequential versus rayon execution of the batch workloads: independent
//! simulation replications and oracle solves over a grid of strategies.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spectrum_queue::par::{self, Execution};
use spectrum_queue::sim::{self, SimConfig, StopRule};
use spectrum_queue::{oracle, JoiningStrategy, SystemParams};

fn params() -> SystemParams {
    SystemParams::new(7.0, 0.5, 3.0, 2.0, 2.0, 3.0).unwrap()
}

fn modes() -> [(&'static str, Execution); 2] {
    [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ]
}

fn replications(c: &mut Criterion) {
    let config = SimConfig::new(
        params(),
        JoiningStrategy::new(7.0 / 12.0).unwrap(),
        StopRule::Events(50_000),
        42,
    );
    let mut group = c.benchmark_group("replicate_16x50k_events");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sim::replicate_with(black_box(&config), 16, exec).unwrap())
        });
    }
    group.finish();
}

fn oracle_grid(c: &mut Criterion) {
    let p = params();
    let mut group = c.benchmark_group("oracle_stationary_64_strategies");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                par::map_indexed(64, exec, |i| {
                    let q = JoiningStrategy::new(i as f64 / 63.0).unwrap();
                    oracle::stationary_vector(black_box(&p), q).unwrap().1[0]
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, replications, oracle_grid);
criterion_main!(benches);
