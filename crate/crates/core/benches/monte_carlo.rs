//! Sequential versus parallel Monte-Carlo on a seven-cell drop.
//!
//! Without the `parallel` feature both variants run inline.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ricean_se::montecarlo::simulate_drop;
use ricean_se::{Executor, Scenario};

fn bench_simulate_drop(c: &mut Criterion) {
    let mut scenario = Scenario::reference();
    scenario.system.antennas = 64;
    let cfg = scenario.config(None).unwrap();
    let ls = scenario.drop(0, None).unwrap();
    let mut settings = scenario.mc_settings(0);
    settings.n_small_scale = 400;

    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut group = c.benchmark_group("simulate_drop");
    group.sample_size(10);
    let sequential = Executor::sequential();
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(simulate_drop(&cfg, &ls, &settings, 0, &sequential).unwrap()))
    });
    let mut counts = vec![2, 4, cores.max(2)];
    counts.sort_unstable();
    counts.dedup();
    for workers in counts {
        let exec = Executor::new(workers);
        group.bench_with_input(BenchmarkId::new("parallel", workers), &workers, |b, _| {
            b.iter(|| black_box(simulate_drop(&cfg, &ls, &settings, 0, &exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_simulate_drop);
criterion_main!(benches);
