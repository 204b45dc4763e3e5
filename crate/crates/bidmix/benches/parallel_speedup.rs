//! Compares the worker-pool and sequential execution paths on the two
//! embarrassingly parallel workloads: multi-seed policy sweeps and the
//! Monte Carlo fixed-configuration oracle.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bidmix::harness::{run_experiment, ExperimentConfig, PolicyKind};
use bidmix::saddle::v_fixed;
use bidmix::scenarios;

fn sweep_config(jobs: usize) -> ExperimentConfig {
    let scenario = scenarios::make_s4(1.0);
    let mut c = ExperimentConfig::new(scenario, "s4", 150, 0.7);
    c.policies = vec![PolicyKind::Greedy, PolicyKind::Random];
    c.alpha = 0.0;
    c.seeds = (0, 7);
    c.mc_samples = 400;
    c.mc_paths = 8;
    c.jobs = jobs;
    c.use_cache = false;
    c
}

fn bench_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("multi_seed_sweep");
    group.sample_size(10);
    for (label, jobs) in [("sequential", 1usize), ("parallel", 0)] {
        group.bench_with_input(BenchmarkId::from_parameter(label), &jobs, |b, jobs| {
            let config = sweep_config(*jobs);
            b.iter(|| run_experiment(&config).unwrap());
        });
    }
    group.finish();
}

fn bench_v_fixed(c: &mut Criterion) {
    let scenario = scenarios::make_s0(1.0);
    let b = scenario.per_period_budget(0.7);
    let mut group = c.benchmark_group("v_fixed_oracle");
    group.sample_size(10);
    for (label, jobs) in [("sequential", 1usize), ("parallel", 0)] {
        group.bench_with_input(BenchmarkId::from_parameter(label), &jobs, |bench, jobs| {
            bench.iter(|| {
                let mut rng = ChaCha8Rng::seed_from_u64(7);
                v_fixed(&scenario, &b, 200, 24, &mut rng, *jobs).unwrap()
            });
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sweep, bench_v_fixed);
criterion_main!(benches);
