//! Deployment-phase throughput: the parallel Monte Carlo dispatch against a
//! single-threaded run of the same workload.
//!
//! Built with the default `parallel` feature, both measurements run through
//! rayon pools (one sized to the machine, one pinned to a single worker);
//! without the feature, both fall back to the sequential loop and the two
//! measurements coincide.

use criterion::{criterion_group, criterion_main, Criterion};

use qlamc::config::RunConfig;
use qlamc::sim::{run_deployment_phase, AgentSpec};

fn bench_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.phase.deployment_runs = 16;
    cfg.phase.deployment_frames = 25;
    cfg
}

fn specs() -> Vec<AgentSpec> {
    let mut v = vec![AgentSpec::Table];
    v.extend(AgentSpec::olla_trio());
    v
}

#[cfg(feature = "parallel")]
fn bench_deployment(c: &mut Criterion) {
    let cfg = bench_config();
    let specs = specs();
    let mut group = c.benchmark_group("deployment");
    group.sample_size(10);

    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    group.bench_function("sequential", |b| {
        b.iter(|| single.install(|| run_deployment_phase(&cfg, &specs).unwrap()))
    });
    group.bench_function("parallel", |b| {
        b.iter(|| run_deployment_phase(&cfg, &specs).unwrap())
    });
    group.finish();
}

#[cfg(not(feature = "parallel"))]
fn bench_deployment(c: &mut Criterion) {
    let cfg = bench_config();
    let specs = specs();
    let mut group = c.benchmark_group("deployment");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| run_deployment_phase(&cfg, &specs).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_deployment);
criterion_main!(benches);
