use criterion::{criterion_group, criterion_main, Criterion};
use qofdm::harness::{run_sweep, ExperimentConfig, ExperimentKind, Method};
use qofdm::parallel::ExecutionMode;

fn config() -> ExperimentConfig {
    ExperimentConfig {
        kind: ExperimentKind::BerVsSnr,
        n: 256,
        n_d: 148,
        bits: vec![1, 2],
        snr_db: vec![10.0],
        trials: 16,
        t_est: 5,
        t_det: 5,
        methods: vec![Method::GTurbo],
        ..Default::default()
    }
}

fn sweep(c: &mut Criterion) {
    let cfg = config();
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    g.bench_function("sequential", |b| b.iter(|| run_sweep(&cfg, ExecutionMode::Sequential).unwrap()));
    g.bench_function("parallel", |b| b.iter(|| run_sweep(&cfg, ExecutionMode::Parallel).unwrap()));
    g.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
