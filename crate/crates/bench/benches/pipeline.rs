use criterion::{criterion_group, criterion_main, Criterion, Throughput};

use aptbm_core::harness::{run_experiment_with_workers, ExperimentConfig, Method};

fn end_to_end(c: &mut Criterion) {
    let trials = 8192;
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.throughput(Throughput::Elements(trials as u64));
    for method in Method::ALL {
        let mut cfg = ExperimentConfig::default();
        cfg.run.trials = trials;
        cfg.reconstruction.method = method;
        group.bench_function(method.as_str(), |b| {
            b.iter(|| run_experiment_with_workers(&cfg, 1).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, end_to_end);
criterion_main!(benches);
