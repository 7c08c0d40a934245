use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rotaens_core::dynamics::Setting;
use rotaens_core::inference::ParamVector;
use rotaens_core::metrics::burden_estimate;
use rotaens_core::model::{ModelId, ModelSpec};
use rotaens_core::par::Execution;

fn draws(n: usize) -> Vec<ParamVector> {
    (0..n)
        .map(|i| {
            let k = i as f64 / n as f64;
            ParamVector::new(0.38 + 0.06 * k, 7.3 + 0.2 * k, 2.6, 0.096, [19.0 + 2.0 * k; 6])
        })
        .collect()
}

fn burden_over_draws(c: &mut Criterion) {
    let spec = ModelSpec::new(ModelId::B);
    let setting = Setting::default();
    let draws = draws(8);
    let mut group = c.benchmark_group("burden_estimate_8_draws");
    group.sample_size(10);
    for (name, exec) in [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| burden_estimate(&spec, &draws, &setting, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, burden_over_draws);
criterion_main!(benches);
