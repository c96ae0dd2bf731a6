use criterion::{criterion_group, criterion_main, Criterion};
use threadtoc::pipeline::{run, PipelineConfig};
use threadtoc_bench::sample;

fn sample_run(c: &mut Criterion) {
    let d = sample();
    let cfg = PipelineConfig::default();
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function("sample_mock", |b| b.iter(|| run(&d, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, sample_run);
criterion_main!(benches);
