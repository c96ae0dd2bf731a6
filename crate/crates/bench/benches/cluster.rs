use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use threadtoc::cluster::{hdbscan, reduce, ClustererConfig, PcaReducer, ReducerConfig, Selection, UmapReducer};
use threadtoc::synthetic::gaussian_blobs;

fn reducers(c: &mut Criterion) {
    let mut group = c.benchmark_group("reduce");
    group.sample_size(10);
    for per_blob in [100, 300] {
        let (x, _) = gaussian_blobs(0, 3, per_blob, 64, 5.0);
        let cfg = ReducerConfig { n_components: 5, ..ReducerConfig::default() };
        group.bench_with_input(BenchmarkId::new("pca", x.len()), &x, |b, x| b.iter(|| reduce(x, &cfg, &PcaReducer)));
        group.bench_with_input(BenchmarkId::new("umap", x.len()), &x, |b, x| {
            b.iter(|| reduce(x, &cfg, &UmapReducer::default()))
        });
    }
    group.finish();
}

fn clusterer(c: &mut Criterion) {
    let mut group = c.benchmark_group("hdbscan");
    for per_blob in [100, 500] {
        let (x, _) = gaussian_blobs(1, 4, per_blob, 32, 5.0);
        let z = reduce(&x, &ReducerConfig { n_components: 5, ..ReducerConfig::default() }, &PcaReducer).unwrap();
        for selection in [Selection::Leaf, Selection::Eom] {
            let cfg = ClustererConfig { min_cluster_size: 10, selection, ..ClustererConfig::default() };
            group.bench_with_input(BenchmarkId::new(format!("{selection:?}"), z.len()), &z, |b, z| b.iter(|| hdbscan(z, &cfg)));
        }
    }
    group.finish();
}

criterion_group!(benches, reducers, clusterer);
criterion_main!(benches);
