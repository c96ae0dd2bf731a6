//! Seeded synthetic point sets for tests and benchmarks.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::embed::EmbeddingMatrix;
use crate::seed;

/// Isotropic Gaussian blobs: `blobs` centres drawn from `N(0, spread^2 I)`,
/// `per_blob` points around each with unit variance. Returns the points and
/// the generating blob of each point; points are grouped by blob.
pub fn gaussian_blobs(
    seed_value: u64,
    blobs: usize,
    per_blob: usize,
    dim: usize,
    spread: f32,
) -> (EmbeddingMatrix, Vec<usize>) {
    let mut rng = seed::rng(seed_value);
    let unit = Normal::new(0.0f32, 1.0).expect("valid normal");
    let centres: Vec<Vec<f32>> = (0..blobs)
        .map(|_| (0..dim).map(|_| unit.sample(&mut rng) * spread).collect())
        .collect();
    let mut data = Vec::with_capacity(blobs * per_blob * dim);
    let mut truth = Vec::with_capacity(blobs * per_blob);
    for (b, centre) in centres.iter().enumerate() {
        for _ in 0..per_blob {
            data.extend(centre.iter().map(|c| c + unit.sample(&mut rng)));
            truth.push(b);
        }
    }
    (EmbeddingMatrix::from_flat(dim, data).expect("finite samples"), truth)
}

/// Blobs with explicit centres and a shared standard deviation.
pub fn blobs_at(
    seed_value: u64,
    centres: &[Vec<f32>],
    per_blob: usize,
    std_dev: f32,
) -> (EmbeddingMatrix, Vec<usize>) {
    let mut rng = seed::rng(seed_value);
    let noise = Normal::new(0.0f32, std_dev).expect("valid normal");
    let dim = centres.first().map_or(0, Vec::len);
    let mut data = Vec::new();
    let mut truth = Vec::new();
    for (b, centre) in centres.iter().enumerate() {
        for _ in 0..per_blob {
            data.extend(centre.iter().map(|c| c + noise.sample(&mut rng)));
            truth.push(b);
        }
    }
    (EmbeddingMatrix::from_flat(dim, data).expect("finite samples"), truth)
}

/// `n` points uniform in `[lo, hi)^dim`.
pub fn uniform_points(seed_value: u64, n: usize, dim: usize, lo: f32, hi: f32) -> EmbeddingMatrix {
    let mut rng = seed::rng(seed_value);
    let data = (0..n * dim).map(|_| rng.random_range(lo..hi)).collect();
    EmbeddingMatrix::from_flat(dim, data).expect("finite samples")
}
