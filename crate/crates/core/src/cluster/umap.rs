//! UMAP: fuzzy k-nearest-neighbour graph under the cosine metric, laid out
//! in low dimension by negative-sampling SGD.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::pca::{normalized_rows, pca_project};
use super::{ClusterError, ReducedMatrix, Reducer, ReducerConfig};
use crate::embed::EmbeddingMatrix;
use crate::seed;

const SMOOTH_K_TOLERANCE: f64 = 1e-5;
const MIN_K_DIST_SCALE: f64 = 1e-3;
const GRADIENT_CLIP: f32 = 4.0;

#[derive(Debug, Clone)]
pub struct UmapReducer {
    /// Defaults to 500 for up to 10,000 points and 200 above.
    pub n_epochs: Option<usize>,
    pub learning_rate: f32,
    pub negative_sample_rate: usize,
    pub spread: f32,
    pub repulsion_strength: f32,
}

impl Default for UmapReducer {
    fn default() -> Self {
        Self {
            n_epochs: None,
            learning_rate: 1.0,
            negative_sample_rate: 5,
            spread: 1.0,
            repulsion_strength: 1.0,
        }
    }
}

impl Reducer for UmapReducer {
    fn name(&self) -> &str {
        "umap"
    }

    fn fit_transform(
        &self,
        input: &EmbeddingMatrix,
        cfg: &ReducerConfig,
    ) -> Result<ReducedMatrix, ClusterError> {
        let n = input.len();
        let k = cfg.n_neighbors.min(n);
        let (knn_idx, knn_dist) = cosine_knn(input, k);
        let graph = fuzzy_graph(&knn_idx, &knn_dist, k);
        let n_epochs = self
            .n_epochs
            .unwrap_or(if n <= 10_000 { 500 } else { 200 });
        let (a, b) = fit_curve_params(f64::from(self.spread), f64::from(cfg.min_dist));
        let mut rng = seed::rng(cfg.seed);
        let mut embedding = initial_layout(input, cfg.n_components, &mut rng);
        self.optimize(&mut embedding, cfg.n_components, &graph, n_epochs, a as f32, b as f32, &mut rng);
        Ok(ReducedMatrix::from_flat(cfg.n_components, embedding).expect("finite layout"))
    }
}

/// Exact neighbours, self first, then the `k - 1` closest others by
/// `(distance, index)`.
fn cosine_knn(input: &EmbeddingMatrix, k: usize) -> (Vec<Vec<usize>>, Vec<Vec<f64>>) {
    let x = normalized_rows(input);
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| x.row(i).iter().copied().collect()).collect();
    let mut indices = Vec::with_capacity(n);
    let mut distances = Vec::with_capacity(n);
    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        scratch.clear();
        for j in 0..n {
            if j != i {
                let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
                scratch.push(((1.0 - dot).max(0.0), j));
            }
        }
        let take = k.saturating_sub(1).min(scratch.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if take < scratch.len() && take > 0 {
            scratch.select_nth_unstable_by(take - 1, cmp);
        }
        scratch.truncate(take);
        scratch.sort_by(cmp);
        let mut idx = vec![i];
        let mut dist = vec![0.0];
        for &(d, j) in &scratch {
            idx.push(j);
            dist.push(d);
        }
        indices.push(idx);
        distances.push(dist);
    }
    (indices, distances)
}

/// Per-point `(rho, sigma)` so that each neighbourhood has total membership
/// `log2(k)`.
fn smooth_knn_dist(distances: &[Vec<f64>], k: usize) -> Vec<(f64, f64)> {
    let target = (k as f64).log2();
    let all: Vec<f64> = distances.iter().flatten().copied().collect();
    let global_mean = all.iter().sum::<f64>() / all.len().max(1) as f64;
    distances
        .iter()
        .map(|row| {
            let rho = row.iter().copied().find(|d| *d > 0.0).unwrap_or(0.0);
            let (mut lo, mut hi, mut mid) = (0.0f64, f64::INFINITY, 1.0f64);
            for _ in 0..64 {
                let psum: f64 = row[1..]
                    .iter()
                    .map(|d| {
                        let shifted = d - rho;
                        if shifted > 0.0 {
                            (-shifted / mid).exp()
                        } else {
                            1.0
                        }
                    })
                    .sum();
                if (psum - target).abs() < SMOOTH_K_TOLERANCE {
                    break;
                }
                if psum > target {
                    hi = mid;
                    mid = (lo + hi) / 2.0;
                } else {
                    lo = mid;
                    mid = if hi.is_infinite() { mid * 2.0 } else { (lo + hi) / 2.0 };
                }
            }
            let floor = if rho > 0.0 {
                MIN_K_DIST_SCALE * row.iter().sum::<f64>() / row.len() as f64
            } else {
                MIN_K_DIST_SCALE * global_mean
            };
            (rho, mid.max(floor))
        })
        .collect()
}

/// Symmetrized membership graph as sorted `(head, tail, weight)` edges.
fn fuzzy_graph(indices: &[Vec<usize>], distances: &[Vec<f64>], k: usize) -> Vec<(usize, usize, f64)> {
    let params = smooth_knn_dist(distances, k);
    let mut directed: HashMap<(usize, usize), f64> = HashMap::new();
    for (i, (row_idx, row_dist)) in indices.iter().zip(distances).enumerate() {
        let (rho, sigma) = params[i];
        for (&j, &d) in row_idx.iter().zip(row_dist).skip(1) {
            let w = if d - rho <= 0.0 || sigma == 0.0 {
                1.0
            } else {
                (-(d - rho) / sigma).exp()
            };
            directed.insert((i, j), w);
        }
    }
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(directed.len() * 2);
    for (&(i, j), &w) in &directed {
        let back = directed.get(&(j, i)).copied().unwrap_or(0.0);
        edges.push((i, j, w + back - w * back));
        if back == 0.0 {
            edges.push((j, i, w));
        }
    }
    edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    edges
}

fn initial_layout(input: &EmbeddingMatrix, dim: usize, rng: &mut impl Rng) -> Vec<f32> {
    let mut coords = pca_project(input, dim).as_flat().to_vec();
    let max_abs = coords.iter().fold(0f32, |m, v| m.max(v.abs()));
    if max_abs > 0.0 {
        let expansion = 10.0 / max_abs;
        coords.iter_mut().for_each(|v| *v *= expansion);
    }
    let noise = Normal::new(0.0f32, 1e-4).expect("valid normal");
    coords.iter_mut().for_each(|v| *v += noise.sample(rng));
    let n = coords.len() / dim;
    for d in 0..dim {
        let (mut lo, mut hi) = (f32::INFINITY, f32::NEG_INFINITY);
        for i in 0..n {
            lo = lo.min(coords[i * dim + d]);
            hi = hi.max(coords[i * dim + d]);
        }
        let range = hi - lo;
        for i in 0..n {
            let v = &mut coords[i * dim + d];
            *v = if range > 0.0 { 10.0 * (*v - lo) / range } else { 0.0 };
        }
    }
    coords
}

impl UmapReducer {
    #[allow(clippy::too_many_arguments)]
    fn optimize(
        &self,
        emb: &mut [f32],
        dim: usize,
        graph: &[(usize, usize, f64)],
        n_epochs: usize,
        a: f32,
        b: f32,
        rng: &mut impl Rng,
    ) {
        let n = emb.len() / dim;
        let max_w = graph.iter().fold(0f64, |m, e| m.max(e.2));
        let edges: Vec<&(usize, usize, f64)> = graph
            .iter()
            .filter(|e| e.2 >= max_w / n_epochs as f64)
            .collect();
        if edges.is_empty() || n < 2 {
            return;
        }
        let per_sample: Vec<f64> = edges.iter().map(|e| max_w / e.2).collect();
        let per_negative: Vec<f64> = per_sample
            .iter()
            .map(|s| s / self.negative_sample_rate.max(1) as f64)
            .collect();
        let mut next_sample = per_sample.clone();
        let mut next_negative = per_negative.clone();
        let gamma = self.repulsion_strength;
        let clip = |v: f32| v.clamp(-GRADIENT_CLIP, GRADIENT_CLIP);

        for epoch in 0..n_epochs {
            let alpha = self.learning_rate * (1.0 - epoch as f32 / n_epochs as f32);
            let now = epoch as f64;
            for (e, &&(j, k, _)) in edges.iter().enumerate() {
                if next_sample[e] > now {
                    continue;
                }
                let d2 = dist2(emb, dim, j, k);
                let coeff = if d2 > 0.0 {
                    -2.0 * a * b * d2.powf(b - 1.0) / (a * d2.powf(b) + 1.0)
                } else {
                    0.0
                };
                for d in 0..dim {
                    let g = clip(coeff * (emb[j * dim + d] - emb[k * dim + d]));
                    emb[j * dim + d] += g * alpha;
                    emb[k * dim + d] -= g * alpha;
                }
                next_sample[e] += per_sample[e];

                let negatives = ((now - next_negative[e]) / per_negative[e]).max(0.0) as usize;
                for _ in 0..negatives {
                    let other = rng.random_range(0..n);
                    if other == j {
                        continue;
                    }
                    let d2 = dist2(emb, dim, j, other);
                    let coeff = if d2 > 0.0 {
                        2.0 * gamma * b / ((0.001 + d2) * (a * d2.powf(b) + 1.0))
                    } else {
                        0.0
                    };
                    if coeff <= 0.0 {
                        continue;
                    }
                    for d in 0..dim {
                        let g = clip(coeff * (emb[j * dim + d] - emb[other * dim + d]));
                        emb[j * dim + d] += g * alpha;
                    }
                }
                next_negative[e] += negatives as f64 * per_negative[e];
            }
        }
    }
}

fn dist2(emb: &[f32], dim: usize, i: usize, j: usize) -> f32 {
    (0..dim)
        .map(|d| {
            let v = emb[i * dim + d] - emb[j * dim + d];
            v * v
        })
        .sum()
}

/// Least-squares fit of `1 / (1 + a x^(2b))` to the target membership curve
/// (1 below `min_dist`, exponential decay with scale `spread` above), sampled
/// at 300 points on `[0, 3 * spread]`.
pub fn fit_curve_params(spread: f64, min_dist: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..300).map(|i| 3.0 * spread * i as f64 / 299.0).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| if x < min_dist { 1.0 } else { (-(x - min_dist) / spread).exp() })
        .collect();
    let cost = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| (1.0 / (1.0 + a * x.powf(2.0 * b)) - y).powi(2))
            .sum()
    };

    // Levenberg-Marquardt from (1, 1).
    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut damping = 1e-3;
    let mut current = cost(a, b);
    for _ in 0..500 {
        let (mut jtj, mut jtr) = ([[0.0f64; 2]; 2], [0.0f64; 2]);
        for (&x, &y) in xs.iter().zip(&ys) {
            let u = x.powf(2.0 * b);
            let f = 1.0 / (1.0 + a * u);
            let r = f - y;
            let da = -u * f * f;
            let db = if x > 0.0 { -a * f * f * u * 2.0 * x.ln() } else { 0.0 };
            jtj[0][0] += da * da;
            jtj[0][1] += da * db;
            jtj[1][1] += db * db;
            jtr[0] += da * r;
            jtr[1] += db * r;
        }
        jtj[1][0] = jtj[0][1];
        let mut improved = false;
        for _ in 0..30 {
            let m00 = jtj[0][0] * (1.0 + damping);
            let m11 = jtj[1][1] * (1.0 + damping);
            let det = m00 * m11 - jtj[0][1] * jtj[1][0];
            if det == 0.0 {
                damping *= 10.0;
                continue;
            }
            let step_a = -(m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
            let step_b = -(m00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
            let candidate = cost(a + step_a, b + step_b);
            if candidate.is_finite() && candidate < current {
                let gain = current - candidate;
                a += step_a;
                b += step_b;
                current = candidate;
                damping = (damping / 10.0).max(1e-12);
                improved = gain > 1e-15 * current.max(1e-300);
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (a, b)
}
