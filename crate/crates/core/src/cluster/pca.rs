use nalgebra::{DMatrix, SymmetricEigen};

use super::{ClusterError, ReducedMatrix, Reducer, ReducerConfig};
use crate::embed::EmbeddingMatrix;

/// Principal-component projection of the unit-normalized rows.
///
/// Deterministic: components are ordered by variance and each output column is
/// sign-fixed so its largest-magnitude entry is positive.
#[derive(Debug, Clone, Copy, Default)]
pub struct PcaReducer;

impl Reducer for PcaReducer {
    fn name(&self) -> &str {
        "pca"
    }

    fn fit_transform(
        &self,
        input: &EmbeddingMatrix,
        cfg: &ReducerConfig,
    ) -> Result<ReducedMatrix, ClusterError> {
        Ok(pca_project(input, cfg.n_components))
    }
}

pub(crate) fn normalized_rows(input: &EmbeddingMatrix) -> DMatrix<f64> {
    let (n, d) = (input.len(), input.dim());
    let mut x = DMatrix::<f64>::zeros(n, d);
    for (i, row) in input.rows().enumerate() {
        let norm = row.iter().map(|v| f64::from(*v).powi(2)).sum::<f64>().sqrt();
        let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
        for (j, v) in row.iter().enumerate() {
            x[(i, j)] = f64::from(*v) * scale;
        }
    }
    x
}

pub(crate) fn pca_project(input: &EmbeddingMatrix, components: usize) -> ReducedMatrix {
    let n = input.len();
    let mut x = normalized_rows(input);
    let means: Vec<f64> = x.column_iter().map(|c| c.mean()).collect();
    for (j, mut col) in x.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }

    // Scores from whichever of the two Gram forms is smaller.
    let scores: DMatrix<f64> = if n <= x.ncols() {
        let eig = SymmetricEigen::new(&x * x.transpose());
        let order = descending(eig.eigenvalues.as_slice());
        let mut s = DMatrix::zeros(n, components);
        for (k, &idx) in order.iter().take(components).enumerate() {
            let scale = eig.eigenvalues[idx].max(0.0).sqrt();
            for i in 0..n {
                s[(i, k)] = eig.eigenvectors[(i, idx)] * scale;
            }
        }
        s
    } else {
        let eig = SymmetricEigen::new(x.transpose() * &x);
        let order = descending(eig.eigenvalues.as_slice());
        let mut s = DMatrix::zeros(n, components);
        for (k, &idx) in order.iter().take(components).enumerate() {
            let projected = &x * eig.eigenvectors.column(idx);
            s.set_column(k, &projected);
        }
        s
    };

    let mut data = Vec::with_capacity(n * components);
    let signs: Vec<f64> = scores
        .column_iter()
        .map(|col| {
            let pivot = col
                .iter()
                .copied()
                .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
            if pivot < 0.0 {
                -1.0
            } else {
                1.0
            }
        })
        .collect();
    for i in 0..n {
        for k in 0..components {
            data.push((scores[(i, k)] * signs[k]) as f32);
        }
    }
    ReducedMatrix::from_flat(components, data).expect("finite PCA scores")
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}
