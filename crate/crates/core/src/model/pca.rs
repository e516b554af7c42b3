//! Two-dimensional PCA of the time-of-day embedding table.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::LatenessModel;
use crate::network::TimePeriod;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingPoint {
    pub period: TimePeriod,
    pub x: f64,
    pub y: f64,
}

/// Project mean-centered rows onto their top two principal axes. Components
/// with a negligible singular value yield zeros; each axis is oriented so its
/// largest-magnitude loading is positive.
pub fn pca_2d(rows: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if n == 0 || d == 0 {
        return vec![[0.0; 2]; n];
    }
    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    let svd = centered.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|a, b| svd.singular_values[*b].total_cmp(&svd.singular_values[*a]));
    let scale = centered.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = 1e-10 * scale;

    let mut out = vec![[0.0; 2]; n];
    for (k, &c) in order.iter().take(2).enumerate() {
        if svd.singular_values[c] <= tol {
            continue;
        }
        let mut axis: Vec<f64> = v_t.row(c).iter().copied().collect();
        let pivot = axis
            .iter()
            .copied()
            .fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if pivot < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
        for (i, o) in out.iter_mut().enumerate() {
            o[k] = (0..d).map(|j| centered[(i, j)] * axis[j]).sum();
        }
    }
    out
}

/// One 2D point per period, in period order.
pub fn embedding_coords<F: Real>(model: &LatenessModel<F>) -> Vec<EmbeddingPoint> {
    pca_2d(&model.embedding_table())
        .into_iter()
        .zip(TimePeriod::ALL)
        .map(|([x, y], period)| EmbeddingPoint { period, x, y })
        .collect()
}
