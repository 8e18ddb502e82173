use serde::{Deserialize, Serialize};

use super::{sym_eigen, Matrix};
use crate::error::{Error, Result};

/// Principal axes of a centered (never scaled) data matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `p_in x p_out`, orthonormal columns.
    pub components: Matrix,
    /// Sample-covariance eigenvalue for each retained component.
    pub explained_variance: Vec<f64>,
    /// Trace of the sample covariance (all components).
    pub total_variance: f64,
}

impl PcaModel {
    pub fn out_dim(&self) -> usize {
        self.components.cols()
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        if self.total_variance == 0.0 {
            return vec![0.0; self.explained_variance.len()];
        }
        self.explained_variance
            .iter()
            .map(|v| v / self.total_variance)
            .collect()
    }

    /// Maps scores back to the input space: `scores · componentsᵀ + mean`.
    pub fn inverse_transform(&self, scores: &Matrix) -> Result<Matrix> {
        let mut out = scores.matmul(&self.components.transpose())?;
        for i in 0..out.rows() {
            for (v, m) in out.row_mut(i).iter_mut().zip(&self.mean) {
                *v += m;
            }
        }
        Ok(out)
    }
}

/// Fits PCA on the rows of `data` using the (n-1)-normalized sample covariance.
pub fn pca_fit(data: &Matrix, out_dim: usize) -> Result<PcaModel> {
    let (n, p) = data.shape();
    if n < 2 {
        return Err(Error::Range {
            what: "rows",
            value: n,
            range: "[2, inf)".into(),
        });
    }
    let max_dim = (n - 1).min(p);
    if out_dim < 1 || out_dim > max_dim {
        return Err(Error::Range {
            what: "out_dim",
            value: out_dim,
            range: format!("[1, {max_dim}]"),
        });
    }
    let mean = data.col_means();
    let centered = data.centered();
    let cov = centered
        .transpose()
        .matmul(&centered)?
        .scale(1.0 / (n - 1) as f64)
        .symmetrized();
    let spectrum = sym_eigen(&cov)?;
    let explained_variance = spectrum.eigenvalues[..out_dim]
        .iter()
        .map(|&l| l.max(0.0))
        .collect();
    Ok(PcaModel {
        mean,
        components: spectrum.eigenvectors.leading_cols(out_dim),
        explained_variance,
        total_variance: cov.trace(),
    })
}

/// Projects rows onto the fitted components: `(data - mean) · components`.
pub fn pca_transform(model: &PcaModel, data: &Matrix) -> Result<Matrix> {
    if data.cols() != model.mean.len() {
        return Err(Error::Dimension(format!(
            "data has {} columns, model expects {}",
            data.cols(),
            model.mean.len()
        )));
    }
    let mut centered = data.clone();
    for i in 0..centered.rows() {
        for (v, m) in centered.row_mut(i).iter_mut().zip(&model.mean) {
            *v -= m;
        }
    }
    centered.matmul(&model.components)
}
