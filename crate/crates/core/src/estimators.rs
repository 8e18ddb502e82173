//! Squared bias and variance of synthetic outputs against a reference output,
//! and Gaussian fits for scatter overlays.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::numeric::pairwise_sum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasVarianceRecord {
    pub query_id: String,
    pub word_count: Option<u32>,
    pub bias_sq: f64,
    pub variance: f64,
    pub replicate_count: usize,
}

/// Identifying metadata for one query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryMeta {
    pub query_id: String,
    pub word_count: Option<u32>,
}

/// Per-query squared bias `‖z̄ - z‖²` and variance
/// `Σ_k ‖z_k - z̄‖² / ((t-1) q)` of `t` samples against a reference `z`.
///
/// `reference` is `m x q`; `samples[j]` is the `t x q` block for query `j`.
/// With `q = 1` these are the usual scalar sample-mean bias and unbiased
/// sample variance.
pub fn bias_variance(
    reference: &Matrix,
    samples: &[Matrix],
    meta: &[QueryMeta],
) -> Result<Vec<BiasVarianceRecord>> {
    let m = reference.rows();
    let q = reference.cols();
    if samples.len() != m || meta.len() != m {
        return Err(Error::Dimension(format!(
            "{m} reference rows, {} sample blocks, {} metadata rows",
            samples.len(),
            meta.len()
        )));
    }
    let t = samples.first().map_or(0, Matrix::rows);
    if t < 2 {
        return Err(Error::Validation(format!(
            "variance needs at least 2 samples per query, got {t}"
        )));
    }
    samples
        .iter()
        .zip(meta)
        .enumerate()
        .map(|(j, (block, info))| {
            if block.rows() != t {
                return Err(Error::Validation(format!(
                    "query `{}` has {} samples, expected {t}",
                    info.query_id,
                    block.rows()
                )));
            }
            if block.cols() != q {
                return Err(Error::Dimension(format!(
                    "query `{}` samples have dimension {}, reference has {q}",
                    info.query_id,
                    block.cols()
                )));
            }
            let mean = block_mean(block);
            let bias: Vec<f64> = mean
                .iter()
                .zip(reference.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .collect();
            let dev: Vec<f64> = block
                .row_iter()
                .flat_map(|row| row.iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)))
                .collect();
            Ok(BiasVarianceRecord {
                query_id: info.query_id.clone(),
                word_count: info.word_count,
                bias_sq: pairwise_sum(&bias),
                variance: pairwise_sum(&dev) / ((t - 1) * q) as f64,
                replicate_count: t,
            })
        })
        .collect()
}

fn block_mean(block: &Matrix) -> Vec<f64> {
    (0..block.cols())
        .map(|c| pairwise_sum(&block.col(c)) / block.rows() as f64)
        .collect()
}

/// Mean and maximum-likelihood (divide-by-k) covariance of a point cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedGaussian {
    pub mean: Vec<f64>,
    pub covariance: Matrix,
}

impl FittedGaussian {
    /// Log-density of `y`; `None` when the covariance is singular.
    pub fn log_density(&self, y: &[f64]) -> Option<f64> {
        crate::cpo::gaussian_logpdf_unchecked(y, &self.mean, &self.covariance).ok()
    }
}

pub fn fit_gaussian(points: &Matrix) -> Result<FittedGaussian> {
    let k = points.rows();
    if k < 2 {
        return Err(Error::Validation(format!(
            "Gaussian fit needs at least 2 points, got {k}"
        )));
    }
    let mean = block_mean(points);
    let d = points.cols();
    let mut cov = Matrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let prods: Vec<f64> = points
                .row_iter()
                .map(|r| (r[a] - mean[a]) * (r[b] - mean[b]))
                .collect();
            let v = pairwise_sum(&prods) / k as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok(FittedGaussian {
        mean,
        covariance: cov,
    })
}
