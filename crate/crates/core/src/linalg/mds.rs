use serde::{Deserialize, Serialize};

use super::{sym_eigen, Matrix};
use crate::error::{Error, Result};

/// Output of classical (Torgerson) MDS.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdsEmbedding {
    /// `n x dim`, columns ordered by descending eigenvalue.
    pub coords: Matrix,
    /// Full spectrum of the doubly centered Gram matrix, descending.
    pub spectrum: Vec<f64>,
    /// Sum of |λ| over negative eigenvalues of the Gram matrix.
    pub clipped_negative_mass: f64,
    /// Set when any of the retained eigenvalues was negative and clipped to 0.
    pub clipped: bool,
}

/// `B = -½ J (d∘d) J` with `J = I - 11ᵀ/n`.
pub fn double_center(d: &Matrix) -> Matrix {
    let n = d.rows();
    let sq = d.map(|v| v * v);
    let row_means: Vec<f64> = sq
        .row_iter()
        .map(|r| r.iter().sum::<f64>() / n as f64)
        .collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut b = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // sq is symmetric, so column means equal row means.
            b[(i, j)] = -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand);
        }
    }
    b.symmetrized()
}

pub(crate) fn validate_distances(d: &Matrix) -> Result<()> {
    if !d.is_square() {
        return Err(Error::Dimension(format!(
            "distance matrix is {}x{}",
            d.rows(),
            d.cols()
        )));
    }
    let n = d.rows();
    let tol = 1e-12 * d.max_abs().max(1.0);
    for i in 0..n {
        if d[(i, i)].abs() > tol {
            return Err(Error::Validation(format!(
                "nonzero diagonal entry d[{i},{i}] = {}",
                d[(i, i)]
            )));
        }
        for j in 0..n {
            if d[(i, j)] < 0.0 {
                return Err(Error::Validation(format!(
                    "negative distance d[{i},{j}] = {}",
                    d[(i, j)]
                )));
            }
            if (d[(i, j)] - d[(j, i)]).abs() > tol {
                return Err(Error::Asymmetric(format!("d[{i},{j}] != d[{j},{i}]")));
            }
        }
    }
    Ok(())
}

/// Embeds `n` objects with pairwise distances `d` into `dim` dimensions.
///
/// Coordinates are the top `dim` eigenvectors of the doubly centered matrix
/// scaled by `sqrt(max(λ, 0))`.
pub fn classical_mds(d: &Matrix, dim: usize) -> Result<MdsEmbedding> {
    validate_distances(d)?;
    let n = d.rows();
    if n < 2 || dim < 1 || dim > n - 1 {
        return Err(Error::Range {
            what: "dim",
            value: dim,
            range: format!("[1, {}]", n.saturating_sub(1)),
        });
    }
    let b = double_center(d);
    let spec = sym_eigen(&b)?;

    let mut coords = Matrix::zeros(n, dim);
    let mut clipped = false;
    for k in 0..dim {
        let lam = spec.eigenvalues[k];
        if lam < 0.0 {
            clipped = true;
        }
        let s = lam.max(0.0).sqrt();
        for i in 0..n {
            coords[(i, k)] = spec.eigenvectors[(i, k)] * s;
        }
    }
    let clipped_negative_mass = spec
        .eigenvalues
        .iter()
        .filter(|&&l| l < 0.0)
        .map(|l| -l)
        .sum();
    Ok(MdsEmbedding {
        coords,
        spectrum: spec.eigenvalues,
        clipped_negative_mass,
        clipped,
    })
}
