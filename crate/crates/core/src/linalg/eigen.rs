use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::Result;

const MAX_SWEEPS: usize = 100;

/// Eigen-pairs of a symmetric matrix, eigenvalues in non-increasing order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: Matrix,
}

impl Spectrum {
    /// `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let v = &self.eigenvectors;
        let n = v.rows();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for (k, &lam) in self.eigenvalues.iter().enumerate() {
                    s += v[(i, k)] * lam * v[(j, k)];
                }
                out[(i, j)] = s;
            }
        }
        out
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// The input must be symmetric to 1e-10 relative to its largest entry; it is
/// symmetrized before iterating. Each eigenvector is signed so that its
/// largest-magnitude component is positive (first such component on ties),
/// which makes the output a deterministic function of the input bits.
pub fn sym_eigen(a: &Matrix) -> Result<Spectrum> {
    a.check_symmetric(1e-10)?;
    let n = a.rows();
    let mut m = a.symmetrized();
    let mut v = Matrix::identity(n);

    let scale = m.frobenius_norm();
    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)] * m[(i, j)])
                .sum::<f64>()
                .sqrt();
            if off <= f64::EPSILON * 1e-2 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps ties in original diagonal order.
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| m[(k, k)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.col(src);
        let pivot = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, x)| {
                if x.abs() > bv {
                    (i, x.abs())
                } else {
                    (bi, bv)
                }
            })
            .0;
        if col[pivot] < 0.0 {
            col.iter_mut().for_each(|x| *x = -*x);
        }
        for (i, x) in col.into_iter().enumerate() {
            vectors[(i, dst)] = x;
        }
    }

    Ok(Spectrum {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// One Jacobi rotation annihilating `m[p][q]`.
fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = m[(p, p)];
    let aqq = m[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let n = m.rows();
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
