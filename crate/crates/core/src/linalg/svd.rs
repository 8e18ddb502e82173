use super::{dot, Matrix};

/// Thin SVD `A = U diag(s) Vᵀ` of a small matrix with `rows >= cols`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Columns of `U` belonging to zero singular values are completed to an
/// orthonormal set, so `U` always has orthonormal columns.
pub fn svd_small(a: &Matrix) -> Svd {
    let (m, n) = a.shape();
    assert!(m >= n, "svd_small expects rows >= cols");
    // Work column-major: w[j] is column j.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for cols in [&mut w, &mut v] {
                    let (lo, hi) = cols.split_at_mut(q);
                    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        let (xp, yq) = (*x, *y);
                        *x = c * xp - s * yq;
                        *y = s * xp + c * yq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let smax = norms.iter().cloned().fold(0.0, f64::max);
    let tol = smax * f64::EPSILON * m as f64;

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut singular_values = Vec::with_capacity(n);
    let mut v_out = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        singular_values.push(s);
        for i in 0..n {
            v_out[(i, dst)] = v[src][i];
        }
        if s > tol {
            u_cols.push(w[src].iter().map(|x| x / s).collect());
        } else {
            u_cols.push(complete_basis(&u_cols, m));
        }
    }

    let mut u = Matrix::zeros(m, n);
    for (j, col) in u_cols.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            u[(i, j)] = x;
        }
    }
    Svd {
        u,
        singular_values,
        v: v_out,
    }
}

/// A unit vector orthogonal to every vector in `basis` (which must be
/// orthonormal and span less than the full space).
fn complete_basis(basis: &[Vec<f64>], m: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..m {
        let mut e = vec![0.0; m];
        e[k] = 1.0;
        // Two Gram-Schmidt passes.
        for _ in 0..2 {
            for b in basis {
                let proj = dot(&e, b);
                for (x, y) in e.iter_mut().zip(b) {
                    *x -= proj * y;
                }
            }
        }
        let norm = dot(&e, &e).sqrt();
        if best.as_ref().is_none_or(|(bn, _)| norm > *bn) {
            best = Some((norm, e));
        }
    }
    let (norm, e) = best.expect("m >= 1");
    e.into_iter().map(|x| x / norm).collect()
}
