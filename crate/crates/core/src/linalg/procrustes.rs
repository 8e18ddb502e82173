use super::{svd_small, Matrix};
use crate::error::{Error, Result};

/// Orthogonal `Q` minimizing `‖a - b Q‖_F` for column-centered `a`, `b`.
pub fn orthogonal_procrustes(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "procrustes on {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    // max tr(Qᵀ bᵀa) is attained at Q = U Vᵀ for bᵀa = U S Vᵀ.
    let m = b.transpose().matmul(a)?;
    let svd = svd_small(&m);
    svd.u.matmul(&svd.v.transpose())
}

/// Residual of the best rigid alignment (translation plus orthogonal map,
/// reflections allowed) of `b` onto `a`, relative to the norm of centered `a`.
///
/// When `a` has no spread the unnormalized residual is returned.
pub fn procrustes_error(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "procrustes on {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let ac = a.centered();
    let bc = b.centered();
    let q = orthogonal_procrustes(&ac, &bc)?;
    let resid = ac.sub(&bc.matmul(&q)?)?.frobenius_norm();
    let scale = ac.frobenius_norm();
    Ok(if scale > 0.0 { resid / scale } else { resid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, k: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n * k).map(|_| rng.random_range(-1.0..1.0)).collect();
        Matrix::from_vec(n, k, v).unwrap()
    }

    #[test]
    fn self_alignment_is_zero() {
        let a = random(12, 3, 1);
        assert!(procrustes_error(&a, &a).unwrap() < 1e-14);
    }

    #[test]
    fn rotated_and_shifted_copy_is_zero() {
        let a = random(15, 2, 2);
        let mut b = a.clone();
        for i in 0..b.rows() {
            let (x, y) = (a[(i, 0)], a[(i, 1)]);
            b[(i, 0)] = -y + 3.0;
            b[(i, 1)] = x - 7.5;
        }
        assert!(procrustes_error(&a, &b).unwrap() < 1e-10);
    }

    #[test]
    fn reflection_is_free() {
        let a = random(8, 3, 3);
        let b = a.matmul(&Matrix::from_diag(&[1.0, -1.0, 1.0])).unwrap();
        assert!(procrustes_error(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn perturbation_bounds_error() {
        let a = random(20, 3, 4);
        let ac = a.centered();
        // Perturbation with zero column means, scaled to norm eps.
        let eps = 1e-3;
        let mut e = random(20, 3, 5).centered();
        let en = e.frobenius_norm();
        e = e.scale(eps / en);
        let b = a.add(&e).unwrap();
        let err = procrustes_error(&a, &b).unwrap();
        assert!(err <= eps / ac.frobenius_norm() + 1e-15, "{err}");
    }

    #[test]
    fn shape_mismatch() {
        assert!(matches!(
            procrustes_error(&Matrix::zeros(3, 2), &Matrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
    }
}
