use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, Cholesky, Matrix, Spectrum};

/// Smallest covariance eigenvalue admitted anywhere in the CPO code.
pub const DEFAULT_COV_FLOOR: f64 = 1e-6;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Fails unless `sigma` is symmetric with smallest eigenvalue `>= floor`.
pub fn check_covariance(sigma: &Matrix, floor: f64) -> Result<()> {
    if !sigma.is_square() {
        return Err(Error::Dimension(format!(
            "covariance is {}x{}",
            sigma.rows(),
            sigma.cols()
        )));
    }
    let spec = sym_eigen(sigma)?;
    let min = *spec.eigenvalues.last().expect("non-empty");
    // Rounding in L Lᵀ + εI scales with the largest entry.
    let slack = 1e-9 * floor + 64.0 * f64::EPSILON * sigma.max_abs();
    if min < floor - slack {
        return Err(Error::Conditioning(format!(
            "smallest covariance eigenvalue {min:e} is below the floor {floor:e}"
        )));
    }
    Ok(())
}

/// Clamps every eigenvalue of a symmetric matrix to at least `floor`.
pub fn floor_covariance(sigma: &Matrix, floor: f64) -> Result<Matrix> {
    let spec = sym_eigen(sigma)?;
    if spec.eigenvalues.iter().all(|&l| l >= floor) {
        return Ok(sigma.symmetrized());
    }
    let clamped = Spectrum {
        eigenvalues: spec.eigenvalues.iter().map(|&l| l.max(floor)).collect(),
        eigenvectors: spec.eigenvectors,
    };
    Ok(clamped.reconstruct().symmetrized())
}

/// A Gaussian with its covariance factorized once for repeated evaluation.
#[derive(Debug, Clone)]
pub struct GaussianDensity {
    mean: Vec<f64>,
    chol: Cholesky,
    log_norm: f64,
}

impl GaussianDensity {
    /// Factorizes `sigma`; only positive definiteness is required.
    pub fn new(mean: &[f64], sigma: &Matrix) -> Result<Self> {
        if sigma.rows() != mean.len() || !sigma.is_square() {
            return Err(Error::Dimension(format!(
                "mean of length {} with {}x{} covariance",
                mean.len(),
                sigma.rows(),
                sigma.cols()
            )));
        }
        let chol = Cholesky::new(&sigma.symmetrized())?;
        let q = mean.len() as f64;
        let log_norm = -0.5 * (q * LN_2PI + chol.log_det());
        Ok(GaussianDensity {
            mean: mean.to_vec(),
            chol,
            log_norm,
        })
    }

    /// Like [`GaussianDensity::new`] but also enforces the eigenvalue floor.
    pub fn with_floor(mean: &[f64], sigma: &Matrix, floor: f64) -> Result<Self> {
        check_covariance(sigma, floor)?;
        Self::new(mean, sigma)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    fn residual(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.mean.len() {
            return Err(Error::Dimension(format!(
                "point of dimension {} against a {}-dimensional Gaussian",
                y.len(),
                self.mean.len()
            )));
        }
        Ok(y.iter().zip(&self.mean).map(|(a, b)| a - b).collect())
    }

    pub fn log_pdf(&self, y: &[f64]) -> Result<f64> {
        let r = self.residual(y)?;
        Ok(self.log_norm - 0.5 * self.chol.quad_form_inv(&r))
    }

    /// Log-density and `Σ⁻¹ (y - μ)`.
    pub(crate) fn log_pdf_and_whitened(&self, y: &[f64]) -> (f64, Vec<f64>) {
        let r: Vec<f64> = y.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        let alpha = self.chol.solve(&r);
        let quad: f64 = r.iter().zip(&alpha).map(|(a, b)| a * b).sum();
        (self.log_norm - 0.5 * quad, alpha)
    }

    /// `sqrt((u - v)ᵀ Σ⁻¹ (u - v))` under this density's covariance.
    pub fn mahalanobis(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        if u.len() != self.dim() || v.len() != self.dim() {
            return Err(Error::Dimension(
                "mahalanobis operands differ in dimension".into(),
            ));
        }
        let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        Ok(self.chol.quad_form_inv(&diff).sqrt())
    }
}

/// Multivariate normal log-density; `sigma` must clear [`DEFAULT_COV_FLOOR`].
pub fn gaussian_logpdf(y: &[f64], mu: &[f64], sigma: &Matrix) -> Result<f64> {
    GaussianDensity::with_floor(mu, sigma, DEFAULT_COV_FLOOR)?.log_pdf(y)
}

/// Log-density for any positive definite `sigma`, without the floor check.
pub fn gaussian_logpdf_unchecked(y: &[f64], mu: &[f64], sigma: &Matrix) -> Result<f64> {
    GaussianDensity::new(mu, sigma)?.log_pdf(y)
}

/// `sqrt((u - v)ᵀ Σ⁻¹ (u - v))`; `sigma` must clear [`DEFAULT_COV_FLOOR`].
pub fn mahalanobis(u: &[f64], v: &[f64], sigma: &Matrix) -> Result<f64> {
    GaussianDensity::with_floor(u, sigma, DEFAULT_COV_FLOOR)?.mahalanobis(u, v)
}
