use serde::{Deserialize, Serialize};

use super::gaussian::GaussianDensity;
use super::{CpoConfig, GaussianPairModel, Pairing, TripletBatch};
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, Cholesky, Matrix, Spectrum};
use crate::numeric::{log_sigmoid, pairwise_sum, sigmoid, softplus, softplus_inv};

/// Preference penalty for one pair and its derivative in `delta`:
/// `-ln σ(β Δ)` and `-β σ(-β Δ)`.
///
/// This is the only place the preference link appears; the optimizer and
/// gradient code go through it.
pub fn preference_term(beta: f64, delta: f64) -> (f64, f64) {
    let z = beta * delta;
    (-log_sigmoid(z), -beta * sigmoid(-z))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpoLossTerms {
    pub prefer: f64,
    pub nll: f64,
    pub total: f64,
}

/// `L_prefer + L_NLL` for fixed parameters.
pub fn cpo_loss(model: &GaussianPairModel, batch: &TripletBatch, cfg: &CpoConfig) -> Result<f64> {
    Ok(cpo_loss_terms(model, batch, cfg)?.total)
}

pub fn cpo_loss_terms(
    model: &GaussianPairModel,
    batch: &TripletBatch,
    cfg: &CpoConfig,
) -> Result<CpoLossTerms> {
    batch.validate()?;
    if model.dim() != batch.dim() {
        return Err(Error::Dimension(format!(
            "model dimension {} vs batch dimension {}",
            model.dim(),
            batch.dim()
        )));
    }
    let fw = GaussianDensity::with_floor(&model.mu_w, &model.sigma_w, cfg.cov_floor)?;
    let fl = GaussianDensity::with_floor(&model.mu_l, &model.sigma_l, cfg.cov_floor)?;
    let lw = log_densities(&fw, &batch.preferred)?;
    let ll = log_densities(&fl, &batch.dispreferred)?;
    Ok(combine(&lw, &ll, cfg.beta, cfg.pairing).terms)
}

fn log_densities(f: &GaussianDensity, ys: &Matrix) -> Result<Vec<f64>> {
    ys.row_iter().map(|y| f.log_pdf(y)).collect()
}

struct Combined {
    terms: CpoLossTerms,
    /// `∂L/∂ log φ_w(y_w,a)` and `∂L/∂ log φ_l(y_l,b)`.
    d_lw: Vec<f64>,
    d_ll: Vec<f64>,
}

fn combine(lw: &[f64], ll: &[f64], beta: f64, pairing: Pairing) -> Combined {
    let t = lw.len();
    let pairs = pairing.pairs(t);
    let np = pairs.len() as f64;
    let mut d_lw = vec![-1.0 / t as f64; t];
    let mut d_ll = vec![0.0; t];
    let mut penalties = Vec::with_capacity(pairs.len());
    for &(a, b) in &pairs {
        let (v, dv) = preference_term(beta, lw[a] - ll[b]);
        penalties.push(v);
        d_lw[a] += dv / np;
        d_ll[b] -= dv / np;
    }
    let prefer = pairwise_sum(&penalties) / np;
    let nll = -pairwise_sum(lw) / t as f64;
    Combined {
        terms: CpoLossTerms {
            prefer,
            nll,
            total: prefer + nll,
        },
        d_lw,
        d_ll,
    }
}

/// The CPO loss as a function of an unconstrained parameter vector.
///
/// Layout: `[μ_w, L_w, μ_l, L_l]` where each `L` is the row-major lower
/// triangle of a factor with `Σ = L Lᵀ + εI` and diagonal entries stored
/// through `softplus`.
#[derive(Debug, Clone)]
pub struct CpoObjective<'a> {
    batch: &'a TripletBatch,
    beta: f64,
    pairing: Pairing,
    floor: f64,
}

impl<'a> CpoObjective<'a> {
    pub fn new(batch: &'a TripletBatch, cfg: &CpoConfig) -> Result<Self> {
        batch.validate()?;
        cfg.validate()?;
        Ok(CpoObjective {
            batch,
            beta: cfg.beta,
            pairing: cfg.pairing,
            floor: cfg.cov_floor,
        })
    }

    fn q(&self) -> usize {
        self.batch.dim()
    }

    fn tri(&self) -> usize {
        let q = self.q();
        q * (q + 1) / 2
    }

    fn block(&self) -> usize {
        self.q() + self.tri()
    }

    pub fn n_params(&self) -> usize {
        2 * self.block()
    }

    /// Index range of the dispreferred parameters.
    pub fn l_block(&self) -> std::ops::Range<usize> {
        self.block()..self.n_params()
    }

    /// Parameters reproducing `model` up to the factorization of `Σ - εI`.
    ///
    /// Eigenvalues of `Σ - εI` are clamped to a small positive value so a
    /// covariance sitting exactly on the floor still has a finite encoding.
    pub fn encode(&self, model: &GaussianPairModel) -> Result<Vec<f64>> {
        model.validate(self.floor)?;
        if model.dim() != self.q() {
            return Err(Error::Dimension(format!(
                "model dimension {} vs batch dimension {}",
                model.dim(),
                self.q()
            )));
        }
        let mut theta = Vec::with_capacity(self.n_params());
        for (mu, sigma) in [(&model.mu_w, &model.sigma_w), (&model.mu_l, &model.sigma_l)] {
            theta.extend_from_slice(mu);
            theta.extend(self.encode_cov(sigma)?);
        }
        Ok(theta)
    }

    fn encode_cov(&self, sigma: &Matrix) -> Result<Vec<f64>> {
        let q = self.q();
        let shifted = sigma
            .sub(&Matrix::identity(q).scale(self.floor))?
            .symmetrized();
        let spec = sym_eigen(&shifted)?;
        let min_eig = 1e-3 * self.floor;
        let a = Spectrum {
            eigenvalues: spec.eigenvalues.iter().map(|&l| l.max(min_eig)).collect(),
            eigenvectors: spec.eigenvectors,
        }
        .reconstruct()
        .symmetrized();
        let l = Cholesky::new(&a)?;
        let f = l.factor();
        let mut out = Vec::with_capacity(self.tri());
        for i in 0..q {
            for j in 0..=i {
                out.push(if i == j {
                    softplus_inv(f[(i, i)])
                } else {
                    f[(i, j)]
                });
            }
        }
        Ok(out)
    }

    fn factor(&self, packed: &[f64]) -> Matrix {
        let q = self.q();
        let mut l = Matrix::zeros(q, q);
        let mut k = 0;
        for i in 0..q {
            for j in 0..=i {
                l[(i, j)] = if i == j {
                    softplus(packed[k])
                } else {
                    packed[k]
                };
                k += 1;
            }
        }
        l
    }

    fn covariance(&self, packed: &[f64]) -> Matrix {
        let l = self.factor(packed);
        let mut s = l.matmul(&l.transpose()).expect("square");
        for i in 0..self.q() {
            s[(i, i)] += self.floor;
        }
        s.symmetrized()
    }

    pub fn decode(&self, theta: &[f64]) -> GaussianPairModel {
        let (q, b) = (self.q(), self.block());
        GaussianPairModel {
            mu_w: theta[..q].to_vec(),
            sigma_w: self.covariance(&theta[q..b]),
            mu_l: theta[b..b + q].to_vec(),
            sigma_l: self.covariance(&theta[b + q..]),
        }
    }

    fn check_len(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::Dimension(format!(
                "parameter vector of length {}, expected {}",
                theta.len(),
                self.n_params()
            )));
        }
        Ok(())
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        self.check_len(theta)?;
        // Same arithmetic as `value_and_grad` so line-search comparisons
        // agree with the recorded trajectory bit for bit.
        let m = self.decode(theta);
        let fw = GaussianDensity::new(&m.mu_w, &m.sigma_w)?;
        let fl = GaussianDensity::new(&m.mu_l, &m.sigma_l)?;
        let logs = |f: &GaussianDensity, ys: &Matrix| -> Vec<f64> {
            ys.row_iter().map(|y| f.log_pdf_and_whitened(y).0).collect()
        };
        let lw = logs(&fw, &self.batch.preferred);
        let ll = logs(&fl, &self.batch.dispreferred);
        Ok(combine(&lw, &ll, self.beta, self.pairing).terms.total)
    }

    pub fn value_and_grad(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_len(theta)?;
        let (q, b) = (self.q(), self.block());
        let m = self.decode(theta);
        let fw = GaussianDensity::new(&m.mu_w, &m.sigma_w)?;
        let fl = GaussianDensity::new(&m.mu_l, &m.sigma_l)?;
        let (lw, aw): (Vec<f64>, Vec<Vec<f64>>) = self
            .batch
            .preferred
            .row_iter()
            .map(|y| fw.log_pdf_and_whitened(y))
            .unzip();
        let (ll, al): (Vec<f64>, Vec<Vec<f64>>) = self
            .batch
            .dispreferred
            .row_iter()
            .map(|y| fl.log_pdf_and_whitened(y))
            .unzip();
        let c = combine(&lw, &ll, self.beta, self.pairing);
        let mut grad = Vec::with_capacity(self.n_params());
        grad.extend(self.class_grad(&fw, &theta[q..b], &aw, &c.d_lw));
        grad.extend(self.class_grad(&fl, &theta[b + q..], &al, &c.d_ll));
        Ok((c.terms.total, grad))
    }

    /// Chain rule from per-sample log-density weights to `[μ, packed L]`.
    ///
    /// `∂ ln φ/∂μ = α`, `∂ ln φ/∂Σ = ½(ααᵀ - Σ⁻¹)` with `α = Σ⁻¹(y - μ)`,
    /// and `∂/∂L = 2 G L` for symmetric `G = ∂/∂Σ`.
    fn class_grad(
        &self,
        f: &GaussianDensity,
        packed: &[f64],
        alphas: &[Vec<f64>],
        weights: &[f64],
    ) -> Vec<f64> {
        let q = self.q();
        let mut g_mu = vec![0.0; q];
        let mut g_sigma = Matrix::zeros(q, q);
        for (alpha, &w) in alphas.iter().zip(weights) {
            for i in 0..q {
                g_mu[i] += w * alpha[i];
                for j in 0..q {
                    g_sigma[(i, j)] += 0.5 * w * alpha[i] * alpha[j];
                }
            }
        }
        let inv = f.cholesky().inverse();
        let w_sum: f64 = weights.iter().sum();
        for i in 0..q {
            for j in 0..q {
                g_sigma[(i, j)] -= 0.5 * w_sum * inv[(i, j)];
            }
        }
        let l = self.factor(packed);
        let g_l = g_sigma.matmul(&l).expect("square").scale(2.0);
        let mut out = g_mu;
        let mut k = 0;
        for i in 0..q {
            for j in 0..=i {
                out.push(if i == j {
                    g_l[(i, i)] * sigmoid(packed[k])
                } else {
                    g_l[(i, j)]
                });
                k += 1;
            }
        }
        out
    }
}
