//! Contrastive preference optimization over per-sentence Gaussian pair
//! models, its MLE baseline, and Mahalanobis-distance DKPS.

mod fit;
mod gaussian;
mod loss;
mod mahalanobis;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{BiasVarianceRecord, QueryMeta};
use crate::linalg::Matrix;

pub use fit::{cpo_fit, cpo_fit_all, mle_fit, CpoFitResult, CpoInit, StopReason};
pub use gaussian::{
    check_covariance, floor_covariance, gaussian_logpdf, gaussian_logpdf_unchecked, mahalanobis,
    GaussianDensity, DEFAULT_COV_FLOOR,
};
pub use loss::{cpo_loss, cpo_loss_terms, preference_term, CpoLossTerms, CpoObjective};
pub use mahalanobis::{mahalanobis_dkps, MahalanobisSetting};

/// One sentence: reference `x`, `t` preferred and `t` dispreferred samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletBatch {
    pub sentence_id: String,
    pub x: Vec<f64>,
    /// `t x q`, sequential outputs.
    pub preferred: Matrix,
    /// `t x q`, batch outputs in rank order.
    pub dispreferred: Matrix,
}

impl TripletBatch {
    pub fn new(
        sentence_id: impl Into<String>,
        x: Vec<f64>,
        preferred: Matrix,
        dispreferred: Matrix,
    ) -> Result<Self> {
        let b = TripletBatch {
            sentence_id: sentence_id.into(),
            x,
            preferred,
            dispreferred,
        };
        b.validate()?;
        Ok(b)
    }

    /// Checks shared dimension, `t >= 2` and finiteness.
    pub fn validate(&self) -> Result<()> {
        let q = self.x.len();
        if q == 0 {
            return Err(Error::Validation(format!(
                "sentence `{}` has empty x",
                self.sentence_id
            )));
        }
        if self.preferred.cols() != q || self.dispreferred.cols() != q {
            return Err(Error::Dimension(format!(
                "sentence `{}`: x has dimension {q}, samples have {} and {}",
                self.sentence_id,
                self.preferred.cols(),
                self.dispreferred.cols()
            )));
        }
        let t = self.preferred.rows();
        if t < 2 || self.dispreferred.rows() != t {
            return Err(Error::Validation(format!(
                "sentence `{}` needs t >= 2 preferred and t dispreferred samples, got {} and {}",
                self.sentence_id,
                t,
                self.dispreferred.rows()
            )));
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "sentence `{}` has a non-finite reference",
                self.sentence_id
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn t(&self) -> usize {
        self.preferred.rows()
    }
}

/// Gaussian parameters for the preferred (`w`) and dispreferred (`l`) class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPairModel {
    pub mu_w: Vec<f64>,
    pub sigma_w: Matrix,
    pub mu_l: Vec<f64>,
    pub sigma_l: Matrix,
}

impl GaussianPairModel {
    pub fn dim(&self) -> usize {
        self.mu_w.len()
    }

    /// Checks shapes and the covariance floor.
    pub fn validate(&self, floor: f64) -> Result<()> {
        let q = self.mu_w.len();
        if self.mu_l.len() != q || self.sigma_w.shape() != (q, q) || self.sigma_l.shape() != (q, q)
        {
            return Err(Error::Dimension(format!(
                "pair model with means of length {} and {}, covariances {:?} and {:?}",
                q,
                self.mu_l.len(),
                self.sigma_w.shape(),
                self.sigma_l.shape()
            )));
        }
        check_covariance(&self.sigma_w, floor)?;
        check_covariance(&self.sigma_l, floor)
    }
}

/// A fitted model tagged with its sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceModel {
    pub sentence_id: String,
    pub model: GaussianPairModel,
}

/// How preferred and dispreferred samples form triplets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// `k`-th preferred with `k`-th dispreferred.
    #[default]
    ByRank,
    /// All `t²` combinations.
    AllPairs,
}

impl Pairing {
    pub(crate) fn pairs(self, t: usize) -> Vec<(usize, usize)> {
        match self {
            Pairing::ByRank => (0..t).map(|k| (k, k)).collect(),
            Pairing::AllPairs => (0..t).flat_map(|a| (0..t).map(move |b| (a, b))).collect(),
        }
    }
}

impl FromStr for Pairing {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "by_rank" | "by-rank" => Ok(Pairing::ByRank),
            "all_pairs" | "all-pairs" => Ok(Pairing::AllPairs),
            _ => Err(format!(
                "unknown pairing `{s}` (expected by_rank or all_pairs)"
            )),
        }
    }
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pairing::ByRank => "by_rank",
            Pairing::AllPairs => "all_pairs",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CpoConfig {
    pub beta: f64,
    pub pairing: Pairing,
    pub max_steps: usize,
    /// First trial step of the backtracking line search.
    pub step_size: f64,
    /// Stop once the gradient norm falls below this.
    pub tolerance: f64,
    pub cov_floor: f64,
    /// Carried through to outputs; the fit itself is deterministic.
    pub seed: u64,
}

impl Default for CpoConfig {
    fn default() -> Self {
        CpoConfig {
            beta: 1.0,
            pairing: Pairing::ByRank,
            max_steps: 5000,
            step_size: 1.0,
            tolerance: 1e-8,
            cov_floor: DEFAULT_COV_FLOOR,
            seed: 0,
        }
    }
}

impl CpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::Validation(format!(
                "beta must be finite and >= 0, got {}",
                self.beta
            )));
        }
        if self.max_steps < 1 {
            return Err(Error::Validation("max_steps must be >= 1".into()));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::Validation(format!(
                "step size must be > 0, got {}",
                self.step_size
            )));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Validation(format!(
                "tolerance must be >= 0, got {}",
                self.tolerance
            )));
        }
        if !(self.cov_floor > 0.0) || !self.cov_floor.is_finite() {
            return Err(Error::Validation(format!(
                "covariance floor must be > 0, got {}",
                self.cov_floor
            )));
        }
        Ok(())
    }
}

/// Bias `‖μ_c - x‖²` and variance `tr(Σ_c)/q` for each class, per sentence.
///
/// Returns the preferred-class records followed by the dispreferred ones.
pub fn cpo_bias_variance(
    models: &[GaussianPairModel],
    batches: &[TripletBatch],
    meta: &[QueryMeta],
) -> Result<(Vec<BiasVarianceRecord>, Vec<BiasVarianceRecord>)> {
    if models.len() != batches.len() || meta.len() != batches.len() {
        return Err(Error::Alignment(format!(
            "{} models, {} batches, {} metadata rows",
            models.len(),
            batches.len(),
            meta.len()
        )));
    }
    let mut w = Vec::with_capacity(models.len());
    let mut l = Vec::with_capacity(models.len());
    for ((model, batch), info) in models.iter().zip(batches).zip(meta) {
        let q = batch.dim();
        if model.dim() != q || model.mu_l.len() != q {
            return Err(Error::Dimension(format!(
                "sentence `{}`: model dimension {} vs reference {q}",
                batch.sentence_id,
                model.dim()
            )));
        }
        let record = |mu: &[f64], sigma: &Matrix| BiasVarianceRecord {
            query_id: info.query_id.clone(),
            word_count: info.word_count,
            bias_sq: crate::linalg::sq_dist(mu, &batch.x),
            variance: sigma.trace() / q as f64,
            replicate_count: batch.t(),
        };
        w.push(record(&model.mu_w, &model.sigma_w));
        l.push(record(&model.mu_l, &model.sigma_l));
    }
    Ok((w, l))
}
