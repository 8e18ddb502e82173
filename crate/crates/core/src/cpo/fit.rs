use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gaussian::floor_covariance;
use super::loss::CpoObjective;
use super::{CpoConfig, GaussianPairModel, SentenceModel, TripletBatch};
use crate::error::{Error, Result};
use crate::estimators::fit_gaussian;

/// Closed-form Gaussian MLE (divide by `t`) of each class, floored at `floor`.
pub fn mle_fit(batch: &TripletBatch, floor: f64) -> Result<GaussianPairModel> {
    batch.validate()?;
    let w = fit_gaussian(&batch.preferred)?;
    let l = fit_gaussian(&batch.dispreferred)?;
    Ok(GaussianPairModel {
        mu_w: w.mean,
        sigma_w: floor_covariance(&w.covariance, floor)?,
        mu_l: l.mean,
        sigma_l: floor_covariance(&l.covariance, floor)?,
    })
}

/// Starting point for [`cpo_fit`].
#[derive(Debug, Clone, PartialEq, Default)]
pub enum CpoInit {
    #[default]
    Mle,
    Model(GaussianPairModel),
}

/// Why the optimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Gradient norm fell below the tolerance.
    Converged,
    /// No step along steepest descent lowered the loss in floating point.
    NoDecrease,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpoFitResult {
    pub sentence_id: String,
    pub model: GaussianPairModel,
    pub loss: f64,
    pub grad_norm: f64,
    pub steps: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    /// Loss at the start and after every accepted step.
    pub loss_history: Vec<f64>,
}

impl CpoFitResult {
    pub fn sentence_model(&self) -> SentenceModel {
        SentenceModel {
            sentence_id: self.sentence_id.clone(),
            model: self.model.clone(),
        }
    }
}

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const MEMORY: usize = 10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two-loop recursion: `-H g` from the stored `(s, y)` pairs.
fn lbfgs_direction(g: &[f64], hist: &[(Vec<f64>, Vec<f64>, f64)]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = hist.last() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Quasi-Newton (L-BFGS) descent with Armijo backtracking on the
/// parametrization of [`CpoObjective`].
pub fn cpo_fit(batch: &TripletBatch, cfg: &CpoConfig, init: &CpoInit) -> Result<CpoFitResult> {
    let obj = CpoObjective::new(batch, cfg)?;
    let start = match init {
        CpoInit::Mle => mle_fit(batch, cfg.cov_floor)?,
        CpoInit::Model(m) => m.clone(),
    };
    let theta0 = obj.encode(&start)?;
    let mut theta = theta0.clone();
    let (mut f, mut g) = obj.value_and_grad(&theta)?;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { step: 0, loss: f });
    }
    let mut history = vec![f];
    let mut memory: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut steps = 0;
    let mut gn = dot(&g, &g).sqrt();
    let mut stalled = false;

    while steps < cfg.max_steps && gn >= cfg.tolerance {
        let mut dir = lbfgs_direction(&g, &memory);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            memory.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -gn * gn;
        }
        let mut alpha = if memory.is_empty() {
            cfg.step_size * (1.0 / gn).min(1.0)
        } else {
            cfg.step_size
        };
        let mut accepted = None;
        let mut last_bad = f64::NAN;
        let mut any_finite = false;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + alpha * d).collect();
            match obj.value(&trial) {
                Ok(ft) if ft.is_finite() => {
                    any_finite = true;
                    // Strict decrease too: on flat stretches the Armijo
                    // bound rounds to `f` and would accept standing still.
                    if ft <= f + ARMIJO_C * alpha * slope && ft < f {
                        accepted = Some(trial);
                        break;
                    }
                }
                Ok(ft) => last_bad = ft,
                Err(Error::Conditioning(_)) => {}
                Err(e) => return Err(e),
            }
            alpha *= 0.5;
        }
        let Some(next) = accepted else {
            if !any_finite {
                return Err(Error::Divergence {
                    step: steps + 1,
                    loss: last_bad,
                });
            }
            if !memory.is_empty() {
                // Retry from steepest descent before giving up.
                memory.clear();
                continue;
            }
            stalled = true;
            break;
        };
        steps += 1;
        let (f_next, g_next) = obj.value_and_grad(&next)?;
        if !f_next.is_finite() || g_next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: steps,
                loss: f_next,
            });
        }
        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if memory.len() == MEMORY {
                memory.remove(0);
            }
            memory.push((s, y, 1.0 / sy));
        }
        theta = next;
        f = f_next;
        g = g_next;
        gn = dot(&g, &g).sqrt();
        history.push(f);
    }
    let converged = gn < cfg.tolerance;
    let stop_reason = if converged {
        StopReason::Converged
    } else if stalled {
        StopReason::NoDecrease
    } else {
        StopReason::MaxSteps
    };

    let mut model = obj.decode(&theta);
    // An untouched block keeps the caller's exact matrices rather than a
    // re-factorized copy.
    let lb = obj.l_block();
    if theta[lb.clone()]
        .iter()
        .zip(&theta0[lb])
        .all(|(a, b)| a.to_bits() == b.to_bits())
    {
        model.mu_l = start.mu_l.clone();
        model.sigma_l = start.sigma_l.clone();
    }
    model.validate(cfg.cov_floor)?;
    Ok(CpoFitResult {
        sentence_id: batch.sentence_id.clone(),
        model,
        loss: f,
        grad_norm: gn,
        steps,
        converged,
        stop_reason,
        loss_history: history,
    })
}

/// Fits every sentence independently and in parallel, starting from its MLE.
pub fn cpo_fit_all(batches: &[TripletBatch], cfg: &CpoConfig) -> Result<Vec<CpoFitResult>> {
    batches
        .par_iter()
        .map(|b| cpo_fit(b, cfg, &CpoInit::Mle))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpo::{cpo_loss, Pairing, DEFAULT_COV_FLOOR};
    use crate::linalg::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian_batch(q: usize, t: usize, seed: u64) -> TripletBatch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = |s: f64, shift: f64| shift + s * rng.sample::<f64, _>(StandardNormal);
        let x = vec![0.0; q];
        let w: Vec<f64> = (0..t * q).map(|_| z(0.3, 0.05)).collect();
        let l: Vec<f64> = (0..t * q).map(|_| z(0.6, 0.2)).collect();
        TripletBatch::new(
            format!("s{seed}"),
            x,
            Matrix::from_vec(t, q, w).unwrap(),
            Matrix::from_vec(t, q, l).unwrap(),
        )
        .unwrap()
    }

    fn isotropic(q: usize) -> GaussianPairModel {
        GaussianPairModel {
            mu_w: vec![0.5; q],
            sigma_w: Matrix::identity(q),
            mu_l: vec![-0.5; q],
            sigma_l: Matrix::identity(q).scale(2.0),
        }
    }

    #[test]
    fn mle_two_points() {
        let b = TripletBatch::new(
            "s",
            vec![0.0],
            Matrix::from_vec(2, 1, vec![0.0, 2.0]).unwrap(),
            Matrix::from_vec(2, 1, vec![0.0, 2.0]).unwrap(),
        )
        .unwrap();
        let m = mle_fit(&b, DEFAULT_COV_FLOOR).unwrap();
        assert_eq!(m.mu_w, vec![1.0]);
        assert_eq!(m.sigma_w.as_slice(), &[1.0]);
        assert_eq!(m.mu_w, m.mu_l);
        assert_eq!(m.sigma_w, m.sigma_l);
    }

    #[test]
    fn mle_matches_two_pass_moments() {
        let b = gaussian_batch(3, 10, 1);
        let m = mle_fit(&b, DEFAULT_COV_FLOOR).unwrap();
        let y = &b.preferred;
        let mean: Vec<f64> = (0..3)
            .map(|c| y.col(c).iter().sum::<f64>() / 10.0)
            .collect();
        for i in 0..3 {
            assert!((m.mu_w[i] - mean[i]).abs() < 1e-12);
            for j in 0..3 {
                let s: f64 = (0..10)
                    .map(|k| (y[(k, i)] - mean[i]) * (y[(k, j)] - mean[j]))
                    .sum();
                assert!((m.sigma_w[(i, j)] - s / 10.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn beta_zero_recovers_mle_and_keeps_l() {
        for (q, seed) in [(1, 2), (3, 3), (3, 4)] {
            let b = gaussian_batch(q, 10, seed);
            let init = isotropic(q);
            let cfg = CpoConfig {
                beta: 0.0,
                ..Default::default()
            };
            let fit = cpo_fit(&b, &cfg, &CpoInit::Model(init.clone())).unwrap();
            let mle = mle_fit(&b, DEFAULT_COV_FLOOR).unwrap();
            let dmu: f64 = fit
                .model
                .mu_w
                .iter()
                .zip(&mle.mu_w)
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            assert!(dmu.sqrt() < 1e-4, "mu error {}", dmu.sqrt());
            let ds = fit
                .model
                .sigma_w
                .sub(&mle.sigma_w)
                .unwrap()
                .frobenius_norm();
            assert!(ds < 1e-4, "sigma error {ds}");
            assert_eq!(fit.model.mu_l, init.mu_l);
            assert_eq!(fit.model.sigma_l, init.sigma_l);
            // The loss is O(1), so a gradient of 1e-8 can sit below what
            // double precision resolves; stalling there is also a finish.
            assert_ne!(fit.stop_reason, StopReason::MaxSteps);
            assert!(fit.grad_norm < 1e-6, "{}", fit.grad_norm);
        }
    }

    #[test]
    fn loss_history_is_monotone() {
        for seed in 10..15 {
            let b = gaussian_batch(3, 10, seed);
            for pairing in [Pairing::ByRank, Pairing::AllPairs] {
                let cfg = CpoConfig {
                    beta: 1.0,
                    pairing,
                    max_steps: 300,
                    ..Default::default()
                };
                let fit = cpo_fit(&b, &cfg, &CpoInit::Mle).unwrap();
                assert!(fit.loss_history.windows(2).all(|w| w[1] <= w[0]));
                assert_eq!(*fit.loss_history.last().unwrap(), fit.loss);
                let direct = cpo_loss(&fit.model, &b, &cfg).unwrap();
                assert!((direct - fit.loss).abs() < 1e-8 * fit.loss.abs().max(1.0));
            }
        }
    }

    #[test]
    fn constant_preferred_collapses_to_floor() {
        let c = [0.3, -1.2];
        let b = TripletBatch::new(
            "s",
            vec![0.0, 0.0],
            Matrix::from_rows(&vec![c.to_vec(); 6]).unwrap(),
            Matrix::from_rows(
                &[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.5]]
                    .iter()
                    .cycle()
                    .take(6)
                    .cloned()
                    .collect::<Vec<_>>(),
            )
            .unwrap(),
        )
        .unwrap();
        let cfg = CpoConfig {
            beta: 0.0,
            ..Default::default()
        };
        let fit = cpo_fit(&b, &cfg, &CpoInit::Model(isotropic(2))).unwrap();
        for (m, ci) in fit.model.mu_w.iter().zip(&c) {
            assert!((m - ci).abs() < 1e-6);
        }
        let excess = fit
            .model
            .sigma_w
            .sub(&Matrix::identity(2).scale(DEFAULT_COV_FLOOR))
            .unwrap()
            .max_abs();
        assert!(excess < 1e-5, "{excess}");
        assert!(fit.model.validate(DEFAULT_COV_FLOOR).is_ok());
    }

    #[test]
    fn beta_one_inflates_sigma_l() {
        let mut inflated = 0;
        for seed in 20..40 {
            let b = gaussian_batch(3, 10, seed);
            let cfg = CpoConfig {
                beta: 1.0,
                ..Default::default()
            };
            let fit = cpo_fit(&b, &cfg, &CpoInit::Mle).unwrap();
            let mle = mle_fit(&b, cfg.cov_floor).unwrap();
            if fit.model.sigma_l.trace() >= mle.sigma_l.trace() {
                inflated += 1;
            }
        }
        assert!(inflated >= 19, "{inflated}/20");
    }

    #[test]
    fn deterministic_and_parallel_agree() {
        let batches: Vec<_> = (50..54).map(|s| gaussian_batch(1, 10, s)).collect();
        let cfg = CpoConfig {
            max_steps: 200,
            ..Default::default()
        };
        let all = cpo_fit_all(&batches, &cfg).unwrap();
        for (b, r) in batches.iter().zip(&all) {
            assert_eq!(r, &cpo_fit(b, &cfg, &CpoInit::Mle).unwrap());
        }
    }

    #[test]
    fn invalid_init_is_rejected() {
        let b = gaussian_batch(2, 4, 60);
        let mut bad = isotropic(2);
        bad.sigma_w = Matrix::zeros(2, 2);
        assert!(matches!(
            cpo_fit(&b, &CpoConfig::default(), &CpoInit::Model(bad)),
            Err(Error::Conditioning(_))
        ));
    }
}
