//! Scree elbow by profile likelihood (Zhu & Ghodsi).
//!
//! For each split `q` the sorted values are modelled as two Gaussian groups,
//! `values[..q]` and `values[q..]`, with separate means and a pooled variance
//! `σ² = (SS₁ + SS₂) / (p - 1 - [q < p])`. The elbow is the `q` with the
//! largest log-likelihood; a zero pooled scatter counts as +∞, and ties go to
//! the smaller `q`.

use crate::error::{Error, Result};

fn validate(values: &[f64]) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::Validation(format!(
            "elbow detection needs at least 2 values, got {}",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Validation(format!(
            "eigenvalues must be finite and nonnegative, found {v}"
        )));
    }
    if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::Validation(format!(
            "eigenvalues must be non-increasing (index {} -> {})",
            i,
            i + 1
        )));
    }
    Ok(())
}

/// Running mean and scatter (Welford).
#[derive(Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    ss: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.ss += delta * (x - self.mean);
    }
}

/// Profile log-likelihood for every split `q = 1..=p` (entry `q-1`).
pub fn profile_log_likelihood(values: &[f64]) -> Result<Vec<f64>> {
    validate(values)?;
    let p = values.len();

    let mut head = Vec::with_capacity(p);
    let mut acc = Moments::default();
    for &v in values {
        acc.push(v);
        head.push(acc.ss);
    }
    // tail[q] = scatter of values[q..]
    let mut tail = vec![0.0; p + 1];
    let mut acc = Moments::default();
    for q in (0..p).rev() {
        acc.push(values[q]);
        tail[q] = acc.ss;
    }

    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    Ok((1..=p)
        .map(|q| {
            let ss = (head[q - 1] + tail[q]).max(0.0);
            if ss == 0.0 {
                return f64::INFINITY;
            }
            let dof = (p - 1 - usize::from(q < p)) as f64;
            let var = ss / dof;
            -0.5 * p as f64 * (ln2pi + var.ln()) - ss / (2.0 * var)
        })
        .collect())
}

/// 1-based index of the scree elbow of a non-increasing, nonnegative list.
pub fn detect_elbow(eigenvalues: &[f64]) -> Result<usize> {
    let ll = profile_log_likelihood(eigenvalues)?;
    let mut best = 0;
    for (i, &v) in ll.iter().enumerate() {
        if v > ll[best] {
            best = i;
        }
    }
    Ok(best + 1)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive split search evaluating every Gaussian log-density directly.
    pub(crate) fn brute_force_elbow(values: &[f64]) -> usize {
        let p = values.len();
        let mut best_q = 0;
        let mut best_ll = f64::NEG_INFINITY;
        for q in 1..=p {
            let (a, b) = values.split_at(q);
            let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
            let ma = mean(a);
            let mb = if b.is_empty() { 0.0 } else { mean(b) };
            let ss: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>()
                + b.iter().map(|x| (x - mb).powi(2)).sum::<f64>();
            let ll = if ss == 0.0 {
                f64::INFINITY
            } else {
                let var = ss / (p - 1 - usize::from(q < p)) as f64;
                let logpdf = |x: f64, m: f64| {
                    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - m).powi(2) / (2.0 * var)
                };
                a.iter().map(|&x| logpdf(x, ma)).sum::<f64>()
                    + b.iter().map(|&x| logpdf(x, mb)).sum::<f64>()
            };
            if ll > best_ll {
                best_ll = ll;
                best_q = q;
            }
        }
        best_q
    }

    #[test]
    fn two_dominant_values() {
        let v = [10.0, 9.5, 0.1, 0.09, 0.08];
        assert_eq!(brute_force_elbow(&v), 2);
        assert_eq!(detect_elbow(&v).unwrap(), 2);
    }

    #[test]
    fn single_dominant_value() {
        assert_eq!(detect_elbow(&[5.0, 0.0, 0.0, 0.0]).unwrap(), 1);
    }

    #[test]
    fn geometric_decay_matches_oracle() {
        let v: Vec<f64> = (0..10).map(|k| 0.5f64.powi(k)).collect();
        assert_eq!(detect_elbow(&v).unwrap(), brute_force_elbow(&v));
    }

    #[test]
    fn random_lists_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let len = rng.random_range(2..=100);
            let mut v: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..10.0)).collect();
            v.sort_by(|a, b| b.total_cmp(a));
            assert_eq!(detect_elbow(&v).unwrap(), brute_force_elbow(&v), "{v:?}");
        }
    }

    #[test]
    fn rejects_bad_lists() {
        assert!(detect_elbow(&[]).is_err());
        assert!(detect_elbow(&[1.0]).is_err());
        assert!(detect_elbow(&[1.0, 2.0]).is_err());
        assert!(detect_elbow(&[1.0, -1.0]).is_err());
    }
}
