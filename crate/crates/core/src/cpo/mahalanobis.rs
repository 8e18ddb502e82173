use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gaussian::{GaussianDensity, DEFAULT_COV_FLOOR};
use super::{SentenceModel, TripletBatch};
use crate::dkps::{DistanceMatrix, ModelRoster, Source};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::numeric::pairwise_sum;

/// Which outputs take part in a Mahalanobis DKPS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MahalanobisSetting {
    /// Human plus the `t` sequential outputs.
    Sequential,
    /// Human plus the `t` ranked batch outputs.
    Batch,
    /// Human, sequential and batch outputs.
    Joint,
}

impl FromStr for MahalanobisSetting {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sequential" => Ok(MahalanobisSetting::Sequential),
            "batch" => Ok(MahalanobisSetting::Batch),
            "joint" => Ok(MahalanobisSetting::Joint),
            _ => Err(format!(
                "unknown setting `{s}` (expected sequential, batch or joint)"
            )),
        }
    }
}

impl fmt::Display for MahalanobisSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MahalanobisSetting::Sequential => "sequential",
            MahalanobisSetting::Batch => "batch",
            MahalanobisSetting::Joint => "joint",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Point {
    Human,
    W(usize),
    L(usize),
}

fn resolve_roster(
    roster: &ModelRoster,
    setting: MahalanobisSetting,
    t: usize,
) -> Result<Vec<Point>> {
    let (want_seq, want_batch) = match setting {
        MahalanobisSetting::Sequential => (t, 0),
        MahalanobisSetting::Batch => (0, t),
        MahalanobisSetting::Joint => (t, t),
    };
    let counts = (
        roster.count(Source::Human),
        roster.count(Source::Sequential),
        roster.count(Source::Batch),
        roster.count(Source::Other),
    );
    if counts != (1, want_seq, want_batch, 0) {
        return Err(Error::Validation(format!(
            "{setting} setting with t = {t} needs 1 human, {want_seq} sequential and {want_batch} \
             batch models; roster has {} human, {} sequential, {} batch, {} other",
            counts.0, counts.1, counts.2, counts.3
        )));
    }
    let mut seq = 0;
    Ok(roster
        .entries()
        .iter()
        .map(|e| match e.source {
            Source::Human => Point::Human,
            Source::Sequential => {
                seq += 1;
                Point::W(seq - 1)
            }
            Source::Batch => Point::L(e.rank.expect("validated roster") - 1),
            Source::Other => unreachable!("rejected above"),
        })
        .collect())
}

struct SentenceGeometry<'a> {
    batch: &'a TripletBatch,
    w: GaussianDensity,
    l: GaussianDensity,
}

impl SentenceGeometry<'_> {
    fn coords(&self, p: Point) -> &[f64] {
        match p {
            Point::Human => &self.batch.x,
            Point::W(k) => self.batch.preferred.row(k),
            Point::L(k) => self.batch.dispreferred.row(k),
        }
    }

    /// Per-sentence distance: each class uses its own covariance, and a
    /// preferred/dispreferred pair takes the larger of the two.
    fn distance(&self, a: Point, b: Point) -> Result<f64> {
        use Point::*;
        let (u, v) = (self.coords(a), self.coords(b));
        match (a, b) {
            (Human, Human) => Ok(0.0),
            (Human, W(_)) | (W(_), Human) | (W(_), W(_)) => self.w.mahalanobis(u, v),
            (Human, L(_)) | (L(_), Human) | (L(_), L(_)) => self.l.mahalanobis(u, v),
            (W(_), L(_)) | (L(_), W(_)) => {
                Ok(self.w.mahalanobis(u, v)?.max(self.l.mahalanobis(u, v)?))
            }
        }
    }
}

/// Distance matrix over the roster with entries
/// `(1/m) sqrt(Σ_x D_x(i, j)²)` built from per-sentence Mahalanobis distances.
///
/// Sequential roster entries map, in order, to the preferred samples; a
/// batch entry of rank `k` maps to the `k`-th dispreferred sample.
pub fn mahalanobis_dkps(
    models: &[SentenceModel],
    data: &[TripletBatch],
    setting: MahalanobisSetting,
    roster: &ModelRoster,
) -> Result<DistanceMatrix> {
    if data.is_empty() {
        return Err(Error::Validation("no sentences".into()));
    }
    if models.len() != data.len() {
        return Err(Error::Alignment(format!(
            "{} fitted models for {} sentences",
            models.len(),
            data.len()
        )));
    }
    let by_id: HashMap<&str, &SentenceModel> =
        models.iter().map(|m| (m.sentence_id.as_str(), m)).collect();
    let t = data[0].t();
    let mut geoms = Vec::with_capacity(data.len());
    for batch in data {
        batch.validate()?;
        if batch.t() != t {
            return Err(Error::Validation(format!(
                "sentence `{}` has t = {}, expected {t}",
                batch.sentence_id,
                batch.t()
            )));
        }
        let sm = by_id.get(batch.sentence_id.as_str()).ok_or_else(|| {
            Error::Alignment(format!(
                "no fitted model for sentence `{}`",
                batch.sentence_id
            ))
        })?;
        let m = &sm.model;
        if m.dim() != batch.dim() {
            return Err(Error::Dimension(format!(
                "sentence `{}`: model dimension {} vs data dimension {}",
                batch.sentence_id,
                m.dim(),
                batch.dim()
            )));
        }
        geoms.push(SentenceGeometry {
            batch,
            w: GaussianDensity::with_floor(&m.mu_w, &m.sigma_w, DEFAULT_COV_FLOOR)?,
            l: GaussianDensity::with_floor(&m.mu_l, &m.sigma_l, DEFAULT_COV_FLOOR)?,
        });
    }
    let points = resolve_roster(roster, setting, t)?;
    let n = points.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let sq = geoms
                .iter()
                .map(|g| g.distance(points[i], points[j]).map(|d| d * d))
                .collect::<Result<Vec<f64>>>()?;
            Ok(pairwise_sum(&sq).sqrt() / data.len() as f64)
        })
        .collect::<Result<_>>()?;
    let mut d = Matrix::zeros(n, n);
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        d[(i, j)] = v;
        d[(j, i)] = v;
    }
    let labels = roster
        .entries()
        .iter()
        .map(|e| e.model_id.clone())
        .collect();
    DistanceMatrix::new(labels, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpo::GaussianPairModel;
    use crate::dkps::{distance_matrix, ModelSummary, RosterEntry};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn roster(t: usize, seq: bool, batch: bool) -> ModelRoster {
        let mut e = vec![RosterEntry {
            model_id: "H".into(),
            source: Source::Human,
            rank: None,
        }];
        if seq {
            e.extend((1..=t).map(|k| RosterEntry {
                model_id: format!("seq{k:02}"),
                source: Source::Sequential,
                rank: None,
            }));
        }
        if batch {
            e.extend((1..=t).map(|k| RosterEntry {
                model_id: format!("batch{k:02}"),
                source: Source::Batch,
                rank: Some(k),
            }));
        }
        ModelRoster::new(e).unwrap()
    }

    fn scalar_model(id: &str, sw: f64, sl: f64) -> SentenceModel {
        SentenceModel {
            sentence_id: id.into(),
            model: GaussianPairModel {
                mu_w: vec![0.0],
                sigma_w: Matrix::from_diag(&[sw]),
                mu_l: vec![0.0],
                sigma_l: Matrix::from_diag(&[sl]),
            },
        }
    }

    fn scalar_batch(id: &str, x: f64, w: [f64; 2], l: [f64; 2]) -> TripletBatch {
        TripletBatch::new(
            id,
            vec![x],
            Matrix::from_vec(2, 1, w.to_vec()).unwrap(),
            Matrix::from_vec(2, 1, l.to_vec()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn hand_expanded_joint_case() {
        let data = vec![
            scalar_batch("a", 0.0, [1.0, 3.0], [2.0, 6.0]),
            scalar_batch("b", 1.0, [1.0, 2.0], [-1.0, 5.0]),
        ];
        let models = vec![scalar_model("b", 4.0, 1.0), scalar_model("a", 1.0, 4.0)];
        let d = mahalanobis_dkps(
            &models,
            &data,
            MahalanobisSetting::Joint,
            &roster(2, true, true),
        )
        .unwrap();
        // Order: H, seq01, seq02, batch01, batch02.
        // H-seq01: a: |0-1|/1 = 1, b: |1-1|/2 = 0.
        assert!((d.get(0, 1) - 0.5).abs() < 1e-12);
        // seq01-seq02: a: 2/1, b: 1/2.
        assert!((d.get(1, 2) - 0.5 * 4.25f64.sqrt()).abs() < 1e-12);
        // H-batch02: a: 6/2 = 3, b: 4/1 = 4.
        assert!((d.get(0, 4) - 2.5).abs() < 1e-12);
        // batch01-batch02: a: 4/2 = 2, b: 6/1 = 6.
        assert!((d.get(3, 4) - 10f64.sqrt()).abs() < 1e-12);
        // seq01-batch02, max branch: a: max(5/1, 5/2) = 5, b: max(4/2, 4/1) = 4.
        assert!((d.get(1, 4) - 0.5 * 41f64.sqrt()).abs() < 1e-12);
        assert!((d.get(4, 1) - d.get(1, 4)).abs() == 0.0);
        // seq02-batch01: a: max(1/1, 1/2) = 1, b: max(3/2, 3/1) = 3.
        assert!((d.get(2, 3) - 0.5 * 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identity_covariances_reduce_to_euclidean() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (m, t, q) = (7, 4, 3);
        let mut data = Vec::new();
        let mut models = Vec::new();
        for s in 0..m {
            let mut draw = |n| {
                (0..n)
                    .map(|_| rng.random_range(-2.0..2.0))
                    .collect::<Vec<f64>>()
            };
            data.push(
                TripletBatch::new(
                    format!("s{s}"),
                    draw(q),
                    Matrix::from_vec(t, q, draw(t * q)).unwrap(),
                    Matrix::from_vec(t, q, draw(t * q)).unwrap(),
                )
                .unwrap(),
            );
            models.push(SentenceModel {
                sentence_id: format!("s{s}"),
                model: GaussianPairModel {
                    mu_w: vec![0.0; q],
                    sigma_w: Matrix::identity(q),
                    mu_l: vec![0.0; q],
                    sigma_l: Matrix::identity(q),
                },
            });
        }
        for (setting, r) in [
            (MahalanobisSetting::Sequential, roster(t, true, false)),
            (MahalanobisSetting::Batch, roster(t, false, true)),
            (MahalanobisSetting::Joint, roster(t, true, true)),
        ] {
            let md = mahalanobis_dkps(&models, &data, setting, &r).unwrap();
            let points = resolve_roster(&r, setting, t).unwrap();
            let summaries: Vec<ModelSummary> = r
                .entries()
                .iter()
                .zip(&points)
                .map(|(e, &p)| {
                    let rows: Vec<Vec<f64>> = data
                        .iter()
                        .map(|b| match p {
                            Point::Human => b.x.clone(),
                            Point::W(k) => b.preferred.row(k).to_vec(),
                            Point::L(k) => b.dispreferred.row(k).to_vec(),
                        })
                        .collect();
                    ModelSummary {
                        model_id: e.model_id.clone(),
                        x: Matrix::from_rows(&rows).unwrap(),
                    }
                })
                .collect();
            let ed = distance_matrix(&summaries).unwrap();
            assert!(md.matrix().sub(ed.matrix()).unwrap().max_abs() < 1e-10);
        }
    }

    #[test]
    fn roster_and_alignment_errors() {
        let data = vec![scalar_batch("a", 0.0, [1.0, 3.0], [2.0, 6.0])];
        let models = vec![scalar_model("a", 1.0, 1.0)];
        assert!(matches!(
            mahalanobis_dkps(
                &models,
                &data,
                MahalanobisSetting::Joint,
                &roster(2, true, false)
            ),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            mahalanobis_dkps(
                &models,
                &data,
                MahalanobisSetting::Sequential,
                &roster(3, true, false)
            ),
            Err(Error::Validation(_))
        ));
        let other = vec![scalar_model("z", 1.0, 1.0)];
        assert!(matches!(
            mahalanobis_dkps(
                &other,
                &data,
                MahalanobisSetting::Sequential,
                &roster(2, true, false)
            ),
            Err(Error::Alignment(_))
        ));
        let singular = vec![scalar_model("a", 0.0, 1.0)];
        assert!(matches!(
            mahalanobis_dkps(
                &singular,
                &data,
                MahalanobisSetting::Batch,
                &roster(2, false, true)
            ),
            Err(Error::Conditioning(_))
        ));
    }

    #[test]
    fn setting_parse() {
        for s in ["sequential", "batch", "joint"] {
            assert_eq!(s.parse::<MahalanobisSetting>().unwrap().to_string(), s);
        }
        assert!("both".parse::<MahalanobisSetting>().is_err());
    }
}
