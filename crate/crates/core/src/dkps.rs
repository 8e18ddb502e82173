//! Model summaries, mean-discrepancy distances and perspective spaces.
//!
//! A model is queried `m` times; each query yields `r` embedded replicates in
//! `ℝ^p`. The summary of a model is the `m x p` matrix of per-query replicate
//! means, and the distance between two models is `‖X_i - X_j‖_F / m`.
//! Classical MDS of that distance matrix places the models in a perspective
//! space.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{classical_mds, detect_elbow, mds, Matrix};
use crate::numeric::pairwise_sum;

/// Embedded replicates of one model: `m * r` rows grouped by query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSet {
    pub model_id: String,
    replicates_per_query: usize,
    data: Matrix,
}

impl ReplicateSet {
    pub fn new(
        model_id: impl Into<String>,
        replicates_per_query: usize,
        data: Matrix,
    ) -> Result<Self> {
        let model_id = model_id.into();
        if replicates_per_query == 0 {
            return Err(Error::Validation(format!(
                "model `{model_id}`: replicates_per_query must be >= 1"
            )));
        }
        if !data.rows().is_multiple_of(replicates_per_query) {
            return Err(Error::Validation(format!(
                "model `{model_id}`: {} rows is not a multiple of r = {replicates_per_query}",
                data.rows()
            )));
        }
        Ok(ReplicateSet {
            model_id,
            replicates_per_query,
            data,
        })
    }

    pub fn query_count(&self) -> usize {
        self.data.rows() / self.replicates_per_query
    }

    pub fn embed_dim(&self) -> usize {
        self.data.cols()
    }

    pub fn replicates_per_query(&self) -> usize {
        self.replicates_per_query
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    /// The `r x p` block of replicates for query `j`.
    pub fn block(&self, j: usize) -> Matrix {
        let r = self.replicates_per_query;
        let idx: Vec<usize> = (j * r..(j + 1) * r).collect();
        self.data.select_rows(&idx)
    }
}

/// Per-query replicate means of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model_id: String,
    pub x: Matrix,
}

/// Symmetric, zero-diagonal, nonnegative matrix of distances between labelled models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    d: Matrix,
}

impl DistanceMatrix {
    pub fn new(labels: Vec<String>, d: Matrix) -> Result<Self> {
        if labels.len() != d.rows() {
            return Err(Error::Dimension(format!(
                "{} labels for a {}x{} distance matrix",
                labels.len(),
                d.rows(),
                d.cols()
            )));
        }
        mds::validate_distances(&d)?;
        Ok(DistanceMatrix { labels, d })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &Matrix {
        &self.d
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[(i, j)]
    }
}

/// MDS coordinates of a model population.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerspectiveSpace {
    pub labels: Vec<String>,
    pub coords: Matrix,
    /// Eigenvalues of the doubly centered Gram matrix, descending.
    pub spectrum: Vec<f64>,
    pub clipped_negative_mass: f64,
    pub clipped: bool,
    /// Elbow of the clipped spectrum (1-based), whether or not it chose `dim`.
    pub elbow: usize,
}

impl PerspectiveSpace {
    pub fn dim(&self) -> usize {
        self.coords.cols()
    }
}

/// Embedding dimension: fixed, or the scree elbow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Dim {
    #[default]
    Auto,
    Fixed(usize),
}

impl FromStr for Dim {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Dim::Auto);
        }
        s.parse::<usize>()
            .map(Dim::Fixed)
            .map_err(|_| format!("expected `auto` or a positive integer, got `{s}`"))
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dim::Auto => f.write_str("auto"),
            Dim::Fixed(d) => write!(f, "{d}"),
        }
    }
}

/// Replicate mean per query, summed in a fixed pairwise order.
pub fn summarize(rs: &ReplicateSet) -> Result<ModelSummary> {
    let r = rs.replicates_per_query;
    let (m, p) = (rs.query_count(), rs.embed_dim());
    if m == 0 {
        return Err(Error::Validation(format!(
            "model `{}` has no replicates",
            rs.model_id
        )));
    }
    let mut x = Matrix::zeros(m, p);
    let mut column = vec![0.0; r];
    for j in 0..m {
        for c in 0..p {
            for (k, slot) in column.iter_mut().enumerate() {
                *slot = rs.data[(j * r + k, c)];
            }
            x[(j, c)] = pairwise_sum(&column) / r as f64;
        }
    }
    Ok(ModelSummary {
        model_id: rs.model_id.clone(),
        x,
    })
}

fn frobenius_gap(a: &Matrix, b: &Matrix) -> f64 {
    let sq: Vec<f64> = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .collect();
    pairwise_sum(&sq).sqrt()
}

/// `D[i,j] = ‖X_i - X_j‖_F / m` over all pairs of summaries.
///
/// Entries are computed independently (possibly in parallel), each with a
/// fixed reduction order, so the result does not depend on scheduling.
pub fn distance_matrix(summaries: &[ModelSummary]) -> Result<DistanceMatrix> {
    let labels: Vec<String> = summaries.iter().map(|s| s.model_id.clone()).collect();
    let mats: Vec<&Matrix> = summaries.iter().map(|s| &s.x).collect();
    distance_from_matrices(labels, &mats)
}

pub(crate) fn distance_from_matrices(
    labels: Vec<String>,
    mats: &[&Matrix],
) -> Result<DistanceMatrix> {
    let n = mats.len();
    if n < 2 {
        return Err(Error::Validation(format!(
            "need at least 2 models, got {n}"
        )));
    }
    let shape = mats[0].shape();
    if let Some((i, m)) = mats.iter().enumerate().find(|(_, m)| m.shape() != shape) {
        return Err(Error::Dimension(format!(
            "summary `{}` is {:?}, expected {:?}",
            labels[i],
            m.shape(),
            shape
        )));
    }
    let m = shape.0 as f64;
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| frobenius_gap(mats[i], mats[j]) / m)
        .collect();
    let mut d = Matrix::zeros(n, n);
    for (&(i, j), v) in pairs.iter().zip(values) {
        d[(i, j)] = v;
        d[(j, i)] = v;
    }
    DistanceMatrix::new(labels, d)
}

/// Classical MDS of a distance matrix, with `Dim::Auto` resolved by the scree
/// elbow (clamped to `[1, n-1]`).
pub fn perspective_space(d: &DistanceMatrix, dim: Dim) -> Result<PerspectiveSpace> {
    let n = d.len();
    if n < 2 {
        return Err(Error::Validation(
            "perspective space needs at least 2 models".into(),
        ));
    }
    // A throwaway 1-d fit gives the spectrum for elbow detection.
    let probe = classical_mds(d.matrix(), 1)?;
    let clipped: Vec<f64> = probe.spectrum.iter().map(|&l| l.max(0.0)).collect();
    let elbow = detect_elbow(&clipped)?;
    let k = match dim {
        Dim::Auto => elbow.clamp(1, n - 1),
        Dim::Fixed(k) => k,
    };
    let emb = if k == 1 {
        probe
    } else {
        classical_mds(d.matrix(), k)?
    };
    Ok(PerspectiveSpace {
        labels: d.labels().to_vec(),
        coords: emb.coords,
        spectrum: emb.spectrum,
        clipped_negative_mass: emb.clipped_negative_mass,
        clipped: emb.clipped,
        elbow,
    })
}

/// Distances and perspective space of the true model means.
pub fn true_perspective(
    labels: Vec<String>,
    means: &[Matrix],
    dim: Dim,
) -> Result<(DistanceMatrix, PerspectiveSpace)> {
    if labels.len() != means.len() {
        return Err(Error::Dimension(format!(
            "{} labels for {} mean matrices",
            labels.len(),
            means.len()
        )));
    }
    let refs: Vec<&Matrix> = means.iter().collect();
    let delta = distance_from_matrices(labels, &refs)?;
    let psi = perspective_space(&delta, dim)?;
    Ok((delta, psi))
}

/// Where a model's outputs come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Human,
    Sequential,
    Batch,
    Other,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Human => "human",
            Source::Sequential => "sequential",
            Source::Batch => "batch",
            Source::Other => "other",
        })
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "human" => Ok(Source::Human),
            "sequential" => Ok(Source::Sequential),
            "batch" => Ok(Source::Batch),
            "other" => Ok(Source::Other),
            _ => Err(format!("unknown source `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub model_id: String,
    pub source: Source,
    pub rank: Option<usize>,
}

/// Ordered list of models with their provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRoster {
    entries: Vec<RosterEntry>,
}

impl ModelRoster {
    /// Checks unique ids and that batch ranks are exactly `1..=t`.
    pub fn new(entries: Vec<RosterEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.model_id.as_str()) {
                return Err(Error::DuplicateId(e.model_id.clone()));
            }
        }
        let mut ranks: Vec<usize> = Vec::new();
        for e in entries.iter().filter(|e| e.source == Source::Batch) {
            match e.rank {
                Some(r) => ranks.push(r),
                None => {
                    return Err(Error::Validation(format!(
                        "batch model `{}` has no rank",
                        e.model_id
                    )))
                }
            }
        }
        ranks.sort_unstable();
        if ranks.iter().enumerate().any(|(i, &r)| r != i + 1) {
            return Err(Error::Validation(format!(
                "batch ranks must be 1..={}, got {ranks:?}",
                ranks.len()
            )));
        }
        Ok(ModelRoster { entries })
    }

    pub fn entries(&self) -> &[RosterEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, source: Source) -> usize {
        self.entries.iter().filter(|e| e.source == source).count()
    }

    /// Display label: humans `H` (or `H1`, `H2`, ... when several), batch
    /// models their rank, sequential models their position among sequential
    /// models.
    pub fn display_labels(&self) -> Vec<String> {
        let humans = self.count(Source::Human);
        let (mut h, mut s) = (0, 0);
        self.entries
            .iter()
            .map(|e| match e.source {
                Source::Human => {
                    h += 1;
                    if humans == 1 {
                        "H".to_string()
                    } else {
                        format!("H{h}")
                    }
                }
                Source::Batch => e.rank.unwrap_or(0).to_string(),
                Source::Sequential => {
                    s += 1;
                    s.to_string()
                }
                Source::Other => e.model_id.clone(),
            })
            .collect()
    }
}

/// Named model rosters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RosterPreset {
    /// One human translation, ten i.i.d. sequential draws, ten ranked batch outputs.
    InSample21,
    /// In-sample and out-of-sample human translations, ten sequential, ten batch.
    InOut22,
}

impl FromStr for RosterPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in_sample_21" => Ok(RosterPreset::InSample21),
            "in_out_22" => Ok(RosterPreset::InOut22),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

pub fn roster_preset(name: &str) -> Result<ModelRoster> {
    let preset: RosterPreset = name.parse()?;
    let human = |id: &str| RosterEntry {
        model_id: id.to_string(),
        source: Source::Human,
        rank: None,
    };
    let mut entries = match preset {
        RosterPreset::InSample21 => vec![human("H")],
        RosterPreset::InOut22 => vec![human("H1"), human("H2")],
    };
    entries.extend((1..=10).map(|k| RosterEntry {
        model_id: format!("seq{k:02}"),
        source: Source::Sequential,
        rank: None,
    }));
    entries.extend((1..=10).map(|k| RosterEntry {
        model_id: format!("batch{k:02}"),
        source: Source::Batch,
        rank: Some(k),
    }));
    ModelRoster::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn summary(id: &str, rows: &[Vec<f64>]) -> ModelSummary {
        ModelSummary {
            model_id: id.into(),
            x: Matrix::from_rows(rows).unwrap(),
        }
    }

    #[test]
    fn r1_summary_is_identity() {
        let data = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let rs = ReplicateSet::new("a", 1, data.clone()).unwrap();
        assert_eq!(summarize(&rs).unwrap().x, data);
    }

    #[test]
    fn two_point_block_mean() {
        let data = Matrix::from_rows(&[vec![0.0, 0.0], vec![2.0, 2.0]]).unwrap();
        let rs = ReplicateSet::new("a", 2, data).unwrap();
        assert_eq!(summarize(&rs).unwrap().x.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn summary_matches_reverse_order_accumulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (m, r, p) = (5, 7, 3);
        let data: Vec<f64> = (0..m * r * p)
            .map(|_| rng.random_range(-5.0..5.0))
            .collect();
        let rs = ReplicateSet::new("a", r, Matrix::from_vec(m * r, p, data).unwrap()).unwrap();
        let s = summarize(&rs).unwrap();
        for j in 0..m {
            for c in 0..p {
                let mut acc = 0.0;
                for k in (0..r).rev() {
                    acc += rs.data()[(j * r + k, c)];
                }
                assert!((s.x[(j, c)] - acc / r as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn replicate_set_validation() {
        assert!(ReplicateSet::new("a", 0, Matrix::zeros(2, 2)).is_err());
        assert!(ReplicateSet::new("a", 3, Matrix::zeros(4, 2)).is_err());
    }

    #[test]
    fn distance_cases() {
        let a = summary("a", &vec![vec![1.0]; 4]);
        let b = summary("b", &vec![vec![0.0]; 4]);
        let d = distance_matrix(&[a.clone(), b]).unwrap();
        assert_eq!(d.get(0, 1), 0.5);
        assert_eq!(d.get(1, 0), 0.5);
        let same = distance_matrix(&[a.clone(), summary("c", &vec![vec![1.0]; 4])]).unwrap();
        assert_eq!(same.get(0, 1), 0.0);
        let bad = distance_matrix(&[a, summary("d", &vec![vec![1.0]; 3])]);
        assert!(matches!(bad, Err(Error::Dimension(_))));
    }

    #[test]
    fn distance_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (n, m, p) = (6, 9, 4);
        let sums: Vec<ModelSummary> = (0..n)
            .map(|i| ModelSummary {
                model_id: format!("m{i}"),
                x: Matrix::from_vec(
                    m,
                    p,
                    (0..m * p).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
                .unwrap(),
            })
            .collect();
        let d = distance_matrix(&sums).unwrap();
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for r in 0..m {
                    for c in 0..p {
                        acc += (sums[i].x[(r, c)] - sums[j].x[(r, c)]).powi(2);
                    }
                }
                assert!((d.get(i, j) - acc.sqrt() / m as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn collinear_perspective() {
        let sums = vec![
            summary("a", &[vec![0.0]]),
            summary("b", &[vec![1.0]]),
            summary("c", &[vec![2.0]]),
        ];
        let ps = perspective_space(&distance_matrix(&sums).unwrap(), Dim::Fixed(1)).unwrap();
        let c = ps.coords.col(0);
        let s = -c[0].signum();
        for (x, e) in c.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((s * x - e).abs() < 1e-12);
        }
        assert_eq!(ps.labels, vec!["a", "b", "c"]);
    }

    #[test]
    fn identical_models_collapse() {
        let sums = vec![summary("a", &[vec![1.0, 2.0]]); 4];
        let sums: Vec<_> = sums
            .into_iter()
            .enumerate()
            .map(|(i, mut s)| {
                s.model_id = format!("m{i}");
                s
            })
            .collect();
        let ps = perspective_space(&distance_matrix(&sums).unwrap(), Dim::Auto).unwrap();
        assert!(ps.coords.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_model_truth() {
        let mu1 = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let mu2 = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let (delta, psi) = true_perspective(
            vec!["a".into(), "b".into()],
            &[mu1.clone(), mu2],
            Dim::Fixed(1),
        )
        .unwrap();
        assert!((delta.get(0, 1) - 2.5).abs() < 1e-15);
        let c = psi.coords.col(0);
        assert!((c[0].abs() - 1.25).abs() < 1e-12 && (c[0] + c[1]).abs() < 1e-12);
        let (same, _) = true_perspective(
            vec!["a".into(), "b".into()],
            &[mu1.clone(), mu1],
            Dim::Fixed(1),
        )
        .unwrap();
        assert_eq!(same.get(0, 1), 0.0);
    }

    #[test]
    fn presets() {
        let r21 = roster_preset("in_sample_21").unwrap();
        assert_eq!(r21.len(), 21);
        assert_eq!(r21.count(Source::Human), 1);
        assert_eq!(r21.count(Source::Sequential), 10);
        assert_eq!(r21.count(Source::Batch), 10);
        let ranks: Vec<_> = r21.entries()[11..]
            .iter()
            .map(|e| e.rank.unwrap())
            .collect();
        assert_eq!(ranks, (1..=10).collect::<Vec<_>>());

        let r22 = roster_preset("in_out_22").unwrap();
        assert_eq!(r22.len(), 22);
        assert_eq!(r22.entries()[0].model_id, "H1");
        assert_eq!(r22.entries()[1].model_id, "H2");
        assert_eq!(r22.display_labels()[..3], ["H1", "H2", "1"]);

        for r in [&r21, &r22] {
            let ids: HashSet<_> = r.entries().iter().map(|e| &e.model_id).collect();
            assert_eq!(ids.len(), r.len());
        }
        assert!(matches!(
            roster_preset("nope"),
            Err(Error::UnknownPreset(_))
        ));
    }

    #[test]
    fn roster_rejects_bad_ranks_and_duplicates() {
        let e = |id: &str, source, rank| RosterEntry {
            model_id: id.into(),
            source,
            rank,
        };
        assert!(ModelRoster::new(vec![
            e("a", Source::Human, None),
            e("a", Source::Other, None)
        ])
        .is_err());
        assert!(ModelRoster::new(vec![e("b1", Source::Batch, Some(2))]).is_err());
        assert!(ModelRoster::new(vec![e("b1", Source::Batch, None)]).is_err());
    }
}
