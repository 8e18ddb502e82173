//! Synthetic model populations with known true means.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::cpo::TripletBatch;
use crate::dkps::{
    true_perspective, Dim, DistanceMatrix, ModelRoster, PerspectiveSpace, ReplicateSet,
    RosterEntry, Source,
};
use crate::error::{Error, Result};
use crate::geometry::{PairedClouds, Point};
use crate::linalg::Matrix;

/// How the true means `μ^(i)` are laid out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanLayout {
    /// Every entry of every `μ^(i)` i.i.d. standard normal.
    RandomGaussian,
    /// A shared standard-normal base plus a per-model offset on the integer
    /// lattice spanned by the first two coordinates.
    Grid,
    /// Caller-supplied means, one `m x p` matrix per model.
    Fixed(Vec<Matrix>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// Uniform on `[-√3 s, √3 s]`, which has the same variance `s²`.
    Uniform,
}

impl FromStr for NoiseKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gaussian" => Ok(NoiseKind::Gaussian),
            "uniform" => Ok(NoiseKind::Uniform),
            _ => Err(format!(
                "unknown noise `{s}` (expected gaussian or uniform)"
            )),
        }
    }
}

/// Per-rank mean drift `δ_k` and noise inflation `κ_k` for batch outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchProfile {
    pub delta: Vec<f64>,
    pub kappa: Vec<f64>,
}

impl BatchProfile {
    /// `δ_k = 0` and `κ_k = 1 + 0.1 (k - 1)` for ranks `1..=ranks`.
    pub fn graded(ranks: usize) -> Self {
        BatchProfile {
            delta: vec![0.0; ranks],
            kappa: (0..ranks).map(|k| 1.0 + 0.1 * k as f64).collect(),
        }
    }

    /// The same `κ` at every rank and no drift.
    pub fn constant(ranks: usize, kappa: f64) -> Self {
        BatchProfile {
            delta: vec![0.0; ranks],
            kappa: vec![kappa; ranks],
        }
    }

    pub fn ranks(&self) -> usize {
        self.kappa.len()
    }

    fn validate(&self) -> Result<()> {
        if self.kappa.is_empty() || self.delta.len() != self.kappa.len() {
            return Err(Error::Validation(format!(
                "batch profile needs equal, non-zero numbers of drifts and inflations, got {} and {}",
                self.delta.len(),
                self.kappa.len()
            )));
        }
        if let Some(k) = self.kappa.iter().find(|k| !(**k >= 1.0) || !k.is_finite()) {
            return Err(Error::Validation(format!(
                "variance inflation must be >= 1, got {k}"
            )));
        }
        if self.delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::Validation("non-finite batch drift".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_models: usize,
    pub m_queries: usize,
    pub embed_dim: usize,
    pub noise_scale: f64,
    pub mean_layout: MeanLayout,
    pub noise: NoiseKind,
    /// When set, the last `ranks` models are batch outputs of ranks `1..=ranks`.
    pub batch_profile: Option<BatchProfile>,
    /// Mean offset of preferred samples from `x`, along `1/√p`.
    pub preferred_bias: f64,
    /// Mean offset of dispreferred samples from `x`, along `1/√p`.
    pub dispreferred_bias: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_models: 5,
            m_queries: 50,
            embed_dim: 4,
            noise_scale: 0.5,
            mean_layout: MeanLayout::RandomGaussian,
            noise: NoiseKind::Gaussian,
            batch_profile: None,
            preferred_bias: 0.05,
            dispreferred_bias: 0.2,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// 100 sentences in three dimensions with `σ = 0.3`.
    pub fn triplet_default() -> Self {
        SimConfig {
            m_queries: 100,
            embed_dim: 3,
            noise_scale: 0.3,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("n_models", self.n_models),
            ("m_queries", self.m_queries),
            ("embed_dim", self.embed_dim),
        ] {
            if v < 1 {
                return Err(Error::Validation(format!("{what} must be >= 1")));
            }
        }
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return Err(Error::Validation(format!(
                "noise scale must be finite and >= 0, got {}",
                self.noise_scale
            )));
        }
        if !self.preferred_bias.is_finite() || !self.dispreferred_bias.is_finite() {
            return Err(Error::Validation("non-finite triplet bias".into()));
        }
        if let Some(p) = &self.batch_profile {
            p.validate()?;
        }
        if let MeanLayout::Fixed(means) = &self.mean_layout {
            if means.is_empty() {
                return Err(Error::Validation(
                    "fixed layout needs at least one mean matrix".into(),
                ));
            }
            for m in means {
                if m.shape() != (self.m_queries, self.embed_dim) {
                    return Err(Error::Dimension(format!(
                        "fixed mean of shape {:?}, expected ({}, {})",
                        m.shape(),
                        self.m_queries,
                        self.embed_dim
                    )));
                }
            }
        }
        Ok(())
    }
}

/// True means and the distances/perspective space they induce.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub means: Vec<Matrix>,
    pub delta: DistanceMatrix,
    pub psi: PerspectiveSpace,
}

fn standard_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let v = (0..rows * cols)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    Matrix::from_vec(rows, cols, v).expect("finite normal draws")
}

fn draw_means(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Matrix>> {
    let (n, m, p) = (cfg.n_models, cfg.m_queries, cfg.embed_dim);
    match &cfg.mean_layout {
        MeanLayout::RandomGaussian => Ok((0..n).map(|_| standard_matrix(rng, m, p)).collect()),
        MeanLayout::Grid => {
            let base = standard_matrix(rng, m, p);
            let width = (n as f64).sqrt().ceil() as usize;
            Ok((0..n)
                .map(|i| {
                    let mut mu = base.clone();
                    let offset = [(i % width) as f64, (i / width) as f64];
                    for j in 0..m {
                        let row = mu.row_mut(j);
                        if p == 1 {
                            row[0] += i as f64;
                        } else {
                            row[0] += offset[0];
                            row[1] += offset[1];
                        }
                    }
                    mu
                })
                .collect())
        }
        MeanLayout::Fixed(means) => {
            if means.len() != n {
                return Err(Error::Validation(format!(
                    "fixed layout supplies {} means for {n} models",
                    means.len()
                )));
            }
            Ok(means.clone())
        }
    }
}

struct Noise {
    kind: NoiseKind,
    uniform: Uniform<f64>,
}

impl Noise {
    fn new(kind: NoiseKind) -> Self {
        let a = 3f64.sqrt();
        Noise {
            kind,
            uniform: Uniform::new_inclusive(-a, a).expect("finite bounds"),
        }
    }

    /// One unit-variance draw.
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.kind {
            NoiseKind::Gaussian => rng.sample(StandardNormal),
            NoiseKind::Uniform => self.uniform.sample(rng),
        }
    }
}

fn model_id(i: usize) -> String {
    format!("model{:02}", i + 1)
}

/// Roster matching [`simulate`]'s model order: plain models tagged `other`,
/// followed by batch models of ranks `1..=ranks` when a profile is set.
pub fn sim_roster(cfg: &SimConfig) -> Result<ModelRoster> {
    let ranks = cfg.batch_profile.as_ref().map_or(0, BatchProfile::ranks);
    if ranks > cfg.n_models {
        return Err(Error::Validation(format!(
            "batch profile has {ranks} ranks but only {} models",
            cfg.n_models
        )));
    }
    let first_batch = cfg.n_models - ranks;
    ModelRoster::new(
        (0..cfg.n_models)
            .map(|i| RosterEntry {
                model_id: model_id(i),
                source: if i < first_batch {
                    Source::Other
                } else {
                    Source::Batch
                },
                rank: (i >= first_batch).then(|| i - first_batch + 1),
            })
            .collect(),
    )
}

/// Draws true means and `r` replicates per (model, query).
///
/// Replicate `k` of query `j` for model `i` is `μ^(i)_j + s ε` with unit
/// noise `ε`; `s = σ` except for a batch model of rank `k`, which uses
/// `σ κ_k` and is shifted by `δ_k / √p` in every coordinate. The ground truth
/// uses the shifted means.
pub fn simulate(cfg: &SimConfig, r: usize) -> Result<(GroundTruth, Vec<ReplicateSet>)> {
    cfg.validate()?;
    if r < 1 {
        return Err(Error::Validation("r must be >= 1".into()));
    }
    if cfg.n_models < 2 {
        return Err(Error::Validation(
            "a population needs at least 2 models for a perspective space".into(),
        ));
    }
    let roster = sim_roster(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut means = draw_means(cfg, &mut rng)?;
    let noise = Noise::new(cfg.noise);
    let (m, p) = (cfg.m_queries, cfg.embed_dim);
    let unit = 1.0 / (p as f64).sqrt();

    let mut sets = Vec::with_capacity(cfg.n_models);
    for (i, entry) in roster.entries().iter().enumerate() {
        let (shift, scale) = match (entry.rank, &cfg.batch_profile) {
            (Some(k), Some(prof)) => (
                prof.delta[k - 1] * unit,
                cfg.noise_scale * prof.kappa[k - 1],
            ),
            _ => (0.0, cfg.noise_scale),
        };
        if shift != 0.0 {
            means[i] = means[i].map(|v| v + shift);
        }
        let mut data = Vec::with_capacity(m * r * p);
        for j in 0..m {
            let mu = means[i].row(j);
            for _ in 0..r {
                data.extend(mu.iter().map(|&v| v + scale * noise.draw(&mut rng)));
            }
        }
        sets.push(ReplicateSet::new(
            entry.model_id.clone(),
            r,
            Matrix::from_vec(m * r, p, data)?,
        )?);
    }
    let labels = roster
        .entries()
        .iter()
        .map(|e| e.model_id.clone())
        .collect();
    let (delta, psi) = true_perspective(labels, &means, Dim::Auto)?;
    Ok((GroundTruth { means, delta, psi }, sets))
}

/// One [`TripletBatch`] per query.
///
/// `x` is query `j`'s mean under the layout (the first model's for `grid`
/// and `fixed`). Preferred samples are `x + b_w u + σ ε`; the dispreferred
/// sample of rank `k` is `x + (b_l + δ_k) u + σ κ_k ε` with `u = 1/√p`. The
/// rank profile defaults to [`BatchProfile::graded`] with `t` ranks.
pub fn simulate_triplets(cfg: &SimConfig, t: usize) -> Result<Vec<TripletBatch>> {
    cfg.validate()?;
    if t < 2 {
        return Err(Error::Validation(format!("t must be >= 2, got {t}")));
    }
    let profile = match &cfg.batch_profile {
        Some(p) if p.ranks() != t => {
            return Err(Error::Validation(format!(
                "batch profile has {} ranks for t = {t}",
                p.ranks()
            )))
        }
        Some(p) => p.clone(),
        None => BatchProfile::graded(t),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (m, p) = (cfg.m_queries, cfg.embed_dim);
    let refs = match &cfg.mean_layout {
        MeanLayout::Fixed(means) => means[0].clone(),
        MeanLayout::RandomGaussian | MeanLayout::Grid => standard_matrix(&mut rng, m, p),
    };
    let noise = Noise::new(cfg.noise);
    let unit = 1.0 / (p as f64).sqrt();
    let sigma = cfg.noise_scale;
    (0..m)
        .map(|j| {
            let x = refs.row(j).to_vec();
            let mut w = Vec::with_capacity(t * p);
            for _ in 0..t {
                w.extend(
                    x.iter()
                        .map(|&v| v + cfg.preferred_bias * unit + sigma * noise.draw(&mut rng)),
                );
            }
            let mut l = Vec::with_capacity(t * p);
            for k in 0..t {
                let shift = (cfg.dispreferred_bias + profile.delta[k]) * unit;
                let s = sigma * profile.kappa[k];
                l.extend(x.iter().map(|&v| v + shift + s * noise.draw(&mut rng)));
            }
            TripletBatch::new(
                format!("q{:04}", j + 1),
                x,
                Matrix::from_vec(t, p, w)?,
                Matrix::from_vec(t, p, l)?,
            )
        })
        .collect()
}

/// Source-to-target map for paired point clouds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CloudMap {
    Identity,
    Rotation { theta: f64 },
    RotationPlusNoise { theta: f64, sigma: f64 },
}

impl fmt::Display for CloudMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CloudMap::Identity => f.write_str("identity"),
            CloudMap::Rotation { theta } => write!(f, "rotation({theta})"),
            CloudMap::RotationPlusNoise { theta, sigma } => {
                write!(f, "rotation_plus_noise({theta},{sigma})")
            }
        }
    }
}

/// Rotates `p` counter-clockwise by `theta`.
pub fn rotate(p: Point, theta: f64) -> Point {
    let (s, c) = theta.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

/// `m_queries` source points in the plane, their images under `map`, and a
/// split into in-sample (first half, rounded down) and out-of-sample items.
pub fn simulate_paired_clouds(cfg: &SimConfig, map: CloudMap) -> Result<PairedClouds> {
    cfg.validate()?;
    if cfg.embed_dim != 2 {
        return Err(Error::Dimension(format!(
            "paired clouds are planar, embed_dim = {} is unsupported",
            cfg.embed_dim
        )));
    }
    if cfg.m_queries < 2 {
        return Err(Error::Validation(
            "paired clouds need at least 2 points".into(),
        ));
    }
    if let CloudMap::RotationPlusNoise { sigma, .. } = map {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::Validation(format!(
                "map noise must be >= 0, got {sigma}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let src: Vec<Point> = match &cfg.mean_layout {
        MeanLayout::Fixed(means) => means[0].row_iter().map(|r| [r[0], r[1]]).collect(),
        MeanLayout::RandomGaussian => {
            let m = standard_matrix(&mut rng, cfg.m_queries, 2);
            m.row_iter().map(|r| [r[0], r[1]]).collect()
        }
        MeanLayout::Grid => {
            let width = (cfg.m_queries as f64).sqrt().ceil() as usize;
            (0..cfg.m_queries)
                .map(|i| [(i % width) as f64, (i / width) as f64])
                .collect()
        }
    };
    let tgt: Vec<Point> = src
        .iter()
        .map(|&p| match map {
            CloudMap::Identity => p,
            CloudMap::Rotation { theta } => rotate(p, theta),
            CloudMap::RotationPlusNoise { theta, sigma } => {
                let q = rotate(p, theta);
                let e0: f64 = rng.sample(StandardNormal);
                let e1: f64 = rng.sample(StandardNormal);
                [q[0] + sigma * e0, q[1] + sigma * e1]
            }
        })
        .collect();
    let half = src.len() / 2;
    Ok(PairedClouds {
        in_src: src[..half].to_vec(),
        in_tgt: tgt[..half].to_vec(),
        oos_src: src[half..].to_vec(),
        oos_tgt: tgt[half..].to_vec(),
    })
}
