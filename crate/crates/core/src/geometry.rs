//! Planar convex hulls and the hull-membership experiment that checks whether
//! a source→target map preserves which out-of-sample points fall inside the
//! hull of a few in-sample anchors.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{mean, sample_std};

pub type Point = [f64; 2];

/// Default collinearity / boundary tolerance on cross products.
pub const HULL_TOL: f64 = 1e-9;

#[inline]
fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HullKind {
    Point,
    Segment,
    Polygon,
}

/// Convex hull with counter-clockwise, strictly convex vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hull2D {
    pub vertices: Vec<Point>,
}

impl Hull2D {
    pub fn kind(&self) -> HullKind {
        match self.vertices.len() {
            1 => HullKind::Point,
            2 => HullKind::Segment,
            _ => HullKind::Polygon,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.kind() != HullKind::Polygon
    }

    /// Mean of the vertex set.
    pub fn vertex_mean(&self) -> Point {
        let n = self.vertices.len() as f64;
        let (sx, sy) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |(x, y), v| (x + v[0], y + v[1]));
        [sx / n, sy / n]
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        if v.len() < 3 {
            return 0.0;
        }
        let mut a = 0.0;
        for i in 0..v.len() {
            let (p, q) = (v[i], v[(i + 1) % v.len()]);
            a += p[0] * q[1] - q[0] * p[1];
        }
        0.5 * a
    }
}

/// Andrew's monotone chain with collinear points removed.
///
/// A candidate vertex is dropped when its turn is not a strict left turn
/// beyond `HULL_TOL`, so nearly collinear inputs collapse to a segment.
pub fn convex_hull(points: &[Point]) -> Result<Hull2D> {
    if points.is_empty() {
        return Err(Error::Validation("convex hull of no points".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite point".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return Ok(Hull2D { vertices: pts });
    }

    let mut lower: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2
            && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= HULL_TOL
        {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2
            && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= HULL_TOL
        {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    Ok(Hull2D { vertices: lower })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Containment {
    Inside,
    Boundary,
    Outside,
}

impl Containment {
    /// Boundary points count as members.
    pub fn is_member(self) -> bool {
        self != Containment::Outside
    }
}

/// Edge-side test: outside if left of no edge by more than `tol`, boundary if
/// within `tol` of an edge line while not outside, inside otherwise.
pub fn hull_contains(h: &Hull2D, p: Point, tol: f64) -> Containment {
    let v = &h.vertices;
    match h.kind() {
        HullKind::Point => {
            let d2 = (p[0] - v[0][0]).powi(2) + (p[1] - v[0][1]).powi(2);
            if d2 <= tol * tol {
                Containment::Boundary
            } else {
                Containment::Outside
            }
        }
        HullKind::Segment => {
            let (a, b) = (v[0], v[1]);
            let len2 = (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2);
            let t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / len2;
            let slack = tol / len2.sqrt();
            if cross(a, b, p).abs() <= tol && t >= -slack && t <= 1.0 + slack {
                Containment::Boundary
            } else {
                Containment::Outside
            }
        }
        HullKind::Polygon => {
            let mut on_edge = false;
            for i in 0..v.len() {
                let c = cross(v[i], v[(i + 1) % v.len()], p);
                if c < -tol {
                    return Containment::Outside;
                }
                if c <= tol {
                    on_edge = true;
                }
            }
            if on_edge {
                Containment::Boundary
            } else {
                Containment::Inside
            }
        }
    }
}

/// Aligned source/target coordinates for in-sample and out-of-sample items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedClouds {
    pub in_src: Vec<Point>,
    pub in_tgt: Vec<Point>,
    pub oos_src: Vec<Point>,
    pub oos_tgt: Vec<Point>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HullExperimentConfig {
    pub repeats: usize,
    pub sample_size: usize,
    pub k_nearest: usize,
    pub seed: u64,
    pub tol: f64,
    /// Redraws allowed for a degenerate source hull before the repeat is skipped.
    pub max_resamples: usize,
}

impl Default for HullExperimentConfig {
    fn default() -> Self {
        HullExperimentConfig {
            repeats: 500,
            sample_size: 4,
            k_nearest: 10,
            seed: 0,
            tol: HULL_TOL,
            max_resamples: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullExperimentResult {
    /// Completed repeats (`counts.len()`).
    pub repeats: usize,
    /// Repeats abandoned after `max_resamples` degenerate source hulls.
    pub skipped: usize,
    pub k_nearest: usize,
    pub counts: Vec<usize>,
    pub mean: f64,
    /// Sample standard deviation of `counts`.
    pub stddev: f64,
    /// How the source hull's center is taken.
    pub center_rule: String,
}

/// Repeats the hull-membership experiment.
///
/// Each repeat draws `sample_size` in-sample anchors, builds their source and
/// target hulls, takes the `k_nearest` out-of-sample source points closest to
/// the mean of the source hull's vertices (ties to the lower index), and counts
/// how many of their target points are members of the target hull. Repeat `i`
/// draws from its own ChaCha stream `(seed, i)`, so results do not depend on
/// thread scheduling.
pub fn hull_experiment(
    clouds: &PairedClouds,
    cfg: &HullExperimentConfig,
) -> Result<HullExperimentResult> {
    let n_in = clouds.in_src.len();
    let n_oos = clouds.oos_src.len();
    if clouds.in_tgt.len() != n_in || clouds.oos_tgt.len() != n_oos {
        return Err(Error::Alignment(
            "source and target point lists differ in length".into(),
        ));
    }
    if cfg.sample_size < 3 || cfg.sample_size > n_in {
        return Err(Error::Range {
            what: "sample_size",
            value: cfg.sample_size,
            range: format!("[3, {n_in}]"),
        });
    }
    if cfg.k_nearest < 1 || cfg.k_nearest > n_oos {
        return Err(Error::Range {
            what: "k_nearest",
            value: cfg.k_nearest,
            range: format!("[1, {n_oos}]"),
        });
    }

    let per_repeat: Vec<Option<usize>> = (0..cfg.repeats)
        .into_par_iter()
        .map(|i| run_repeat(clouds, cfg, i as u64))
        .collect::<Result<_>>()?;

    let skipped = per_repeat.iter().filter(|c| c.is_none()).count();
    let counts: Vec<usize> = per_repeat.into_iter().flatten().collect();
    let as_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let (m, s) = if as_f.is_empty() {
        (0.0, 0.0)
    } else {
        (mean(&as_f), sample_std(&as_f))
    };
    Ok(HullExperimentResult {
        repeats: counts.len(),
        skipped,
        k_nearest: cfg.k_nearest,
        counts,
        mean: m,
        stddev: s,
        center_rule: "vertex_mean".into(),
    })
}

fn run_repeat(
    clouds: &PairedClouds,
    cfg: &HullExperimentConfig,
    repeat: u64,
) -> Result<Option<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(repeat);

    for _ in 0..=cfg.max_resamples {
        let picks = index::sample(&mut rng, clouds.in_src.len(), cfg.sample_size).into_vec();
        let src: Vec<Point> = picks.iter().map(|&i| clouds.in_src[i]).collect();
        let src_hull = convex_hull(&src)?;
        if src_hull.is_degenerate() {
            continue;
        }
        let tgt: Vec<Point> = picks.iter().map(|&i| clouds.in_tgt[i]).collect();
        let tgt_hull = convex_hull(&tgt)?;
        let center = src_hull.vertex_mean();

        let nearest = k_nearest(&clouds.oos_src, center, cfg.k_nearest);
        let count = nearest
            .iter()
            .filter(|&&j| hull_contains(&tgt_hull, clouds.oos_tgt[j], cfg.tol).is_member())
            .count();
        return Ok(Some(count));
    }
    Ok(None)
}

/// Indices of the `k` points closest to `center`, ties broken by index.
pub fn k_nearest(points: &[Point], center: Point, k: usize) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order.into_iter().take(k).map(|(_, i)| i).collect()
}
