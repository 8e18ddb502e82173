//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dkps::cpo::{
    cpo_fit, cpo_fit_all, mahalanobis_dkps, mle_fit, CpoConfig, CpoInit, CpoObjective,
    GaussianPairModel, MahalanobisSetting, Pairing, SentenceModel, TripletBatch,
};
use dkps::estimators::{bias_variance, QueryMeta};
use dkps::geometry::{
    convex_hull, hull_contains, hull_experiment, HullExperimentConfig, PairedClouds, Point,
    HULL_TOL,
};
use dkps::io::dataset_from_triplets;
use dkps::linalg::{classical_mds, detect_elbow, procrustes_error, Matrix};
use dkps::simulator::{
    rotate, simulate, simulate_paired_clouds, simulate_triplets, CloudMap, SimConfig,
};
use dkps::{distance_matrix, summarize, ModelRoster, ReplicateSet, RosterEntry, Source};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let v = (0..rows * cols)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    Matrix::from_vec(rows, cols, v).unwrap()
}

fn euclidean_distances(x: &Matrix) -> Matrix {
    let n = x.rows();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let s: f64 = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[(i, j)] = s.sqrt();
        }
    }
    d
}

fn mds_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = normal_matrix(&mut rng, 20, 3);
    let start = Instant::now();
    let d = euclidean_distances(&x);
    let emb = classical_mds(&d, 3).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let err = procrustes_error(&x, &emb.coords).map_err(|e| e.to_string())?;
    check(
        err < 1e-8 && elapsed < Duration::from_secs(1),
        format!("procrustes error {err:.2e}, {elapsed:.2?}"),
    )
}

fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn dkps_consistency() -> Outcome {
    let start = Instant::now();
    let (mut e1, mut e1000) = (Vec::new(), Vec::new());
    for seed in 0..20 {
        let cfg = SimConfig {
            n_models: 5,
            m_queries: 50,
            embed_dim: 4,
            noise_scale: 0.5,
            seed,
            ..Default::default()
        };
        for (r, errs) in [(1, &mut e1), (1000, &mut e1000)] {
            let (truth, sets) = simulate(&cfg, r).map_err(|e| e.to_string())?;
            let summaries: Vec<_> = sets.iter().map(|s| summarize(s).unwrap()).collect();
            let d = distance_matrix(&summaries).map_err(|e| e.to_string())?;
            errs.push(max_abs_diff(d.matrix(), truth.delta.matrix()));
        }
    }
    let elapsed = start.elapsed();
    let (m1, m1000) = (median(&mut e1), median(&mut e1000));
    check(
        m1 >= 5.0 * m1000 && elapsed < Duration::from_secs(30),
        format!(
            "median max error r=1: {m1:.4}, r=1000: {m1000:.5} (ratio {:.1}), {elapsed:.2?}",
            m1 / m1000
        ),
    )
}

fn biasvar_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (m, t) = (1000, 10);
    let mut worst: f64 = 0.0;
    for q in [1, 3] {
        let reference = normal_matrix(&mut rng, m, q);
        let samples: Vec<Matrix> = (0..m).map(|_| normal_matrix(&mut rng, t, q)).collect();
        let meta: Vec<QueryMeta> = (0..m)
            .map(|j| QueryMeta {
                query_id: format!("q{j}"),
                word_count: Some(j as u32 % 40),
            })
            .collect();
        let recs = bias_variance(&reference, &samples, &meta).map_err(|e| e.to_string())?;
        for (j, rec) in recs.iter().enumerate() {
            let block = &samples[j];
            let mut mean = vec![0.0; q];
            for k in 0..t {
                for d in 0..q {
                    mean[d] += block[(k, d)];
                }
            }
            for v in &mut mean {
                *v /= t as f64;
            }
            let bias: f64 = (0..q).map(|d| (mean[d] - reference[(j, d)]).powi(2)).sum();
            let mut ss = 0.0;
            for k in 0..t {
                for d in 0..q {
                    ss += (block[(k, d)] - mean[d]).powi(2);
                }
            }
            let var = ss / ((t - 1) * q) as f64;
            worst = worst
                .max((bias - rec.bias_sq).abs())
                .max((var - rec.variance).abs());
            if rec.replicate_count != t {
                return Err(format!("replicate_count {} != {t}", rec.replicate_count));
            }
        }
    }
    check(
        worst <= 1e-12,
        format!("max abs deviation {worst:.2e} over 2000 queries"),
    )
}

fn summary_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let shapes = [
        (1, 1, 1),
        (7, 3, 2),
        (50, 10, 4),
        (200, 100, 3),
        (1000, 20, 5),
        (1000, 100, 2),
    ];
    for (m, r, p) in shapes {
        let data = normal_matrix(&mut rng, m * r, p).map(|v| 10.0 * v + 3.0);
        let rs = ReplicateSet::new("m", r, data.clone()).map_err(|e| e.to_string())?;
        let s = summarize(&rs).map_err(|e| e.to_string())?;
        for j in 0..m {
            for d in 0..p {
                let sum: f64 = (0..r).rev().map(|k| data[(j * r + k, d)]).sum();
                worst = worst.max((sum / r as f64 - s.x[(j, d)]).abs());
            }
        }
    }
    check(
        worst <= 1e-12,
        format!("max abs deviation {worst:.2e}, largest set m=1000 r=100"),
    )
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn seg_dist(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

fn hull_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let band = 1e-8;
    let (mut trials, mut bad, mut in_band) = (0, 0, 0);
    while trials < 10_000 {
        let n = rng.random_range(3..=15);
        let pts: Vec<Point> = (0..n)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let hull = convex_hull(&pts).map_err(|e| e.to_string())?;
        if hull.is_degenerate() {
            continue;
        }
        let v = &hull.vertices;
        let p: Point = match trials % 10 {
            // A vertex or an edge midpoint: on the boundary.
            0 => v[rng.random_range(0..v.len())],
            1 => {
                let i = rng.random_range(0..v.len());
                let (a, b) = (v[i], v[(i + 1) % v.len()]);
                [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
            }
            _ => [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)],
        };
        trials += 1;
        let brute = (1..v.len() - 1).any(|i| {
            let (a, b, c) = (v[0], v[i], v[i + 1]);
            orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0
        });
        let got = hull_contains(&hull, p, HULL_TOL).is_member();
        if got != brute {
            let dist = (0..v.len())
                .map(|i| seg_dist(p, v[i], v[(i + 1) % v.len()]))
                .fold(f64::INFINITY, f64::min);
            if dist < band {
                in_band += 1;
            } else {
                bad += 1;
            }
        }
    }
    check(
        bad == 0,
        format!("{trials} pairs, {bad} disagreements outside the band, {in_band} inside it"),
    )
}

fn hull_monotonicity() -> Outcome {
    let exp = HullExperimentConfig::default();
    let mut means = Vec::new();
    for sigma in [0.0, 0.5, 2.0] {
        let mut total = 0.0;
        for seed in 0..20 {
            let cfg = SimConfig {
                m_queries: 1000,
                embed_dim: 2,
                seed,
                ..Default::default()
            };
            let clouds =
                simulate_paired_clouds(&cfg, CloudMap::RotationPlusNoise { theta: 0.7, sigma })
                    .map_err(|e| e.to_string())?;
            let res = hull_experiment(
                &clouds,
                &HullExperimentConfig {
                    seed,
                    ..exp.clone()
                },
            )
            .map_err(|e| e.to_string())?;
            total += res.mean;
        }
        means.push(total / 20.0);
    }
    let monotone = means.windows(2).all(|w| w[1] <= w[0]);

    // Identity map, then a rigid motion of every target point.
    let mut invariant = true;
    for seed in 0..20 {
        let cfg = SimConfig {
            m_queries: 1000,
            embed_dim: 2,
            seed,
            ..Default::default()
        };
        let clouds = simulate_paired_clouds(&cfg, CloudMap::Identity).map_err(|e| e.to_string())?;
        let moved = |pts: &[Point]| -> Vec<Point> {
            pts.iter()
                .map(|&p| {
                    let r = rotate(p, 1.1);
                    [r[0] + 3.25, r[1] - 7.5]
                })
                .collect()
        };
        let shifted = PairedClouds {
            in_tgt: moved(&clouds.in_tgt),
            oos_tgt: moved(&clouds.oos_tgt),
            ..clouds.clone()
        };
        let c = HullExperimentConfig {
            seed,
            ..exp.clone()
        };
        let a = hull_experiment(&clouds, &c).map_err(|e| e.to_string())?;
        let b = hull_experiment(&shifted, &c).map_err(|e| e.to_string())?;
        invariant &= a.counts == b.counts;
    }
    check(
        monotone && invariant,
        format!(
            "mean counts at sigma 0 / 0.5 / 2: {:.3} / {:.3} / {:.3}; rigid-motion invariant: {invariant}",
            means[0], means[1], means[2]
        ),
    )
}

fn random_spd(rng: &mut ChaCha8Rng, q: usize) -> Matrix {
    let a = normal_matrix(rng, q, q);
    let mut s = a.matmul(&a.transpose()).unwrap();
    for i in 0..q {
        s[(i, i)] += 0.3;
    }
    s
}

fn random_batch(rng: &mut ChaCha8Rng, t: usize, q: usize) -> TripletBatch {
    let x = (0..q).map(|_| rng.sample(StandardNormal)).collect();
    TripletBatch::new(
        "s",
        x,
        normal_matrix(rng, t, q),
        normal_matrix(rng, t, q).map(|v| 1.5 * v + 0.5),
    )
    .unwrap()
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for inst in 0..100 {
        let beta = [0.0, 0.5, 2.0][inst % 3];
        let (t, q) = (rng.random_range(2..=8), rng.random_range(1..=4));
        let batch = random_batch(&mut rng, t, q);
        let model = GaussianPairModel {
            mu_w: (0..q).map(|_| rng.sample(StandardNormal)).collect(),
            sigma_w: random_spd(&mut rng, q),
            mu_l: (0..q).map(|_| rng.sample(StandardNormal)).collect(),
            sigma_l: random_spd(&mut rng, q),
        };
        let cfg = CpoConfig {
            beta,
            pairing: if inst % 2 == 0 {
                Pairing::ByRank
            } else {
                Pairing::AllPairs
            },
            ..Default::default()
        };
        let obj = CpoObjective::new(&batch, &cfg).map_err(|e| e.to_string())?;
        let theta = obj.encode(&model).map_err(|e| e.to_string())?;
        let (_, grad) = obj.value_and_grad(&theta).map_err(|e| e.to_string())?;
        for k in 0..theta.len() {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[k] += h;
            tm[k] -= h;
            let fd = (obj.value(&tp).unwrap() - obj.value(&tm).unwrap()) / (2.0 * h);
            let rel = (grad[k] - fd).abs() / 1f64.max(grad[k].abs()).max(fd.abs());
            worst = worst.max(rel);
            if rel > 1e-5 {
                failures += 1;
            }
        }
    }
    check(
        failures == 0,
        format!("100 instances, worst relative error {worst:.2e}, {failures} components over 1e-5"),
    )
}

fn beta_zero_equivalence() -> Outcome {
    let cfg_sim = SimConfig::triplet_default();
    let batches = simulate_triplets(&cfg_sim, 10).map_err(|e| e.to_string())?;
    let cfg = CpoConfig {
        beta: 0.0,
        ..Default::default()
    };
    let (mut worst_mu, mut worst_sigma): (f64, f64) = (0.0, 0.0);
    let mut l_changed = 0;
    for b in &batches {
        let mle = mle_fit(b, cfg.cov_floor).map_err(|e| e.to_string())?;
        let q = b.dim();
        // Start away from the MLE on the preferred side.
        let mut sigma_w = mle.sigma_w.scale(1.5);
        let mut sigma_l = Matrix::identity(q).scale(2.0);
        for i in 0..q {
            sigma_w[(i, i)] += 0.1;
            sigma_l[(i, q - 1 - i)] += 0.25;
        }
        let init = GaussianPairModel {
            mu_w: mle.mu_w.iter().map(|v| v + 0.3).collect(),
            sigma_w,
            mu_l: b.x.iter().map(|v| v + 1.0).collect(),
            sigma_l: sigma_l.symmetrized(),
        };
        let fit = cpo_fit(b, &cfg, &CpoInit::Model(init.clone())).map_err(|e| e.to_string())?;
        let dmu = fit
            .model
            .mu_w
            .iter()
            .zip(&mle.mu_w)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let dsig = fit
            .model
            .sigma_w
            .sub(&mle.sigma_w)
            .unwrap()
            .frobenius_norm();
        worst_mu = worst_mu.max(dmu);
        worst_sigma = worst_sigma.max(dsig);
        if fit.model.mu_l != init.mu_l || fit.model.sigma_l != init.sigma_l {
            l_changed += 1;
        }
    }
    check(
        worst_mu < 1e-4 && worst_sigma < 1e-4 && l_changed == 0,
        format!(
            "{} sentences, max |mu_w - mle| {worst_mu:.2e}, max |sigma_w - mle|_F {worst_sigma:.2e}, \
             dispreferred changed in {l_changed}",
            batches.len()
        ),
    )
}

fn sigma_l_inflation() -> Outcome {
    let batches =
        simulate_triplets(&SimConfig::triplet_default(), 10).map_err(|e| e.to_string())?;
    let cfg = CpoConfig::default();
    let fits = cpo_fit_all(&batches, &cfg).map_err(|e| e.to_string())?;
    let mut inflated = 0;
    for (b, f) in batches.iter().zip(&fits) {
        let mle = mle_fit(b, cfg.cov_floor).map_err(|e| e.to_string())?;
        if f.model.sigma_l.trace() >= mle.sigma_l.trace() {
            inflated += 1;
        }
    }
    check(
        inflated >= 95,
        format!(
            "trace(sigma_l) inflated for {inflated} of {} sentences at beta = 1",
            batches.len()
        ),
    )
}

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

fn mahalanobis_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (m, t, q) = (12, 5, 3);
    let batches: Vec<TripletBatch> = (0..m)
        .map(|s| {
            let mut b = random_batch(&mut rng, t, q);
            b.sentence_id = format!("s{s:02}");
            b
        })
        .collect();
    let identity: Vec<SentenceModel> = batches
        .iter()
        .map(|b| SentenceModel {
            sentence_id: b.sentence_id.clone(),
            model: GaussianPairModel {
                mu_w: vec![0.0; q],
                sigma_w: Matrix::identity(q),
                mu_l: vec![0.0; q],
                sigma_l: Matrix::identity(q),
            },
        })
        .collect();
    let ds = dataset_from_triplets("id", &batches).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for setting in [
        MahalanobisSetting::Sequential,
        MahalanobisSetting::Batch,
        MahalanobisSetting::Joint,
    ] {
        let r = ds.mahalanobis_roster(setting).map_err(|e| e.to_string())?;
        let md = mahalanobis_dkps(&identity, &batches, setting, &r).map_err(|e| e.to_string())?;
        let summaries: Vec<_> = r
            .entries()
            .iter()
            .map(|e| summarize(ds.model(&e.model_id).unwrap()).unwrap())
            .collect();
        let d = distance_matrix(&summaries).map_err(|e| e.to_string())?;
        worst = worst.max(max_abs_diff(md.matrix(), d.matrix()));
    }

    // Scalar sentences with hand-expanded distances.
    let scalar = |id: &str, x: f64, w: [f64; 2], l: [f64; 2]| {
        TripletBatch::new(
            id,
            vec![x],
            Matrix::from_vec(2, 1, w.to_vec()).unwrap(),
            Matrix::from_vec(2, 1, l.to_vec()).unwrap(),
        )
        .unwrap()
    };
    let model = |id: &str, sw: f64, sl: f64| SentenceModel {
        sentence_id: id.into(),
        model: GaussianPairModel {
            mu_w: vec![0.0],
            sigma_w: Matrix::from_diag(&[sw]),
            mu_l: vec![0.0],
            sigma_l: Matrix::from_diag(&[sl]),
        },
    };
    let data = vec![
        scalar("a", 0.0, [1.0, 3.0], [2.0, 6.0]),
        scalar("b", 1.0, [1.0, 2.0], [-1.0, 5.0]),
    ];
    let models = vec![model("a", 1.0, 4.0), model("b", 4.0, 1.0)];
    let d = mahalanobis_dkps(
        &models,
        &data,
        MahalanobisSetting::Joint,
        &roster(2, true, true),
    )
    .map_err(|e| e.to_string())?;
    // Order H, seq01, seq02, batch01, batch02; per-sentence distances use
    // sd 1 / 2 (preferred) and 2 / 1 (dispreferred) for sentences a / b.
    let expected = [
        (0, 1, 0.5 * (1.0f64 + 0.0).sqrt()),
        (0, 2, 0.5 * (9.0f64 + 0.25).sqrt()),
        (0, 3, 0.5 * (1.0f64 + 4.0).sqrt()),
        (0, 4, 0.5 * (9.0f64 + 16.0).sqrt()),
        (1, 2, 0.5 * (4.0f64 + 0.25).sqrt()),
        (1, 3, 0.5 * (1.0f64 + 4.0).sqrt()),
        (1, 4, 0.5 * (25.0f64 + 16.0).sqrt()),
        (2, 3, 0.5 * (1.0f64 + 9.0).sqrt()),
        (2, 4, 0.5 * (9.0f64 + 9.0).sqrt()),
        (3, 4, 0.5 * (4.0f64 + 36.0).sqrt()),
    ];
    let hand = expected
        .iter()
        .map(|&(i, j, v)| (d.get(i, j) - v).abs().max((d.get(j, i) - v).abs()))
        .fold(0.0, f64::max);
    check(
        worst <= 1e-10 && hand <= 1e-12,
        format!("identity reduction max deviation {worst:.2e}; hand-expanded m=2 case {hand:.2e}"),
    )
}

/// Exhaustive split search summing Gaussian log-densities point by point.
fn elbow_brute_force(values: &[f64]) -> usize {
    let p = values.len();
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let mut best = (0, f64::NEG_INFINITY);
    for q in 1..=p {
        let (a, b) = values.split_at(q);
        let mean = |s: &[f64]| {
            if s.is_empty() {
                0.0
            } else {
                s.iter().sum::<f64>() / s.len() as f64
            }
        };
        let (ma, mb) = (mean(a), mean(b));
        let ss: f64 = a.iter().map(|v| (v - ma).powi(2)).sum::<f64>()
            + b.iter().map(|v| (v - mb).powi(2)).sum::<f64>();
        let ll = if ss == 0.0 {
            f64::INFINITY
        } else {
            let var = ss / (p - 1 - usize::from(q < p)) as f64;
            a.iter()
                .map(|v| (v, ma))
                .chain(b.iter().map(|v| (v, mb)))
                .map(|(v, m)| -0.5 * (ln2pi + var.ln()) - (v - m).powi(2) / (2.0 * var))
                .sum()
        };
        if ll > best.1 {
            best = (q, ll);
        }
    }
    best.0
}

fn elbow_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let len = rng.random_range(2..=100);
        let k = rng.random_range(1..=len);
        let mut v: Vec<f64> = (0..len)
            .map(|i| {
                let base = if i < k { 10.0 } else { 1.0 };
                base * rng.random_range(0.2..1.0f64) + rng.random_range(0.0..0.5)
            })
            .collect();
        v.sort_by(|a, b| b.total_cmp(a));
        let got = detect_elbow(&v).map_err(|e| e.to_string())?;
        if got != elbow_brute_force(&v) {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0,
        format!("1000 lists, {mismatches} index mismatches"),
    )
}

fn run_pipeline(dir: &Path) -> Result<(), String> {
    let bin = env!("CARGO_BIN_EXE_dkps");
    let steps: [&[&str]; 8] = [
        &[
            "simulate",
            "--models",
            "5",
            "--queries",
            "50",
            "--dim",
            "4",
            "--r",
            "10",
            "--seed",
            "7",
            "--out",
            "ds",
        ],
        &["summarize", "ds", "--out", "summary.csv"],
        &["distance", "ds", "--out", "d.csv"],
        &["mds", "d.csv", "--dim", "auto", "--out", "mds"],
        &["report", "distance_heatmap", "d.csv", "--out", "report"],
        &["report", "scree", "d.csv", "--out", "report"],
        &["report", "dkps_pairs", "ds", "--out", "report"],
        &[
            "distance",
            "ds",
            "--format",
            "svg",
            "--out",
            "report/heatmap_direct.svg",
        ],
    ];
    for args in steps {
        let out = Command::new(bin)
            .args(args)
            .current_dir(dir)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "`dkps {}` failed: {}",
                args.join(" "),
                String::from_utf8_lossy(&out.stderr)
            ));
        }
    }
    Ok(())
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(root, &p, out);
        } else {
            out.push((
                p.strip_prefix(root).unwrap().display().to_string(),
                fs::read(&p).unwrap(),
            ));
        }
    }
}

fn end_to_end_determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_pipeline(a.path())?;
    run_pipeline(b.path())?;
    let (mut fa, mut fb) = (Vec::new(), Vec::new());
    collect_files(a.path(), a.path(), &mut fa);
    collect_files(b.path(), b.path(), &mut fb);
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    check(
        !fa.is_empty() && fa == fb,
        format!("{} files compared: {}", fa.len(), names.join(", ")),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("MDS recovery", mds_recovery),
        ("DKPS consistency", dkps_consistency),
        ("Bias/variance oracle", biasvar_oracle),
        ("Summarization oracle", summary_oracle),
        ("Hull containment oracle", hull_oracle),
        (
            "Hull-experiment monotonicity and invariance",
            hull_monotonicity,
        ),
        ("CPO gradient check", gradient_check),
        ("beta = 0 equivalence", beta_zero_equivalence),
        ("Sigma_l inflation", sigma_l_inflation),
        ("Mahalanobis identity reduction", mahalanobis_reduction),
        ("Elbow oracle", elbow_oracle),
        ("End-to-end determinism", end_to_end_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{took:.2?}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{took:.2?}]");
            }
        }
    }
    println!("{} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
