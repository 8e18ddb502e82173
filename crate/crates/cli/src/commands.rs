use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dkps::cpo::{
    cpo_bias_variance, cpo_fit_all, cpo_loss_terms, mahalanobis_dkps, mle_fit, CpoConfig,
    CpoFitResult, GaussianPairModel, SentenceModel, TripletBatch,
};
use dkps::estimators::{bias_variance, BiasVarianceRecord};
use dkps::geometry::{
    hull_experiment, HullExperimentConfig, HullExperimentResult, PairedClouds, Point,
};
use dkps::io::{self, dataset_from_triplets, numbered_queries, read_matrix, tables, Split};
use dkps::linalg::{pca_fit, pca_transform, Matrix};
use dkps::report::{self, ReportInput, ReportKind};
use dkps::simulator::{
    sim_roster, simulate, simulate_paired_clouds, simulate_triplets, BatchProfile, CloudMap,
    MeanLayout, NoiseKind, SimConfig,
};
use dkps::{
    distance_matrix, perspective_space, Dim, DistanceMatrix, EmbeddingDataset, Error, ErrorClass,
    Source,
};
use serde::Serialize;

use crate::args::*;

#[derive(Debug)]
pub enum CliError {
    /// Bad flag values or combinations.
    Usage(String),
    /// Unreadable input that is not covered by a library error.
    Data(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Core(e) => match e.class() {
                ErrorClass::Data => 2,
                ErrorClass::Numerical => 3,
            },
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Usage(m) => format!("error: {m}"),
            CliError::Data(m) => format!("error[data]: {m}"),
            CliError::Core(e) => format!("error[{}]: {e}", e.code()),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

struct Globals {
    seed: u64,
    dim: Option<String>,
    out: Option<PathBuf>,
    format: Option<Format>,
}

impl Globals {
    fn format(&self, default: Format, allowed: &[Format]) -> CliResult<Format> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            let names: Vec<&str> = allowed.iter().map(|f| format_name(*f)).collect();
            Err(CliError::Usage(format!(
                "--format {} is not supported here (expected {})",
                format_name(f),
                names.join(" or ")
            )))
        }
    }

    fn dim_count(&self, default: usize) -> CliResult<usize> {
        match &self.dim {
            None => Ok(default),
            Some(s) => s.parse::<usize>().ok().filter(|&d| d >= 1).ok_or_else(|| {
                CliError::Usage(format!("--dim expects a positive integer, got `{s}`"))
            }),
        }
    }

    fn dim_or_auto(&self, default: Dim) -> CliResult<Dim> {
        match &self.dim {
            None => Ok(default),
            Some(s) => match s.parse::<Dim>() {
                Ok(Dim::Fixed(0)) | Err(_) => Err(CliError::Usage(format!(
                    "--dim expects `auto` or a positive integer, got `{s}`"
                ))),
                Ok(d) => Ok(d),
            },
        }
    }

    /// Writes to `--out` or, without it, to standard output.
    fn emit(&self, text: &str) -> CliResult {
        match &self.out {
            Some(p) => tables::write_text(p, text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    fn require_out(&self, what: &str) -> CliResult<PathBuf> {
        self.out
            .clone()
            .ok_or_else(|| CliError::Usage(format!("--out <DIR> is required for {what}")))
    }
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
        Format::Svg => "svg",
    }
}

fn json<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::Core(Error::MissingFile(path.to_path_buf())),
        _ => CliError::Core(Error::Io(e)),
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn is_dataset(path: &Path) -> bool {
    path.is_dir() || path.extension().is_some_and(|e| e == "toml")
}

fn distances_of(ds: &EmbeddingDataset) -> CliResult<DistanceMatrix> {
    Ok(distance_matrix(&ds.summaries()?)?)
}

/// A distance CSV, or the distances of a dataset.
fn load_distances(path: &Path) -> CliResult<DistanceMatrix> {
    if is_dataset(path) {
        distances_of(&io::load_dataset(path)?)
    } else {
        Ok(tables::read_distance_csv(path)?)
    }
}

fn distance_output(g: &Globals, d: &DistanceMatrix) -> CliResult {
    match g.format(Format::Csv, &[Format::Csv, Format::Json, Format::Svg])? {
        Format::Csv => g.emit(&tables::distance_csv(d)),
        Format::Json => g.emit(&json(&serde_json::json!({
            "labels": d.labels(),
            "distances": rows_of(d.matrix()),
        }))),
        Format::Svg => g.emit(&report::distance_heatmap(d)?.svg),
    }
}

fn biasvar_output(g: &Globals, records: &[BiasVarianceRecord]) -> CliResult {
    match g.format(Format::Csv, &[Format::Csv, Format::Json, Format::Svg])? {
        Format::Csv => g.emit(&tables::biasvar_csv(records)),
        Format::Json => g.emit(&json(records)),
        Format::Svg => g.emit(&report::biasvar_scatter(records)?.svg),
    }
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(<[f64]>::to_vec).collect()
}

pub fn run(cli: Cli) -> CliResult {
    let g = Globals {
        seed: cli.seed,
        dim: cli.dim,
        out: cli.out,
        format: cli.format,
    };
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&g, &a),
        Command::Summarize(a) => cmd_summarize(&g, &a.input),
        Command::Distance(a) => {
            let ds = io::load_dataset(&a.input)?;
            distance_output(&g, &distances_of(&ds)?)
        }
        Command::Mds(a) => cmd_mds(&g, &a.input),
        Command::Pca(a) => cmd_pca(&g, &a),
        Command::Biasvar(a) => cmd_biasvar(&g, &a),
        Command::HullExp(a) => cmd_hull(&g, &a),
        Command::Cpo(c) => cmd_cpo(&g, c),
        Command::Mdkps(a) => cmd_mdkps(&g, &a),
        Command::Report(a) => cmd_report(&g, &a),
    }
}

fn sim_config(g: &Globals, a: &SimulateArgs, base: SimConfig) -> CliResult<SimConfig> {
    let mut cfg = base;
    cfg.seed = g.seed;
    if let Some(n) = a.models {
        cfg.n_models = n;
    }
    if let Some(m) = a.queries {
        cfg.m_queries = m;
    }
    cfg.embed_dim = g.dim_count(cfg.embed_dim)?;
    if let Some(s) = a.noise_scale {
        cfg.noise_scale = s;
    }
    cfg.noise = match a.noise {
        Noise::Gaussian => NoiseKind::Gaussian,
        Noise::Uniform => NoiseKind::Uniform,
    };
    cfg.mean_layout = match a.layout {
        Layout::Random => MeanLayout::RandomGaussian,
        Layout::Grid => MeanLayout::Grid,
    };
    Ok(cfg)
}

fn cmd_simulate(g: &Globals, a: &SimulateArgs) -> CliResult {
    let dir = g.require_out("simulate")?;
    match a.kind {
        SimKind::Replicates => {
            let mut cfg = sim_config(g, a, SimConfig::default())?;
            if a.batch_ranks > 0 {
                cfg.batch_profile = Some(BatchProfile::graded(a.batch_ranks));
            }
            let (truth, sets) = simulate(&cfg, a.r)?;
            let ds = EmbeddingDataset::new(
                "simulated",
                numbered_queries(cfg.m_queries),
                sim_roster(&cfg)?,
                sets,
                None,
            )?;
            io::save_dataset(&ds, &dir, a.encoding.into())?;
            tables::write_text(
                &dir.join("true_distances.csv"),
                &tables::distance_csv(&truth.delta),
            )?;
            tables::write_text(
                &dir.join("simulation.json"),
                &json(&serde_json::json!({
                    "kind": "replicates",
                    "config": cfg,
                    "replicates": a.r,
                    "true_spectrum": truth.psi.spectrum,
                })),
            )?;
        }
        SimKind::Triplets => {
            let cfg = sim_config(g, a, SimConfig::triplet_default())?;
            let batches = simulate_triplets(&cfg, a.t)?;
            let ds = dataset_from_triplets("simulated_triplets", &batches)?;
            io::save_dataset(&ds, &dir, a.encoding.into())?;
            tables::write_text(
                &dir.join("simulation.json"),
                &json(&serde_json::json!({
                    "kind": "triplets",
                    "config": cfg,
                    "t": a.t,
                })),
            )?;
        }
        SimKind::PairedClouds => {
            let base = SimConfig {
                embed_dim: 2,
                m_queries: 1000,
                ..Default::default()
            };
            let cfg = sim_config(g, a, base)?;
            let map = match a.map {
                MapKind::Identity => CloudMap::Identity,
                MapKind::Rotation => CloudMap::Rotation { theta: a.theta },
                MapKind::RotationNoise => CloudMap::RotationPlusNoise {
                    theta: a.theta,
                    sigma: a.map_sigma,
                },
            };
            let clouds = simulate_paired_clouds(&cfg, map)?;
            tables::write_text(&dir.join("clouds.json"), &json(&clouds))?;
            tables::write_text(
                &dir.join("simulation.json"),
                &json(&serde_json::json!({
                    "kind": "paired_clouds",
                    "config": cfg,
                    "map": map,
                })),
            )?;
        }
    }
    Ok(())
}

fn cmd_summarize(g: &Globals, input: &Path) -> CliResult {
    let ds = io::load_dataset(input)?;
    let summaries = ds.summaries()?;
    match g.format(Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Json => {
            let v: Vec<_> = summaries
                .iter()
                .map(|s| serde_json::json!({ "model": s.model_id, "x": rows_of(&s.x) }))
                .collect();
            g.emit(&json(&v))
        }
        _ => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["model".to_string(), "query_id".to_string()];
            header.extend((1..=ds.embed_dim).map(|k| format!("dim{k}")));
            w.write_record(&header)
                .map_err(|e| CliError::Data(e.to_string()))?;
            for s in &summaries {
                for (q, row) in ds.queries.iter().zip(s.x.row_iter()) {
                    let mut rec = vec![s.model_id.clone(), q.id.clone()];
                    rec.extend(row.iter().map(f64::to_string));
                    w.write_record(&rec)
                        .map_err(|e| CliError::Data(e.to_string()))?;
                }
            }
            let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
            g.emit(&String::from_utf8(bytes).expect("UTF-8 fields"))
        }
    }
}

fn cmd_mds(g: &Globals, input: &Path) -> CliResult {
    let d = load_distances(input)?;
    let psi = perspective_space(&d, g.dim_or_auto(Dim::Auto)?)?;
    let dir = g.out_dir();
    fs::create_dir_all(&dir)?;
    tables::write_text(
        &dir.join("coords.csv"),
        &tables::coords_csv(&psi.labels, &psi.coords),
    )?;
    let spectrum: Vec<f64> = psi.spectrum.iter().map(|v| v.max(0.0)).collect();
    let fig = report::scree(&spectrum, psi.elbow)?;
    tables::write_text(&dir.join("scree.svg"), &fig.svg)?;
    tables::write_text(&dir.join("scree.csv"), &tables::spectrum_csv(&psi.spectrum))?;
    tables::write_text(
        &dir.join("mds.json"),
        &json(&serde_json::json!({
            "dim": psi.dim(),
            "elbow": psi.elbow,
            "labels": psi.labels,
            "spectrum": psi.spectrum,
            "clipped": psi.clipped,
            "clipped_negative_mass": psi.clipped_negative_mass,
        })),
    )?;
    Ok(())
}

fn cmd_pca(g: &Globals, a: &PcaArgs) -> CliResult {
    let (labels, data) = if is_dataset(&a.input) {
        let ds = io::load_dataset(&a.input)?;
        let id = a.model.as_deref().ok_or_else(|| {
            CliError::Usage("--model <ID> is required with a dataset input".into())
        })?;
        let rs = ds
            .model(id)
            .ok_or_else(|| CliError::Usage(format!("--model `{id}` is not in the dataset")))?;
        let x = dkps::summarize(rs)?.x;
        (
            ds.queries.iter().map(|q| q.id.clone()).collect::<Vec<_>>(),
            x,
        )
    } else {
        let m = read_matrix(&a.input)?;
        ((1..=m.rows()).map(|i| i.to_string()).collect(), m)
    };
    let k = g.dim_count(2)?;
    let model = pca_fit(&data, k)?;
    let scores = pca_transform(&model, &data)?;
    match g.format(Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Json => g.emit(&json(&serde_json::json!({
            "mean": model.mean,
            "components": rows_of(&model.components),
            "explained_variance": model.explained_variance,
            "explained_variance_ratio": model.explained_variance_ratio(),
            "labels": labels,
            "scores": rows_of(&scores),
        }))),
        _ => {
            let mut header = vec!["row".to_string()];
            header.extend((1..=k).map(|i| format!("pc{i}")));
            g.emit(&tables::labeled_matrix_csv(&header, &labels, &scores))
        }
    }
}

fn cmd_biasvar(g: &Globals, a: &BiasvarArgs) -> CliResult {
    let ds = io::load_dataset(&a.input)?;
    let reference = ds.reference_model()?;
    let reference_x = dkps::summarize(reference)?.x;
    let want = a.source.map(|s| match s {
        SourceArg::Sequential => Source::Sequential,
        SourceArg::Batch => Source::Batch,
        SourceArg::Other => Source::Other,
    });
    let pool: Vec<_> = ds
        .roster
        .entries()
        .iter()
        .zip(&ds.models)
        .filter(|(e, rs)| rs.model_id != reference.model_id && want.is_none_or(|w| e.source == w))
        .map(|(_, rs)| rs)
        .collect();
    if pool.is_empty() {
        return Err(CliError::Usage("no models match --source".into()));
    }
    let samples: Vec<Matrix> = (0..ds.query_count())
        .map(|j| {
            let blocks: Vec<Matrix> = pool.iter().map(|rs| rs.block(j)).collect();
            let refs: Vec<&Matrix> = blocks.iter().collect();
            Matrix::vstack(&refs)
        })
        .collect::<Result<_, _>>()?;
    let records = bias_variance(&reference_x, &samples, &ds.query_meta())?;
    biasvar_output(g, &records)
}

/// Planar coordinates of a model's summaries: as is for 2 dimensions,
/// otherwise projected onto the top two principal axes of its in-sample rows.
fn planar(ds: &EmbeddingDataset, id: &str) -> CliResult<Vec<Point>> {
    let rs = ds
        .model(id)
        .ok_or_else(|| CliError::Usage(format!("model `{id}` is not in the dataset")))?;
    let x = dkps::summarize(rs)?.x;
    let x = match x.cols() {
        2 => x,
        1 => {
            return Err(CliError::Core(Error::Dimension(
                "hull experiment needs at least 2 dimensions".into(),
            )))
        }
        _ => {
            let model = pca_fit(&x.select_rows(&ds.split_indices(Split::InSample)), 2)?;
            pca_transform(&model, &x)?
        }
    };
    Ok(x.row_iter().map(|r| [r[0], r[1]]).collect())
}

fn cmd_hull(g: &Globals, a: &HullArgs) -> CliResult {
    let clouds: PairedClouds = if is_dataset(&a.input) {
        let ds = io::load_dataset(&a.input)?;
        let (Some(src), Some(tgt)) = (&a.src, &a.tgt) else {
            return Err(CliError::Usage(
                "--src and --tgt are required with a dataset input".into(),
            ));
        };
        let (s, t) = (planar(&ds, src)?, planar(&ds, tgt)?);
        let pick = |pts: &[Point], split| ds.split_indices(split).iter().map(|&j| pts[j]).collect();
        PairedClouds {
            in_src: pick(&s, Split::InSample),
            in_tgt: pick(&t, Split::InSample),
            oos_src: pick(&s, Split::Oos),
            oos_tgt: pick(&t, Split::Oos),
        }
    } else {
        read_json(&a.input)?
    };
    let cfg = HullExperimentConfig {
        repeats: a.repeats,
        sample_size: a.sample_size,
        k_nearest: a.k,
        seed: g.seed,
        ..Default::default()
    };
    let res = hull_experiment(&clouds, &cfg)?;
    if res.skipped > 0 {
        eprintln!(
            "warning: skipped {} of {} repeats with degenerate source hulls",
            res.skipped, a.repeats
        );
    }
    match g.format(Format::Json, &[Format::Csv, Format::Json, Format::Svg])? {
        Format::Json => g.emit(&json(&res)),
        Format::Csv => g.emit(&tables::hull_counts_csv(&res.counts)),
        Format::Svg => g.emit(&report::hull_histogram(&res)?.svg),
    }
}

fn cpo_config(g: &Globals, a: &CpoArgs) -> CliResult<CpoConfig> {
    let cfg = CpoConfig {
        beta: a.beta,
        pairing: a.pairing,
        max_steps: a.max_steps,
        step_size: a.step_size,
        tolerance: a.tolerance,
        cov_floor: a.cov_floor,
        seed: g.seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load_triplets(a: &CpoArgs) -> CliResult<(EmbeddingDataset, Vec<TripletBatch>)> {
    let ds = io::load_dataset(&a.input)?;
    let batches = ds.triplets()?;
    Ok((ds, batches))
}

/// Fits read from `--fits`, aligned to `batches` by sentence id.
fn read_fits(path: &Path, batches: &[TripletBatch]) -> CliResult<Vec<GaussianPairModel>> {
    let fits: Vec<CpoFitResult> = read_json(path)?;
    batches
        .iter()
        .map(|b| {
            fits.iter()
                .find(|f| f.sentence_id == b.sentence_id)
                .map(|f| f.model.clone())
                .ok_or_else(|| {
                    CliError::Core(Error::Alignment(format!(
                        "{} has no fit for sentence `{}`",
                        path.display(),
                        b.sentence_id
                    )))
                })
        })
        .collect()
}

fn fitted_models(
    fits: Option<&Path>,
    batches: &[TripletBatch],
    cfg: &CpoConfig,
) -> CliResult<Vec<GaussianPairModel>> {
    match fits {
        Some(p) => read_fits(p, batches),
        None => Ok(cpo_fit_all(batches, cfg)?
            .into_iter()
            .map(|f| f.model)
            .collect()),
    }
}

#[derive(Serialize)]
struct FitRow<'a> {
    sentence_id: &'a str,
    loss: f64,
    grad_norm: f64,
    steps: usize,
    converged: bool,
    stop_reason: dkps::cpo::StopReason,
    trace_sigma_w: f64,
    trace_sigma_l: f64,
}

fn cmd_cpo(g: &Globals, c: CpoCommand) -> CliResult {
    match c {
        CpoCommand::Fit(a) => {
            let cfg = cpo_config(g, &a)?;
            let (_, batches) = load_triplets(&a)?;
            let fits = cpo_fit_all(&batches, &cfg)?;
            match g.format(Format::Json, &[Format::Json, Format::Csv])? {
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    for f in &fits {
                        w.serialize(FitRow {
                            sentence_id: &f.sentence_id,
                            loss: f.loss,
                            grad_norm: f.grad_norm,
                            steps: f.steps,
                            converged: f.converged,
                            stop_reason: f.stop_reason,
                            trace_sigma_w: f.model.sigma_w.trace(),
                            trace_sigma_l: f.model.sigma_l.trace(),
                        })
                        .map_err(|e| CliError::Data(e.to_string()))?;
                    }
                    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
                    g.emit(&String::from_utf8(bytes).expect("UTF-8 fields"))
                }
                _ => g.emit(&json(&fits)),
            }
        }
        CpoCommand::Loss { cpo: a, fits } => {
            let cfg = cpo_config(g, &a)?;
            let (_, batches) = load_triplets(&a)?;
            let models = match fits {
                Some(p) => read_fits(&p, &batches)?,
                None => batches
                    .iter()
                    .map(|b| mle_fit(b, cfg.cov_floor))
                    .collect::<Result<_, _>>()?,
            };
            #[derive(Serialize)]
            struct Row<'a> {
                sentence_id: &'a str,
                prefer: f64,
                nll: f64,
                total: f64,
            }
            let rows: Vec<Row> = batches
                .iter()
                .zip(&models)
                .map(|(b, m)| {
                    let t = cpo_loss_terms(m, b, &cfg)?;
                    Ok(Row {
                        sentence_id: &b.sentence_id,
                        prefer: t.prefer,
                        nll: t.nll,
                        total: t.total,
                    })
                })
                .collect::<Result<_, Error>>()?;
            match g.format(Format::Csv, &[Format::Csv, Format::Json])? {
                Format::Json => g.emit(&json(&rows)),
                _ => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    for r in &rows {
                        w.serialize(r).map_err(|e| CliError::Data(e.to_string()))?;
                    }
                    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
                    g.emit(&String::from_utf8(bytes).expect("UTF-8 fields"))
                }
            }
        }
        CpoCommand::Biasvar {
            cpo: a,
            fits,
            class,
        } => {
            let cfg = cpo_config(g, &a)?;
            let (ds, batches) = load_triplets(&a)?;
            let models = fitted_models(fits.as_deref(), &batches, &cfg)?;
            let (w, l) = cpo_bias_variance(&models, &batches, &ds.query_meta())?;
            biasvar_output(
                g,
                match class {
                    ClassArg::Preferred => &w,
                    ClassArg::Dispreferred => &l,
                },
            )
        }
    }
}

fn cmd_mdkps(g: &Globals, a: &MdkpsArgs) -> CliResult {
    let cfg = cpo_config(g, &a.cpo)?;
    let (ds, batches) = load_triplets(&a.cpo)?;
    let models = fitted_models(a.fits.as_deref(), &batches, &cfg)?;
    let sentence_models: Vec<SentenceModel> = batches
        .iter()
        .zip(models)
        .map(|(b, model)| SentenceModel {
            sentence_id: b.sentence_id.clone(),
            model,
        })
        .collect();
    let roster = ds.mahalanobis_roster(a.setting)?;
    let d = mahalanobis_dkps(&sentence_models, &batches, a.setting, &roster)?;
    distance_output(g, &d)
}

fn cmd_report(g: &Globals, a: &ReportArgs) -> CliResult {
    let dir = g.out_dir();
    let written = match a.kind {
        ReportKind::BiasvarScatter => {
            let records = tables::read_biasvar_csv(&a.input)?;
            report::emit_report(ReportInput::BiasVariance(&records), &dir)?
        }
        ReportKind::DkpsPairs => {
            if !is_dataset(&a.input) {
                return Err(CliError::Usage(
                    "dkps_pairs needs a dataset input (for the roster)".into(),
                ));
            }
            let ds = io::load_dataset(&a.input)?;
            let d = distances_of(&ds)?;
            let default = (d.len().saturating_sub(1)).clamp(1, 3);
            let psi = perspective_space(&d, g.dim_or_auto(Dim::Fixed(default))?)?;
            report::emit_report(
                ReportInput::Pairs {
                    psi: &psi,
                    roster: &ds.roster,
                },
                &dir,
            )?
        }
        ReportKind::HullHistogram => {
            let res: HullExperimentResult = read_json(&a.input)?;
            report::emit_report(ReportInput::Hull(&res), &dir)?
        }
        ReportKind::DistanceHeatmap => {
            let d = load_distances(&a.input)?;
            report::emit_report(ReportInput::Distances(&d), &dir)?
        }
        ReportKind::Scree => {
            let d = load_distances(&a.input)?;
            let psi = perspective_space(&d, Dim::Auto)?;
            report::emit_report(
                ReportInput::Scree {
                    spectrum: &psi.spectrum.iter().map(|v| v.max(0.0)).collect::<Vec<_>>(),
                    elbow: psi.elbow,
                },
                &dir,
            )?
        }
    };
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}
