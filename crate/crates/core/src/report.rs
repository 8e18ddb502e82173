//! Deterministic SVG figures with their underlying CSV tables.
//!
//! Every figure is drawn on a fixed canvas with a fixed palette, and numbers
//! are printed with fixed precision, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dkps::{DistanceMatrix, ModelRoster, PerspectiveSpace, Source};
use crate::error::{Error, Result};
use crate::estimators::{fit_gaussian, BiasVarianceRecord};
use crate::geometry::HullExperimentResult;
use crate::io::tables;
use crate::linalg::{sym_eigen, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    BiasvarScatter,
    DkpsPairs,
    HullHistogram,
    DistanceHeatmap,
    Scree,
}

impl ReportKind {
    pub fn name(self) -> &'static str {
        match self {
            ReportKind::BiasvarScatter => "biasvar_scatter",
            ReportKind::DkpsPairs => "dkps_pairs",
            ReportKind::HullHistogram => "hull_histogram",
            ReportKind::DistanceHeatmap => "distance_heatmap",
            ReportKind::Scree => "scree",
        }
    }
}

impl std::str::FromStr for ReportKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.replace('-', "_").as_str() {
            "biasvar_scatter" => Ok(ReportKind::BiasvarScatter),
            "dkps_pairs" => Ok(ReportKind::DkpsPairs),
            "hull_histogram" => Ok(ReportKind::HullHistogram),
            "distance_heatmap" => Ok(ReportKind::DistanceHeatmap),
            "scree" => Ok(ReportKind::Scree),
            _ => Err(format!(
                "unknown report kind `{s}` (expected biasvar_scatter, dkps_pairs, \
                 hull_histogram, distance_heatmap or scree)"
            )),
        }
    }
}

/// Analysis results to draw.
#[derive(Debug, Clone, Copy)]
pub enum ReportInput<'a> {
    BiasVariance(&'a [BiasVarianceRecord]),
    Pairs {
        psi: &'a PerspectiveSpace,
        roster: &'a ModelRoster,
    },
    Hull(&'a HullExperimentResult),
    Distances(&'a DistanceMatrix),
    Scree {
        spectrum: &'a [f64],
        elbow: usize,
    },
}

impl ReportInput<'_> {
    pub fn kind(&self) -> ReportKind {
        match self {
            ReportInput::BiasVariance(_) => ReportKind::BiasvarScatter,
            ReportInput::Pairs { .. } => ReportKind::DkpsPairs,
            ReportInput::Hull(_) => ReportKind::HullHistogram,
            ReportInput::Distances(_) => ReportKind::DistanceHeatmap,
            ReportInput::Scree { .. } => ReportKind::Scree,
        }
    }
}

/// An SVG document and the CSV table it was drawn from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Figure {
    pub kind: ReportKind,
    pub svg: String,
    pub csv: String,
}

pub fn render(input: ReportInput<'_>) -> Result<Figure> {
    match input {
        ReportInput::BiasVariance(r) => biasvar_scatter(r),
        ReportInput::Pairs { psi, roster } => dkps_pairs(psi, roster),
        ReportInput::Hull(h) => hull_histogram(h),
        ReportInput::Distances(d) => distance_heatmap(d),
        ReportInput::Scree { spectrum, elbow } => scree(spectrum, elbow),
    }
}

/// Writes `<kind>.svg` and `<kind>.csv` into `dir`.
pub fn emit_report(input: ReportInput<'_>, dir: &Path) -> Result<Vec<PathBuf>> {
    let fig = render(input)?;
    fs::create_dir_all(dir)?;
    let svg = dir.join(format!("{}.svg", fig.kind.name()));
    let csv = dir.join(format!("{}.csv", fig.kind.name()));
    fs::write(&svg, &fig.svg)?;
    fs::write(&csv, &fig.csv)?;
    Ok(vec![svg, csv])
}

const FONT: &str = "font-family=\"sans-serif\"";
const GRAY: &str = "#888888";
/// Word-count quartiles, lowest first.
const QUARTILE_COLORS: [&str; 4] = ["#1b9e77", "#7570b3", "#d95f02", "#e7298a"];

fn source_color(s: Source) -> &'static str {
    match s {
        Source::Human => "#000000",
        Source::Sequential => "#1f77b4",
        Source::Batch => "#d62728",
        Source::Other => "#2ca02c",
    }
}

/// Two decimals, without a negative zero.
fn n(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-2..1e4).contains(&a) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" {
            "0".into()
        } else {
            s.to_string()
        }
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Svg {
    buf: String,
}

impl Svg {
    fn new(w: u32, h: u32) -> Self {
        let mut buf = String::new();
        let _ = writeln!(
            buf,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
        );
        let _ = writeln!(
            buf,
            "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>"
        );
        Svg { buf }
    }

    fn text(&mut self, x: f64, y: f64, size: u32, anchor: &str, fill: &str, s: &str) {
        let _ = writeln!(
            self.buf,
            "<text x=\"{}\" y=\"{}\" {FONT} font-size=\"{size}\" text-anchor=\"{anchor}\" fill=\"{fill}\">{}</text>",
            n(x),
            n(y),
            escape(s)
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        let _ = writeln!(
            self.buf,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\" stroke-width=\"{}\"/>",
            n(x1),
            n(y1),
            n(x2),
            n(y2),
            n(width)
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        let _ = writeln!(
            self.buf,
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\"/>",
            n(x),
            n(y),
            n(r)
        );
    }

    fn ring(&mut self, x: f64, y: f64, r: f64, stroke: &str) {
        let _ = writeln!(
            self.buf,
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"2.00\"/>",
            n(x),
            n(y),
            n(r)
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.buf,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\"/>",
            n(x),
            n(y),
            n(w),
            n(h)
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str) {
        let p: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{},{}", n(x), n(y)))
            .collect();
        let _ = writeln!(
            self.buf,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.50\"/>",
            p.join(" ")
        );
    }

    #[allow(clippy::too_many_arguments)]
    fn ellipse(
        &mut self,
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
        angle_deg: f64,
        stroke: &str,
        dash: bool,
    ) {
        let dash = if dash {
            " stroke-dasharray=\"4 3\""
        } else {
            ""
        };
        let _ = writeln!(
            self.buf,
            "<ellipse cx=\"{}\" cy=\"{}\" rx=\"{}\" ry=\"{}\" transform=\"rotate({} {} {})\" \
             fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.20\"{dash}/>",
            n(cx),
            n(cy),
            n(rx),
            n(ry),
            n(angle_deg),
            n(cx),
            n(cy)
        );
    }

    fn finish(mut self) -> String {
        self.buf.push_str("</svg>\n");
        self.buf
    }
}

/// Maps a data range onto a pixel range.
#[derive(Clone, Copy)]
struct Scale {
    lo: f64,
    hi: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    fn fit(values: impl Iterator<Item = f64>, p0: f64, p1: f64) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        let pad = if hi > lo {
            0.05 * (hi - lo)
        } else {
            lo.abs().max(1.0) * 0.5
        };
        Scale {
            lo: lo - pad,
            hi: hi + pad,
            p0,
            p1,
        }
    }

    fn px(&self, v: f64) -> f64 {
        self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)
    }

    /// Pixel length of a data length.
    fn len(&self, d: f64) -> f64 {
        d / (self.hi - self.lo) * (self.p1 - self.p0).abs()
    }
}

/// Frame, ticks and axis titles for a plot area.
fn axes(svg: &mut Svg, xs: Scale, ys: Scale, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (xs.p0, xs.p1, ys.p0, ys.p1);
    svg.line(x0, y0, x1, y0, "#000000", 1.0);
    svg.line(x0, y0, x0, y1, "#000000", 1.0);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let vx = xs.lo + f * (xs.hi - xs.lo);
        let px = xs.px(vx);
        svg.line(px, y0, px, y0 + 4.0, "#000000", 1.0);
        svg.text(px, y0 + 16.0, 10, "middle", "#000000", &tick_label(vx));
        let vy = ys.lo + f * (ys.hi - ys.lo);
        let py = ys.px(vy);
        svg.line(x0 - 4.0, py, x0, py, "#000000", 1.0);
        svg.text(x0 - 6.0, py + 3.0, 10, "end", "#000000", &tick_label(vy));
    }
    svg.text((x0 + x1) / 2.0, y0 + 34.0, 12, "middle", "#000000", xlabel);
    let my = (y0 + y1) / 2.0;
    let _ = writeln!(
        svg.buf,
        "<text x=\"{}\" y=\"{}\" {FONT} font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>",
        n(x0 - 44.0),
        n(my),
        n(x0 - 44.0),
        n(my),
        escape(ylabel)
    );
}

/// Quartile (0..4) of each word count; `None` stays `None`.
fn quartiles(counts: &[Option<u32>]) -> Vec<Option<usize>> {
    let mut known: Vec<u32> = counts.iter().flatten().copied().collect();
    known.sort_unstable();
    if known.is_empty() {
        return vec![None; counts.len()];
    }
    let cut = |f: f64| known[((known.len() - 1) as f64 * f).round() as usize];
    let (q1, q2, q3) = (cut(0.25), cut(0.5), cut(0.75));
    counts
        .iter()
        .map(|c| {
            c.map(|c| {
                if c <= q1 {
                    0
                } else if c <= q2 {
                    1
                } else if c <= q3 {
                    2
                } else {
                    3
                }
            })
        })
        .collect()
}

/// Squared bias against variance, one point per query, colored by
/// word-count quartile.
pub fn biasvar_scatter(records: &[BiasVarianceRecord]) -> Result<Figure> {
    if records.is_empty() {
        return Err(Error::Validation(
            "bias/variance scatter needs at least one record".into(),
        ));
    }
    let (w, h) = (640, 480);
    let mut svg = Svg::new(w, h);
    let xs = Scale::fit(records.iter().map(|r| r.bias_sq), 70.0, 500.0);
    let ys = Scale::fit(records.iter().map(|r| r.variance), 420.0, 50.0);
    svg.text(
        320.0,
        28.0,
        14,
        "middle",
        "#000000",
        "Squared bias and variance per query",
    );
    axes(&mut svg, xs, ys, "squared bias", "variance");
    let q = quartiles(&records.iter().map(|r| r.word_count).collect::<Vec<_>>());
    for (r, q) in records.iter().zip(&q) {
        let color = q.map_or(GRAY, |k| QUARTILE_COLORS[k]);
        svg.circle(xs.px(r.bias_sq), ys.px(r.variance), 3.0, color);
    }
    let names = [
        "word count Q1",
        "word count Q2",
        "word count Q3",
        "word count Q4",
    ];
    for (k, name) in names.iter().enumerate() {
        let y = 70.0 + 18.0 * k as f64;
        svg.circle(522.0, y - 4.0, 4.0, QUARTILE_COLORS[k]);
        svg.text(532.0, y, 11, "start", "#000000", name);
    }
    if q.iter().any(Option::is_none) {
        svg.circle(522.0, 70.0 + 72.0 - 4.0, 4.0, GRAY);
        svg.text(532.0, 70.0 + 72.0, 11, "start", "#000000", "no word count");
    }
    Ok(Figure {
        kind: ReportKind::BiasvarScatter,
        svg: svg.finish(),
        csv: tables::biasvar_csv(records),
    })
}

/// Pairwise panels of the first three perspective-space dimensions. Batch
/// models are labeled by rank, humans `H`/`H1`/`H2`; sequential models are
/// drawn as dots with a fitted-Gaussian ellipse at 1σ and 2σ and a mean
/// marker.
pub fn dkps_pairs(psi: &PerspectiveSpace, roster: &ModelRoster) -> Result<Figure> {
    let n_models = psi.labels.len();
    if n_models == 0 {
        return Err(Error::Validation(
            "pairs plot needs at least one model".into(),
        ));
    }
    if roster.len() != n_models {
        return Err(Error::Alignment(format!(
            "roster has {} entries for {n_models} embedded models",
            roster.len()
        )));
    }
    if psi.dim() < 2 {
        return Err(Error::Validation(format!(
            "pairs plot needs at least 2 dimensions, got {}",
            psi.dim()
        )));
    }
    let panels: Vec<(usize, usize)> = if psi.dim() >= 3 {
        vec![(0, 1), (0, 2), (1, 2)]
    } else {
        vec![(0, 1)]
    };
    let labels = roster.display_labels();
    let sources: Vec<Source> = roster.entries().iter().map(|e| e.source).collect();
    let seq: Vec<usize> = (0..n_models)
        .filter(|&i| sources[i] == Source::Sequential)
        .collect();

    let panel = 300.0;
    let w = (panels.len() as f64 * (panel + 40.0) + 40.0) as u32;
    let h = 380;
    let mut svg = Svg::new(w, h);
    svg.text(
        w as f64 / 2.0,
        24.0,
        14,
        "middle",
        "#000000",
        "Perspective space, pairs of leading dimensions",
    );
    for (p, &(a, b)) in panels.iter().enumerate() {
        let left = 60.0 + p as f64 * (panel + 40.0);
        let xs = Scale::fit(
            (0..n_models).map(|i| psi.coords[(i, a)]),
            left,
            left + panel - 40.0,
        );
        let ys = Scale::fit((0..n_models).map(|i| psi.coords[(i, b)]), 320.0, 60.0);
        axes(
            &mut svg,
            xs,
            ys,
            &format!("dim {}", a + 1),
            &format!("dim {}", b + 1),
        );

        if seq.len() >= 2 {
            let pts = Matrix::from_vec(
                seq.len(),
                2,
                seq.iter()
                    .flat_map(|&i| [psi.coords[(i, a)], psi.coords[(i, b)]])
                    .collect(),
            )?;
            let g = fit_gaussian(&pts)?;
            // Covariance in screen pixels; screen y points down.
            let (sx, sy) = (xs.len(1.0), -ys.len(1.0));
            let c = &g.covariance;
            let px_cov = Matrix::from_rows(&[
                vec![sx * sx * c[(0, 0)], sx * sy * c[(0, 1)]],
                vec![sx * sy * c[(1, 0)], sy * sy * c[(1, 1)]],
            ])?;
            let spec = sym_eigen(&px_cov)?;
            let v = spec.eigenvectors.col(0);
            let angle = v[1].atan2(v[0]).to_degrees();
            let (cx, cy) = (xs.px(g.mean[0]), ys.px(g.mean[1]));
            for (k, dash) in [(1.0, false), (2.0, true)] {
                let rx = k * spec.eigenvalues[0].max(0.0).sqrt();
                let ry = k * spec.eigenvalues[1].max(0.0).sqrt();
                svg.ellipse(
                    cx,
                    cy,
                    rx,
                    ry,
                    angle,
                    source_color(Source::Sequential),
                    dash,
                );
            }
            let c = source_color(Source::Sequential);
            svg.line(cx - 6.0, cy, cx + 6.0, cy, c, 2.0);
            svg.line(cx, cy - 6.0, cx, cy + 6.0, c, 2.0);
        }
        for i in 0..n_models {
            let (x, y) = (xs.px(psi.coords[(i, a)]), ys.px(psi.coords[(i, b)]));
            let color = source_color(sources[i]);
            match sources[i] {
                Source::Sequential => svg.circle(x, y, 2.5, color),
                _ => svg.text(x, y + 4.0, 12, "middle", color, &labels[i]),
            }
        }
    }

    let mut rows = vec![{
        let mut hdr = vec!["model".to_string(), "label".into(), "source".into()];
        hdr.extend((1..=psi.dim()).map(|k| format!("dim{k}")));
        hdr
    }];
    for i in 0..n_models {
        let mut r = vec![
            psi.labels[i].clone(),
            labels[i].clone(),
            sources[i].to_string(),
        ];
        r.extend(psi.coords.row(i).iter().map(|v| v.to_string()));
        rows.push(r);
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for r in rows {
        wtr.write_record(&r).expect("in-memory write");
    }
    let csv = String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("UTF-8");
    Ok(Figure {
        kind: ReportKind::DkpsPairs,
        svg: svg.finish(),
        csv,
    })
}

/// Histogram of per-repeat hull-membership counts with `mean±stddev` in the title.
pub fn hull_histogram(res: &HullExperimentResult) -> Result<Figure> {
    if res.counts.is_empty() {
        return Err(Error::Validation(
            "hull histogram needs at least one completed repeat".into(),
        ));
    }
    let k = res
        .k_nearest
        .max(*res.counts.iter().max().expect("non-empty"));
    let mut freq = vec![0usize; k + 1];
    for &c in &res.counts {
        freq[c] += 1;
    }
    let top = *freq.iter().max().expect("non-empty") as f64;
    let mut svg = Svg::new(640, 480);
    let title = format!("The mean is {:.2}±{:.2}", res.mean, res.stddev);
    svg.text(320.0, 28.0, 14, "middle", "#000000", &title);
    let xs = Scale {
        lo: -0.5,
        hi: k as f64 + 0.5,
        p0: 70.0,
        p1: 600.0,
    };
    let ys = Scale {
        lo: 0.0,
        hi: top * 1.05,
        p0: 420.0,
        p1: 50.0,
    };
    let bar = xs.len(1.0) * 0.8;
    for (c, &f) in freq.iter().enumerate() {
        if f > 0 {
            let y = ys.px(f as f64);
            svg.rect(xs.px(c as f64) - bar / 2.0, y, bar, ys.p0 - y, "#4c72b0");
        }
    }
    axes(
        &mut svg,
        xs,
        ys,
        &format!(
            "members among the {} nearest out-of-sample points",
            res.k_nearest
        ),
        "repeats",
    );
    Ok(Figure {
        kind: ReportKind::HullHistogram,
        svg: svg.finish(),
        csv: tables::hull_counts_csv(&res.counts),
    })
}

fn heat_color(f: f64) -> String {
    let f = f.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * f).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(255.0, 8.0),
        lerp(255.0, 48.0),
        lerp(255.0, 107.0)
    )
}

/// Cell grid of a distance matrix, white (0) to dark blue (max).
pub fn distance_heatmap(d: &DistanceMatrix) -> Result<Figure> {
    let k = d.len();
    if k == 0 {
        return Err(Error::Validation(
            "heatmap needs a non-empty distance matrix".into(),
        ));
    }
    let mut svg = Svg::new(640, 640);
    svg.text(320.0, 28.0, 14, "middle", "#000000", "Pairwise distances");
    let max = d.matrix().max_abs();
    let (x0, y0, side) = (100.0, 60.0, 480.0);
    let cell = side / k as f64;
    for i in 0..k {
        for j in 0..k {
            let f = if max > 0.0 { d.get(i, j) / max } else { 0.0 };
            svg.rect(
                x0 + j as f64 * cell,
                y0 + i as f64 * cell,
                cell,
                cell,
                &heat_color(f),
            );
        }
    }
    let size = (cell * 0.6).clamp(6.0, 12.0) as u32;
    for (i, label) in d.labels().iter().enumerate() {
        let c = i as f64 * cell + cell / 2.0;
        svg.text(
            x0 - 4.0,
            y0 + c + size as f64 / 3.0,
            size,
            "end",
            "#000000",
            label,
        );
        svg.text(
            x0 + c,
            y0 + side + 4.0 + size as f64,
            size,
            "middle",
            "#000000",
            label,
        );
    }
    let band = side / 4.0;
    for s in 0..4 {
        let y = y0 + side - (s + 1) as f64 * band;
        svg.rect(
            x0 + side + 20.0,
            y,
            16.0,
            band,
            &heat_color((s as f64 + 0.5) / 4.0),
        );
    }
    for s in 0..=4 {
        let f = s as f64 / 4.0;
        svg.text(
            x0 + side + 40.0,
            y0 + side - f * side + 4.0,
            10,
            "start",
            "#000000",
            &tick_label(f * max),
        );
    }
    Ok(Figure {
        kind: ReportKind::DistanceHeatmap,
        svg: svg.finish(),
        csv: tables::distance_csv(d),
    })
}

/// Eigenvalues against index with the elbow (1-based) ringed in red.
pub fn scree(spectrum: &[f64], elbow: usize) -> Result<Figure> {
    if spectrum.is_empty() {
        return Err(Error::Validation(
            "scree plot needs at least one eigenvalue".into(),
        ));
    }
    if elbow < 1 || elbow > spectrum.len() {
        return Err(Error::Range {
            what: "elbow",
            value: elbow,
            range: format!("[1, {}]", spectrum.len()),
        });
    }
    let mut svg = Svg::new(640, 480);
    svg.text(
        320.0,
        28.0,
        14,
        "middle",
        "#000000",
        &format!("Scree plot, elbow at {elbow}"),
    );
    let xs = Scale::fit((1..=spectrum.len()).map(|i| i as f64), 70.0, 600.0);
    let ys = Scale::fit(spectrum.iter().copied(), 420.0, 50.0);
    axes(&mut svg, xs, ys, "index", "eigenvalue");
    let pts: Vec<(f64, f64)> = spectrum
        .iter()
        .enumerate()
        .map(|(i, &v)| (xs.px((i + 1) as f64), ys.px(v)))
        .collect();
    svg.polyline(&pts, "#333333");
    for &(x, y) in &pts {
        svg.circle(x, y, 3.0, "#333333");
    }
    let (ex, ey) = pts[elbow - 1];
    svg.ring(ex, ey, 8.0, "#d62728");
    svg.text(
        ex + 10.0,
        ey - 10.0,
        12,
        "start",
        "#d62728",
        &format!("elbow = {elbow}"),
    );
    Ok(Figure {
        kind: ReportKind::Scree,
        svg: svg.finish(),
        csv: tables::spectrum_csv(spectrum),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dkps::{perspective_space, roster_preset, Dim};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn psi21() -> (PerspectiveSpace, ModelRoster) {
        let roster = roster_preset("in_sample_21").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec<f64>> = (0..21)
            .map(|_| (0..4).map(|_| rng.random::<f64>()).collect())
            .collect();
        let mut d = Matrix::zeros(21, 21);
        for i in 0..21 {
            for j in 0..21 {
                d[(i, j)] = crate::linalg::sq_dist(&pts[i], &pts[j]).sqrt();
            }
        }
        let labels = roster
            .entries()
            .iter()
            .map(|e| e.model_id.clone())
            .collect();
        let psi =
            perspective_space(&DistanceMatrix::new(labels, d).unwrap(), Dim::Fixed(3)).unwrap();
        (psi, roster)
    }

    fn text_labels(svg: &str) -> Vec<String> {
        svg.lines()
            .filter(|l| {
                l.starts_with("<text") && l.contains("font-size=\"12\"") && !l.contains("rotate")
            })
            .filter_map(|l| {
                l.split('>')
                    .nth(1)
                    .map(|s| s.trim_end_matches("</text").to_string())
            })
            .collect()
    }

    #[test]
    fn pairs_plot_has_three_panels_and_expected_labels() {
        let (psi, roster) = psi21();
        let fig = dkps_pairs(&psi, &roster).unwrap();
        assert_eq!(fig.svg.matches("dim 1</text>").count(), 2);
        assert_eq!(fig.svg.matches("<ellipse").count(), 6);
        let mut labels: Vec<String> = text_labels(&fig.svg)
            .into_iter()
            .filter(|l| !l.starts_with("dim "))
            .collect();
        labels.sort();
        labels.dedup();
        let mut want: Vec<String> = (1..=10).map(|k| k.to_string()).collect();
        want.push("H".into());
        want.sort();
        assert_eq!(labels, want);
        assert_eq!(fig.csv.lines().count(), 22);
        assert_eq!(dkps_pairs(&psi, &roster).unwrap(), fig);
    }

    #[test]
    fn histogram_title_and_determinism() {
        let res = HullExperimentResult {
            repeats: 4,
            skipped: 0,
            k_nearest: 10,
            counts: vec![4, 5, 6, 7],
            mean: 5.5,
            stddev: 1.2909944487358056,
            center_rule: "vertex_mean".into(),
        };
        let a = hull_histogram(&res).unwrap();
        assert!(a.svg.contains("The mean is 5.50±1.29"));
        assert_eq!(a.svg.matches("fill=\"#4c72b0\"").count(), 4);
        assert_eq!(hull_histogram(&res).unwrap(), a);
        assert!(a.csv.starts_with("repeat,count\n1,4\n"));
    }

    #[test]
    fn scree_marks_the_elbow() {
        let fig = scree(&[10.0, 9.5, 0.1, 0.09, 0.08], 2).unwrap();
        assert!(fig.svg.contains("stroke=\"#d62728\""));
        assert!(fig.svg.contains("elbow = 2"));
        assert!(matches!(scree(&[1.0], 2), Err(Error::Range { .. })));
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(matches!(biasvar_scatter(&[]), Err(Error::Validation(_))));
        assert!(matches!(scree(&[], 1), Err(Error::Validation(_))));
        let res = HullExperimentResult {
            repeats: 0,
            skipped: 3,
            k_nearest: 10,
            counts: vec![],
            mean: 0.0,
            stddev: 0.0,
            center_rule: "vertex_mean".into(),
        };
        assert!(matches!(hull_histogram(&res), Err(Error::Validation(_))));
    }

    #[test]
    fn quartile_palette() {
        let q = quartiles(&[Some(1), Some(2), Some(3), Some(4), Some(5), None]);
        assert_eq!(q, vec![Some(0), Some(0), Some(1), Some(2), Some(3), None]);
        let recs: Vec<BiasVarianceRecord> = (0..6)
            .map(|i| BiasVarianceRecord {
                query_id: format!("q{i}"),
                word_count: Some(i),
                bias_sq: i as f64,
                variance: 1.0 / (1.0 + i as f64),
                replicate_count: 10,
            })
            .collect();
        let fig = biasvar_scatter(&recs).unwrap();
        assert_eq!(fig.svg.matches("<circle").count(), 6 + 4);
        assert_eq!(biasvar_scatter(&recs).unwrap(), fig);
    }

    #[test]
    fn heatmap_cells() {
        let d = DistanceMatrix::new(
            vec!["a".into(), "b".into()],
            Matrix::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap(),
        )
        .unwrap();
        let fig = distance_heatmap(&d).unwrap();
        assert!(fig.svg.contains("fill=\"#08306b\""));
        assert!(fig.csv.starts_with("model,a,b\n"));
    }
}
