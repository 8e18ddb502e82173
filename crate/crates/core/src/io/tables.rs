//! CSV report tables. Floats are written in shortest round-trip form.
//!
//! | table      | header                                                    |
//! |------------|-----------------------------------------------------------|
//! | distances  | `model,<label 1>,...,<label n>`                           |
//! | coords     | `model,dim1,...,dimk`                                     |
//! | bias/var   | `query_id,word_count,bias_sq,variance,replicate_count`    |
//! | hull counts| `repeat,count`                                            |
//! | spectrum   | `index,eigenvalue`                                        |

use std::fs;
use std::path::Path;

use super::matrix_file::read_bytes;
use crate::dkps::DistanceMatrix;
use crate::error::{Error, Result};
use crate::estimators::BiasVarianceRecord;
use crate::linalg::Matrix;

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e
        .position()
        .map(|p| format!("line {}: ", p.line()))
        .unwrap_or_default();
    Error::file(path, format!("{line}{e}"))
}

fn to_string(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 input")
}

/// `header` followed by `label, row...` lines.
pub fn labeled_matrix_csv(header: &[String], labels: &[String], m: &Matrix) -> String {
    let mut rows = vec![header.to_vec()];
    for (label, row) in labels.iter().zip(m.row_iter()) {
        let mut r = vec![label.clone()];
        r.extend(row.iter().map(|v| v.to_string()));
        rows.push(r);
    }
    to_string(rows)
}

pub fn distance_csv(d: &DistanceMatrix) -> String {
    let mut header = vec!["model".to_string()];
    header.extend(d.labels().iter().cloned());
    labeled_matrix_csv(&header, d.labels(), d.matrix())
}

pub fn coords_csv(labels: &[String], coords: &Matrix) -> String {
    let mut header = vec!["model".to_string()];
    header.extend((1..=coords.cols()).map(|k| format!("dim{k}")));
    labeled_matrix_csv(&header, labels, coords)
}

pub fn spectrum_csv(values: &[f64]) -> String {
    let mut rows = vec![vec!["index".to_string(), "eigenvalue".to_string()]];
    rows.extend(
        values
            .iter()
            .enumerate()
            .map(|(i, v)| vec![(i + 1).to_string(), v.to_string()]),
    );
    to_string(rows)
}

pub fn hull_counts_csv(counts: &[usize]) -> String {
    let mut rows = vec![vec!["repeat".to_string(), "count".to_string()]];
    rows.extend(
        counts
            .iter()
            .enumerate()
            .map(|(i, c)| vec![(i + 1).to_string(), c.to_string()]),
    );
    to_string(rows)
}

pub fn biasvar_csv(records: &[BiasVarianceRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if records.is_empty() {
        w.write_record([
            "query_id",
            "word_count",
            "bias_sq",
            "variance",
            "replicate_count",
        ])
        .expect("in-memory write");
    }
    for r in records {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 input")
}

/// Reads a table written by [`biasvar_csv`].
pub fn read_biasvar_csv(path: &Path) -> Result<Vec<BiasVarianceRecord>> {
    let bytes = read_bytes(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    reader
        .deserialize()
        .map(|r| r.map_err(|e| csv_err(path, e)))
        .collect()
}

/// Reads `model,<labels>` with one labelled row per model.
pub fn read_labeled_matrix(path: &Path) -> Result<(Vec<String>, Vec<String>, Matrix)> {
    let bytes = read_bytes(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .skip(1)
        .map(str::to_string)
        .collect();
    let cols = header.len();
    let mut labels = Vec::new();
    let mut data = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        labels.push(rec[0].to_string());
        for field in rec.iter().skip(1) {
            let v: f64 = field.parse().map_err(|_| {
                Error::file(path, format!("line {line}: `{field}` is not a number"))
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    path: path.to_path_buf(),
                    location: format!("line {line}"),
                });
            }
            data.push(v);
        }
    }
    if labels.is_empty() || cols == 0 {
        return Err(Error::file(path, "no data rows"));
    }
    let m = Matrix::from_vec(labels.len(), cols, data)?;
    Ok((header, labels, m))
}

/// Reads a distance table written by [`distance_csv`].
pub fn read_distance_csv(path: &Path) -> Result<DistanceMatrix> {
    let (header, labels, m) = read_labeled_matrix(path)?;
    if header != labels {
        return Err(Error::file(path, "row labels do not match the header"));
    }
    DistanceMatrix::new(labels, m)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}
