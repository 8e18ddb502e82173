//! Single-matrix files: a little-endian binary layout and a CSV layout.
//!
//! Binary: `"DKPS"`, `u32` version (1), `u64` rows, `u64` cols, `u32` element
//! width (4 or 8), then `rows * cols` row-major values, all little-endian.
//! CSV: a `rows,cols` line followed by one line per row.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const MAGIC: [u8; 4] = *b"DKPS";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixEncoding {
    #[default]
    Binary,
    Csv,
}

impl MatrixEncoding {
    pub fn extension(self) -> &'static str {
        match self {
            MatrixEncoding::Binary => "bin",
            MatrixEncoding::Csv => "csv",
        }
    }
}

impl std::str::FromStr for MatrixEncoding {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "binary" | "bin" => Ok(MatrixEncoding::Binary),
            "csv" => Ok(MatrixEncoding::Csv),
            _ => Err(format!(
                "unknown matrix encoding `{s}` (expected binary or csv)"
            )),
        }
    }
}

/// Element width of a binary payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FloatWidth {
    F32,
    #[default]
    F64,
}

impl FloatWidth {
    pub fn bytes(self) -> usize {
        match self {
            FloatWidth::F32 => 4,
            FloatWidth::F64 => 8,
        }
    }
}

pub fn encode_binary(m: &Matrix, width: FloatWidth) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + m.as_slice().len() * width.bytes());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    out.extend_from_slice(&(width.bytes() as u32).to_le_bytes());
    for &v in m.as_slice() {
        match width {
            FloatWidth::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            FloatWidth::F64 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }
    out
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

/// Parses a binary matrix; `path` is only used in error messages.
pub fn decode_binary(bytes: &[u8], path: &Path) -> Result<Matrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::file(
            path,
            format!("truncated header ({} bytes)", bytes.len()),
        ));
    }
    if bytes[..4] != MAGIC {
        return Err(Error::file(path, "bad magic, expected \"DKPS\""));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(Error::file(path, format!("unsupported version {version}")));
    }
    let rows = u64_at(bytes, 8);
    let cols = u64_at(bytes, 16);
    let width = u32_at(bytes, 24) as usize;
    if width != 4 && width != 8 {
        return Err(Error::file(
            path,
            format!("element width {width}, expected 4 or 8"),
        ));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::file(path, format!("empty matrix {rows}x{cols}")));
    }
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(width as u64))
        .filter(|&n| n <= usize::MAX as u64 - HEADER_LEN as u64);
    let payload = bytes.len() - HEADER_LEN;
    if expected != Some(payload as u64) {
        return Err(Error::file(
            path,
            format!("payload is {payload} bytes, header declares {rows}x{cols} of width {width}"),
        ));
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let data: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(width)
        .map(|c| match width {
            4 => f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64,
            _ => f64::from_le_bytes(c.try_into().expect("8 bytes")),
        })
        .collect();
    if let Some(k) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            path: path.to_path_buf(),
            location: format!("row {}, column {}", k / cols + 1, k % cols + 1),
        });
    }
    Matrix::from_vec(rows, cols, data)
}

/// Nine significant digits, printed in the shortest form that reads back
/// to the rounded value.
pub fn format_sig9(v: f64) -> String {
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub fn encode_csv(m: &Matrix) -> String {
    let mut out = format!("{},{}\n", m.rows(), m.cols());
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&v| format_sig9(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses a CSV matrix; `path` is only used in error messages.
pub fn decode_csv(text: &str, path: &Path) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| Error::file(path, e.to_string()))?,
        None => return Err(Error::file(path, "empty file")),
    };
    let dims: Vec<usize> = header.iter().filter_map(|f| f.parse().ok()).collect();
    let [rows, cols] = dims[..] else {
        return Err(Error::file(path, "line 1: expected header `rows,cols`"));
    };
    if header.len() != 2 || rows == 0 || cols == 0 {
        return Err(Error::file(
            path,
            "line 1: expected header `rows,cols` with both > 0",
        ));
    }
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for rec in records {
        let rec = rec.map_err(|e| Error::file(path, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != cols {
            return Err(Error::file(
                path,
                format!("line {line}: {} values, expected {cols}", rec.len()),
            ));
        }
        for field in rec.iter() {
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
        seen += 1;
    }
    if seen != rows {
        return Err(Error::file(
            path,
            format!("{seen} data rows, header declares {rows}"),
        ));
    }
    Matrix::from_vec(rows, cols, data)
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

/// Reads either layout, recognizing the binary one by its magic.
pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(&MAGIC) {
        decode_binary(&bytes, path)
    } else {
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| Error::file(path, "neither a binary matrix nor UTF-8 text"))?;
        decode_csv(text, path)
    }
}

/// Writes 8-byte binary or CSV.
pub fn write_matrix(path: &Path, m: &Matrix, encoding: MatrixEncoding) -> Result<()> {
    match encoding {
        MatrixEncoding::Binary => fs::write(path, encode_binary(m, FloatWidth::F64))?,
        MatrixEncoding::Csv => fs::write(path, encode_csv(m))?,
    }
    Ok(())
}
