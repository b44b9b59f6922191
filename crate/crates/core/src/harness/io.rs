//! CSV and `binmat` readers and writers.
//!
//! CSV files hold one sample per row. A header row is detected when any of
//! its cells is not a number; a final header column named `label` holds
//! integer class labels (`-1` = unlabeled).
//!
//! `binmat` layout, all integers little-endian:
//!
//! ```text
//! offset 0   b"SAHD"
//! offset 4   version byte 0x01
//! offset 5   u64 rows (feature dimension)
//! offset 13  u64 cols (samples)
//! offset 21  rows*cols f64, column-major
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Result, SahdlError};
use crate::hypergraph::{FeatureMatrix, LabelVector};

pub const BINMAT_MAGIC: &[u8; 4] = b"SAHD";
pub const BINMAT_VERSION: u8 = 0x01;
pub const BINMAT_HEADER_LEN: usize = 21;

#[derive(Debug, Clone)]
pub struct LoadedData {
    pub features: FeatureMatrix,
    pub labels: Option<LabelVector>,
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<LoadedData> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| SahdlError::io(path, e))?;
    parse_csv(&text, path)
}

fn parse_csv(text: &str, path: &Path) -> Result<LoadedData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut rows: Vec<(u64, csv::StringRecord)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| SahdlError::format(path, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        rows.push((line, rec));
    }
    if rows.is_empty() {
        return Err(SahdlError::format(path, "no data rows"));
    }

    let first = &rows[0].1;
    let has_header = first.iter().any(|c| c.parse::<f64>().is_err());
    let has_labels = has_header && first.iter().next_back().is_some_and(|c| c == "label");
    let data_rows = if has_header { &rows[1..] } else { &rows[..] };
    if data_rows.is_empty() {
        return Err(SahdlError::format(path, "header without data rows"));
    }
    let width = first.len();
    let n_features = if has_labels { width - 1 } else { width };
    if n_features == 0 {
        return Err(SahdlError::format(path, "no feature columns"));
    }

    let n = data_rows.len();
    let mut data = Array2::<f64>::zeros((n_features, n));
    let mut raw_labels = Vec::with_capacity(if has_labels { n } else { 0 });
    for (j, (line, rec)) in data_rows.iter().enumerate() {
        if rec.len() != width {
            return Err(SahdlError::format(
                path,
                format!("line {line}: expected {width} fields, found {}", rec.len()),
            ));
        }
        for i in 0..n_features {
            let cell = &rec[i];
            let v: f64 = cell.parse().map_err(|_| {
                SahdlError::format(
                    path,
                    format!("line {line}, column {}: '{cell}' is not a number", i + 1),
                )
            })?;
            if !v.is_finite() {
                return Err(SahdlError::format(
                    path,
                    format!("line {line}, column {}: non-finite value", i + 1),
                ));
            }
            data[[i, j]] = v;
        }
        if has_labels {
            let cell = &rec[n_features];
            let l: i64 = cell.parse().map_err(|_| {
                SahdlError::format(path, format!("line {line}: label '{cell}' is not an integer"))
            })?;
            raw_labels.push(l);
        }
    }
    let features = FeatureMatrix::new(data)?;
    let labels = if has_labels {
        Some(LabelVector::from_signed(&raw_labels).map_err(|e| SahdlError::format(path, e.to_string()))?)
    } else {
        None
    };
    Ok(LoadedData { features, labels })
}

/// Writes one sample per row, with header `f0,…,f{dim-1}[,label]`.
pub fn save_csv(path: impl AsRef<Path>, features: &FeatureMatrix, labels: Option<&LabelVector>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |e: csv::Error| SahdlError::format(path, e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    let mut header: Vec<String> = (0..features.dim()).map(|i| format!("f{i}")).collect();
    if labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header).map_err(io_err)?;
    let signed = labels.map(|l| l.to_signed());
    for j in 0..features.n_samples() {
        // `{}` on f64 prints the shortest string that parses back exactly.
        let mut row: Vec<String> = features.column(j).iter().map(|v| format!("{v}")).collect();
        if let Some(ls) = &signed {
            row.push(ls[j].to_string());
        }
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(|e| SahdlError::io(path, e))
}

/// Serializes a matrix in `binmat` layout.
pub fn encode_binmat(m: &Array2<f64>) -> Vec<u8> {
    let (rows, cols) = m.dim();
    let mut out = Vec::with_capacity(BINMAT_HEADER_LEN + 8 * rows * cols);
    out.extend_from_slice(BINMAT_MAGIC);
    out.push(BINMAT_VERSION);
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for j in 0..cols {
        for i in 0..rows {
            out.extend_from_slice(&m[[i, j]].to_le_bytes());
        }
    }
    out
}

/// Parses `binmat` bytes. `origin` is only used in error messages.
pub fn decode_binmat(bytes: &[u8], origin: &Path) -> Result<Array2<f64>> {
    if bytes.len() < BINMAT_HEADER_LEN {
        return Err(SahdlError::format(origin, format!(
            "truncated header: {} bytes, need {BINMAT_HEADER_LEN}",
            bytes.len()
        )));
    }
    if &bytes[0..4] != BINMAT_MAGIC {
        return Err(SahdlError::format(origin, "bad magic, expected SAHD"));
    }
    if bytes[4] != BINMAT_VERSION {
        return Err(SahdlError::format(origin, format!("unsupported version {}", bytes[4])));
    }
    let rows = u64::from_le_bytes(bytes[5..13].try_into().expect("8 bytes"));
    let cols = u64::from_le_bytes(bytes[13..21].try_into().expect("8 bytes"));
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| SahdlError::format(origin, format!("shape {rows}x{cols} overflows")))?;
    let payload = &bytes[BINMAT_HEADER_LEN..];
    if payload.len() != expected {
        return Err(SahdlError::format(origin, format!(
            "payload has {} bytes, shape {rows}x{cols} needs {expected}",
            payload.len()
        )));
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let mut m = Array2::<f64>::zeros((rows, cols));
    for (idx, chunk) in payload.chunks_exact(8).enumerate() {
        m[[idx % rows, idx / rows]] = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
    }
    Ok(m)
}

pub fn save_matrix_binmat(path: impl AsRef<Path>, m: &Array2<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| SahdlError::io(path, e))?;
    f.write_all(&encode_binmat(m)).map_err(|e| SahdlError::io(path, e))
}

pub fn load_matrix_binmat(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| SahdlError::io(path, e))?;
    decode_binmat(&bytes, path)
}

pub fn save_binmat(path: impl AsRef<Path>, features: &FeatureMatrix) -> Result<()> {
    save_matrix_binmat(path, features.data())
}

pub fn load_binmat(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let m = load_matrix_binmat(path)?;
    FeatureMatrix::new(m).map_err(|e| SahdlError::format(path, e.to_string()))
}

/// Label sidecar for `binmat` features: one integer per line, `-1` unlabeled.
pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelVector> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| SahdlError::io(path, e))?;
    let mut raw = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        raw.push(line.parse::<i64>().map_err(|_| {
            SahdlError::format(path, format!("line {}: '{line}' is not an integer label", i + 1))
        })?);
    }
    LabelVector::from_signed(&raw).map_err(|e| SahdlError::format(path, e.to_string()))
}

pub fn save_labels(path: impl AsRef<Path>, labels: &LabelVector) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for l in labels.to_signed() {
        text.push_str(&l.to_string());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| SahdlError::io(path, e))
}
