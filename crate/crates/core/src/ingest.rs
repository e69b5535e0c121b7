//! Dataset loading and synthesis: a configurable CSV reader for real data
//! and a seeded Gaussian generator for synthetic experiments.

use crate::losses::LossSpec;
use crate::model::{Dataset, DatasetError};
use crate::rng::NormalSampler;
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("non-numeric field at line {line}, column {column}: {value:?}")]
    NonNumericField {
        line: usize,
        column: usize,
        value: String,
    },
    #[error("file has no data rows")]
    EmptyFile,
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("column index {0} out of range")]
    ColumnOutOfRange(usize),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// A column reference, by position or by header name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

/// How to interpret a delimited text file as a learning problem.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    /// Feature columns in order; `None` means every column except the label.
    pub feature_columns: Option<Vec<ColumnRef>>,
    pub label_column: ColumnRef,
    pub delimiter: u8,
    pub has_header: bool,
    /// Zero-mean, unit-variance each feature before the unit-ball scaling.
    pub standardize: bool,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            feature_columns: None,
            label_column: ColumnRef::Index(0),
            delimiter: b',',
            has_header: false,
            standardize: false,
        }
    }
}

fn resolve_column(
    r: &ColumnRef,
    headers: Option<&[String]>,
    width: usize,
) -> Result<usize, IngestError> {
    match r {
        ColumnRef::Index(i) => {
            if *i >= width {
                return Err(IngestError::ColumnOutOfRange(*i));
            }
            Ok(*i)
        }
        ColumnRef::Name(name) => headers
            .and_then(|hs| hs.iter().position(|h| h == name))
            .ok_or_else(|| IngestError::UnknownColumn(name.clone())),
    }
}

/// Loads a delimited numeric file into a `Dataset` (features as columns).
/// Per-feature standardization is applied first when requested, then the
/// mandatory unit-ball column scaling happens inside `Dataset::new`.
pub fn load_csv(
    path: &Path,
    schema: &CsvSchema,
    lambda: f64,
    loss: LossSpec,
) -> Result<Dataset, IngestError> {
    let wrap_io = |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(schema.has_header)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                if let csv::ErrorKind::Io(io) = e.into_kind() {
                    wrap_io(io)
                } else {
                    unreachable!()
                }
            }
            _ => IngestError::ParseError {
                line: 0,
                message: e.to_string(),
            },
        })?;
    let headers: Option<Vec<String>> = if schema.has_header {
        Some(
            reader
                .headers()
                .map_err(|e| IngestError::ParseError {
                    line: 1,
                    message: e.to_string(),
                })?
                .iter()
                .map(str::to_string)
                .collect(),
        )
    } else {
        None
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    let mut feature_idx: Option<Vec<usize>> = None;
    let mut label_idx = 0usize;
    let header_lines = usize::from(schema.has_header);
    for (row_no, record) in reader.records().enumerate() {
        let line = row_no + 1 + header_lines;
        let record = record.map_err(|e| IngestError::ParseError {
            line,
            message: e.to_string(),
        })?;
        if feature_idx.is_none() {
            let width = record.len();
            label_idx = resolve_column(&schema.label_column, headers.as_deref(), width)?;
            let idx = match &schema.feature_columns {
                Some(cols) => cols
                    .iter()
                    .map(|c| resolve_column(c, headers.as_deref(), width))
                    .collect::<Result<Vec<_>, _>>()?,
                None => (0..width).filter(|&i| i != label_idx).collect(),
            };
            feature_idx = Some(idx);
        }
        let idx = feature_idx.as_ref().unwrap();
        let parse = |col: usize| -> Result<f64, IngestError> {
            let raw = record.get(col).ok_or(IngestError::ColumnOutOfRange(col))?;
            raw.parse::<f64>()
                .map_err(|_| IngestError::NonNumericField {
                    line,
                    column: col,
                    value: raw.to_string(),
                })
        };
        let mut row = Vec::with_capacity(idx.len());
        for &col in idx {
            row.push(parse(col)?);
        }
        labels.push(parse(label_idx)?);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(IngestError::EmptyFile);
    }

    let m = rows.len();
    let d = rows[0].len();
    if schema.standardize {
        for j in 0..d {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / m as f64;
            let var = rows
                .iter()
                .map(|r| (r[j] - mean) * (r[j] - mean))
                .sum::<f64>()
                / m as f64;
            let sd = var.sqrt();
            for r in rows.iter_mut() {
                r[j] = if sd > 0.0 { (r[j] - mean) / sd } else { 0.0 };
            }
        }
    }
    // Transpose rows into column-major feature storage.
    let mut features = vec![0.0; d * m];
    for (i, row) in rows.iter().enumerate() {
        features[i * d..(i + 1) * d].copy_from_slice(row);
    }
    Ok(Dataset::new(d, m, features, labels, lambda, loss)?)
}

/// Writes a dataset as a delimited file, one row per data point, features
/// first and the label last, 17 significant digits per value. Loading the
/// file back with the matching schema recovers the dataset exactly.
pub fn write_csv(path: &Path, dataset: &Dataset, delimiter: u8) -> Result<(), IngestError> {
    let wrap_io = |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(wrap_io)?);
    let sep = delimiter as char;
    let mut write_row = |row: &mut dyn Iterator<Item = f64>| -> std::io::Result<()> {
        let mut first = true;
        for v in row {
            if !first {
                write!(out, "{sep}")?;
            }
            write!(out, "{v:.16e}")?;
            first = false;
        }
        writeln!(out)
    };
    for i in 0..dataset.len() {
        let mut row = dataset
            .column(i)
            .iter()
            .copied()
            .chain(std::iter::once(dataset.label(i)));
        write_row(&mut row).map_err(wrap_io)?;
    }
    Ok(())
}

/// Label generation for synthetic problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelModel {
    /// `y = w_true . x + sigma * noise`, with `w_true` drawn from the seeded
    /// stream scaled by `w_scale`.
    LinearPlusNoise { w_scale: f64, noise_sigma: f64 },
    /// `y = sign(w_true . x)` mapped onto {-1, +1} (zero goes to +1).
    Signs,
}

/// Synthesizes an i.i.d. standard-Gaussian `d x m` problem.
///
/// Draw order (one ChaCha20 stream, polar-method normals): features column
/// by column, then `w_true`, then one noise draw per label. Columns are
/// scaled into the unit ball afterwards, so labels reflect the raw features.
pub fn synth_gaussian(
    d: usize,
    m: usize,
    seed: u64,
    lambda: f64,
    loss: LossSpec,
    label_model: LabelModel,
) -> Result<Dataset, DatasetError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut normal = NormalSampler::new();
    let mut features = vec![0.0; d * m];
    for v in features.iter_mut() {
        *v = normal.sample(&mut rng);
    }
    let w_scale = match label_model {
        LabelModel::LinearPlusNoise { w_scale, .. } => w_scale,
        LabelModel::Signs => 1.0,
    };
    let w_true: Vec<f64> = (0..d).map(|_| w_scale * normal.sample(&mut rng)).collect();
    let labels: Vec<f64> = (0..m)
        .map(|i| {
            let z = crate::linalg::dot(&w_true, &features[i * d..(i + 1) * d]);
            match label_model {
                LabelModel::LinearPlusNoise { noise_sigma, .. } => {
                    z + noise_sigma * normal.sample(&mut rng)
                }
                LabelModel::Signs => {
                    if z >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
            }
        })
        .collect();
    Dataset::new(d, m, features, labels, lambda, loss)
}
