//! Dataset ingestion and persistence of configs, fitted pipelines and
//! results.
//!
//! CSV input is RFC-4180 style with a required header. Rows containing
//! unparseable tokens or the missing-value sentinels `""`, `"?"`, `"NA"`,
//! `"NaN"` are dropped and counted rather than imputed. JSON output writes
//! every float as a 17-significant-digit decimal so values round-trip
//! bit-exactly.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::{BenchResult, ExperimentConfig};
use crate::error::{Error, Result};
use crate::matrix::{LabelVector, Matrix};
use crate::model::LRModel;
use crate::report;
use crate::transforms::FittedTransform;

/// What was loaded from a CSV: column layout, row accounting and how raw
/// target values were mapped onto {0, 1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub feature_columns: Vec<String>,
    pub target_column: String,
    pub rows_loaded: usize,
    pub rows_dropped: usize,
    /// Raw target value → class label, in sorted raw-value order.
    pub label_mapping: Vec<(String, u8)>,
}

/// A loaded dataset: `F64` feature matrix, labels and schema.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Matrix,
    pub y: LabelVector,
    pub schema: DatasetSchema,
}

const MISSING_SENTINELS: [&str; 4] = ["", "?", "NA", "NaN"];

fn dataset_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Dataset {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Parse a feature cell; `None` drops the row.
fn parse_feature(raw: &str) -> Option<f64> {
    let token = raw.trim();
    if MISSING_SENTINELS.contains(&token) {
        return None;
    }
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Some(v),
        _ => None,
    }
}

/// Load a CSV with a header row, taking every non-target column as an `F64`
/// feature in header order. Surviving rows keep their file order.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(dataset_err(path, "file not found"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers = reader
        .headers()
        .map_err(|_| dataset_err(path, "missing header row"))?
        .clone();
    if headers.is_empty() {
        return Err(dataset_err(path, "missing header row"));
    }
    // Tolerate a UTF-8 BOM on the first header cell.
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let h = if i == 0 { h.trim_start_matches('\u{feff}') } else { h };
            h.trim().to_string()
        })
        .collect();
    let target_idx = names
        .iter()
        .position(|n| n == target_column)
        .ok_or_else(|| {
            dataset_err(
                path,
                format!(
                    "target column \"{target_column}\" not found; columns are: {}",
                    names.join(", ")
                ),
            )
        })?;
    let feature_columns: Vec<String> = names
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target_idx)
        .map(|(_, n)| n.clone())
        .collect();

    let mut features: Vec<f64> = Vec::new();
    let mut raw_targets: Vec<String> = Vec::new();
    let mut rows_dropped = 0usize;
    for record in reader.records() {
        let record = record?;
        if record.len() != names.len() {
            rows_dropped += 1;
            continue;
        }
        let mut row = Vec::with_capacity(feature_columns.len());
        let mut ok = true;
        let mut target_raw = String::new();
        for (i, cell) in record.iter().enumerate() {
            if i == target_idx {
                let t = cell.trim();
                if MISSING_SENTINELS.contains(&t) {
                    ok = false;
                    break;
                }
                target_raw = t.to_string();
            } else {
                match parse_feature(cell) {
                    Some(v) => row.push(v),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
        }
        if ok {
            features.extend_from_slice(&row);
            raw_targets.push(target_raw);
        } else {
            rows_dropped += 1;
        }
    }

    if raw_targets.is_empty() {
        return Err(dataset_err(path, "zero rows survive filtering"));
    }

    // Two distinct raw values map onto {0, 1} in sorted order; numeric
    // values sort numerically, anything else lexicographically.
    let mut distinct: Vec<String> = raw_targets.clone();
    distinct.sort();
    distinct.dedup();
    if distinct.len() != 2 {
        return Err(dataset_err(
            path,
            format!(
                "target column \"{target_column}\" has {} distinct values, need exactly 2",
                distinct.len()
            ),
        ));
    }
    if let (Ok(a), Ok(b)) = (distinct[0].parse::<f64>(), distinct[1].parse::<f64>()) {
        if a > b {
            distinct.swap(0, 1);
        }
    }
    let label_mapping: Vec<(String, u8)> = vec![(distinct[0].clone(), 0), (distinct[1].clone(), 1)];
    let labels: Vec<u8> = raw_targets
        .iter()
        .map(|t| u8::from(*t == distinct[1]))
        .collect();

    let rows_loaded = raw_targets.len();
    let x = Matrix::from_vec(rows_loaded, feature_columns.len(), features)?;
    let y = LabelVector::new(labels)?;
    Ok(Dataset {
        x,
        y,
        schema: DatasetSchema {
            feature_columns,
            target_column: target_column.to_string(),
            rows_loaded,
            rows_dropped,
            label_mapping,
        },
    })
}

/// Load a header-ed CSV in which every column is a numeric feature.
/// Returns the matrix, the column names and the dropped-row count.
pub fn load_feature_csv(path: impl AsRef<Path>) -> Result<(Matrix, Vec<String>, usize)> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(dataset_err(path, "file not found"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let names: Vec<String> = reader
        .headers()
        .map_err(|_| dataset_err(path, "missing header row"))?
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let h = if i == 0 { h.trim_start_matches('\u{feff}') } else { h };
            h.trim().to_string()
        })
        .collect();
    let mut data = Vec::new();
    let mut rows = 0usize;
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record?;
        let parsed: Option<Vec<f64>> = record.iter().map(parse_feature).collect();
        match parsed {
            Some(row) if row.len() == names.len() => {
                data.extend_from_slice(&row);
                rows += 1;
            }
            _ => dropped += 1,
        }
    }
    if rows == 0 {
        return Err(dataset_err(path, "zero rows survive filtering"));
    }
    Ok((Matrix::from_vec(rows, names.len(), data)?, names, dropped))
}

/// Write a matrix as CSV under the given column names.
pub fn write_matrix_csv(x: &Matrix, names: &[String], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    out.push_str(&names.join(","));
    out.push('\n');
    for r in 0..x.rows() {
        for c in 0..x.cols() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", x.get(r, c)));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// JSON with exact float round-trip (17 significant digits).

struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
}

/// Serialize with every f64 as a 17-significant-digit decimal, so parsing
/// recovers the exact bit pattern.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

// ---------------------------------------------------------------------------
// Config files.

/// Read an [`ExperimentConfig`] from TOML or JSON, chosen by extension
/// (anything but `.json` is treated as TOML). Unknown or missing keys are
/// reported by name.
pub fn read_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: ExperimentConfig = if path.extension().and_then(|e| e.to_str()) == Some("json") {
        serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
    } else {
        toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
    };
    cfg.validate()?;
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// Results files.

/// Versioned envelope around a results list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub version: u32,
    pub toolkit_version: String,
    pub config: ExperimentConfig,
    pub results: Vec<BenchResult>,
}

pub const RESULTS_VERSION: u32 = 1;

pub fn results_file(cfg: &ExperimentConfig, results: &[BenchResult]) -> ResultsFile {
    ResultsFile {
        version: RESULTS_VERSION,
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        results: results.to_vec(),
    }
}

/// Full-precision JSON results.
pub fn write_results_json(
    cfg: &ExperimentConfig,
    results: &[BenchResult],
    path: impl AsRef<Path>,
) -> Result<()> {
    let text = to_json_string(&results_file(cfg, results))?;
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_results_json(path: impl AsRef<Path>) -> Result<ResultsFile> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Table-layout CSV: accuracies as two-decimal percentages, times with four
/// decimal places.
pub fn write_results_csv(results: &[BenchResult], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, results_csv_string(results))?;
    Ok(())
}

pub fn results_csv_string(results: &[BenchResult]) -> String {
    let mut out = String::from(
        "technique,precision,accuracy_pct,fit_time_s,fit_time_min_s,fit_time_max_s,time_reduction_pct,iterations_run,converged\n",
    );
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.technique.display_name(),
            r.precision.name(),
            report::format_accuracy_pct(r.accuracy),
            report::format_seconds(r.fit_time_s),
            report::format_seconds(r.fit_time_min_s),
            report::format_seconds(r.fit_time_max_s),
            r.time_reduction_pct
                .map(|p| format!("{p:.1}"))
                .unwrap_or_default(),
            r.iterations_run,
            r.converged,
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Fitted pipelines and models.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformFile {
    pub version: u32,
    #[serde(flatten)]
    pub fitted: FittedTransform,
}

pub fn save_transform(fitted: &FittedTransform, path: impl AsRef<Path>) -> Result<()> {
    let file = TransformFile {
        version: RESULTS_VERSION,
        fitted: fitted.clone(),
    };
    fs::write(path, to_json_string(&file)?)?;
    Ok(())
}

pub fn load_transform(path: impl AsRef<Path>) -> Result<FittedTransform> {
    let file: TransformFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(file.fitted)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub model: LRModel,
}

pub fn save_model(model: &LRModel, path: impl AsRef<Path>) -> Result<()> {
    let file = ModelFile {
        version: RESULTS_VERSION,
        model: model.clone(),
    };
    fs::write(path, to_json_string(&file)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LRModel> {
    let file: ModelFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(file.model)
}
