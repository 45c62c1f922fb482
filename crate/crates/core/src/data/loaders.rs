use std::fs::File;
use std::path::Path;

use ndarray::Array2;

use super::{ColumnSchema, TabularDataset};
use crate::error::{Error, Result};

const PIMA_FEATURES: [&str; 8] = [
    "Pregnancies",
    "Glucose",
    "BloodPressure",
    "SkinThickness",
    "Insulin",
    "BMI",
    "DiabetesPedigreeFunction",
    "Age",
];
pub const PIMA_QUASI_IDENTIFIERS: [&str; 2] = ["Age", "Pregnancies"];

const HEART_FEATURES: [&str; 13] = [
    "age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach", "exang", "oldpeak",
    "slope", "ca", "thal",
];
pub const HEART_QUASI_IDENTIFIERS: [&str; 2] = ["age", "sex"];

const MISSING: &str = "?";

struct RawTable {
    features: Vec<f64>,
    labels: Vec<usize>,
}

/// Reads a headered CSV of `n_features` numeric columns plus a trailing
/// label column. `label_rule` maps the raw label value to a class or
/// `None` when the value is invalid. Rows containing the missing marker
/// are dropped when `drop_missing` is set and rejected otherwise.
fn read_table(
    path: &Path,
    feature_names: &[&str],
    label_name: &str,
    drop_missing: bool,
    label_rule: impl Fn(f64) -> Option<usize>,
) -> Result<RawTable> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let expected = feature_names.len() + 1;
    let ingestion = |row: usize, column: &str, message: String| Error::Ingestion {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        message,
    };
    let header_len = reader.headers()?.len();
    if header_len == 0 {
        return Err(Error::EmptyDataset {
            path: path.to_path_buf(),
        });
    }
    if header_len != expected {
        return Err(ingestion(
            0,
            "<header>",
            format!("expected {expected} columns, found {header_len}"),
        ));
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        if record.len() != expected {
            return Err(ingestion(
                row,
                "<row>",
                format!("expected {expected} columns, found {}", record.len()),
            ));
        }
        if record.iter().any(|cell| cell == MISSING) {
            if drop_missing {
                continue;
            }
            let col = record.iter().position(|c| c == MISSING).unwrap_or(0);
            let name = feature_names.get(col).copied().unwrap_or(label_name);
            return Err(ingestion(row, name, "missing value".into()));
        }
        for (cell, name) in record.iter().zip(feature_names) {
            let value: f64 = cell
                .parse()
                .map_err(|_| ingestion(row, name, format!("non-numeric value {cell:?}")))?;
            if !value.is_finite() {
                return Err(ingestion(row, name, format!("non-finite value {cell:?}")));
            }
            features.push(value);
        }
        let raw = &record[expected - 1];
        let label = raw
            .parse::<f64>()
            .ok()
            .and_then(&label_rule)
            .ok_or_else(|| ingestion(row, label_name, format!("invalid label {raw:?}")))?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset {
            path: path.to_path_buf(),
        });
    }
    Ok(RawTable { features, labels })
}

fn build(table: RawTable, names: &[&str], quasi: &[&str]) -> Result<TabularDataset> {
    let rows = table.labels.len();
    let features = Array2::from_shape_vec((rows, names.len()), table.features)
        .map_err(|e| Error::invalid(e.to_string()))?;
    let schema = names
        .iter()
        .map(|n| ColumnSchema::new(*n, quasi.contains(n)))
        .collect();
    TabularDataset::new(features, table.labels, schema)
}

/// Pima Indians diabetes: eight numeric features and a 0/1 `Outcome`.
pub fn load_pima(path: impl AsRef<Path>) -> Result<TabularDataset> {
    let table = read_table(path.as_ref(), &PIMA_FEATURES, "Outcome", false, |v| {
        match v {
            v if v == 0.0 => Some(0),
            v if v == 1.0 => Some(1),
            _ => None,
        }
    })?;
    build(table, &PIMA_FEATURES, &PIMA_QUASI_IDENTIFIERS)
}

/// Processed Cleveland heart disease: 13 numeric features and a `num`
/// target in 0..=4. Rows with `?` cells are dropped; targets 1..=4
/// collapse to the positive class.
pub fn load_heart(path: impl AsRef<Path>) -> Result<TabularDataset> {
    let table = read_table(path.as_ref(), &HEART_FEATURES, "num", true, |v| {
        if v.fract() != 0.0 {
            return None;
        }
        match v as i64 {
            0 => Some(0),
            1..=4 => Some(1),
            _ => None,
        }
    })?;
    build(table, &HEART_FEATURES, &HEART_QUASI_IDENTIFIERS)
}
