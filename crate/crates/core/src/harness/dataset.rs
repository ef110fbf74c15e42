use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// Feature matrix with class labels `0..K`, classes numbered in order of
/// first appearance.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Array2<f64>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        let k = class_names.len();
        let n = features.nrows();
        if labels.len() != n {
            return Err(Error::invalid(format!("{n} rows but {} labels", labels.len())));
        }
        if k < 2 {
            return Err(Error::invalid(format!("dataset needs at least 2 classes, got {k}")));
        }
        if n < k {
            return Err(Error::invalid(format!("{n} rows cannot hold {k} classes")));
        }
        if let Some(y) = labels.iter().find(|&&y| y >= k) {
            return Err(Error::invalid(format!("label {y} is outside 0..{k}")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains a non-finite feature"));
        }
        let feature_names = (0..features.ncols()).map(|j| format!("x{j}")).collect();
        Ok(Self { name: name.into(), features, labels, class_names, feature_names })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn rows(&self, indices: &[usize]) -> Array2<f64> {
        self.features.select(Axis(0), indices)
    }

    pub fn labels_at(&self, indices: &[usize]) -> Vec<usize> {
        indices.iter().map(|&i| self.labels[i]).collect()
    }

    /// Per-feature z-scores over the whole matrix; constant features are
    /// only centered.
    pub fn standardized(&self) -> Self {
        let mut out = self.clone();
        standardize_in_place(&mut out.features);
        out
    }
}

pub(crate) fn standardize_in_place(features: &mut Array2<f64>) {
    let n = features.nrows() as f64;
    for mut col in features.axis_iter_mut(Axis(1)) {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        let scale = if sd > 0.0 { sd } else { 1.0 };
        col.mapv_inplace(|v| (v - mean) / scale);
    }
}

/// Numeric columns of a CSV, with the raw text of an optional label column.
/// Empty label cells are `None`.
#[derive(Clone, Debug)]
pub struct FeatureTable {
    pub feature_names: Vec<String>,
    pub features: Array2<f64>,
    pub labels: Option<Vec<Option<String>>>,
}

fn ingestion(path: &Path, message: impl Into<String>) -> Error {
    Error::Ingestion { path: path.to_path_buf(), message: message.into() }
}

/// Reads a headered CSV. With `label_column` set the column must exist and
/// is kept as text; every other column must be numeric.
pub fn read_feature_table(path: &Path, label_column: Option<&str>) -> Result<FeatureTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ingestion(path, format!("cannot open: {e}")))?;
    let headers = reader.headers().map_err(|e| ingestion(path, format!("bad header: {e}")))?.clone();
    if headers.is_empty() {
        return Err(ingestion(path, "header row is empty"));
    }
    let label_idx = match label_column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| ingestion(path, format!("label column `{name}` not found")))?,
        ),
        None => None,
    };
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&j| Some(j) != label_idx).collect();
    if feature_cols.is_empty() {
        return Err(ingestion(path, "no feature columns"));
    }

    let mut values = Vec::new();
    let mut labels = label_idx.map(|_| Vec::new());
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| ingestion(path, format!("row {row}: malformed record: {e}")))?;
        if record.len() != headers.len() {
            return Err(ingestion(
                path,
                format!("row {row}: expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        for &j in &feature_cols {
            let cell = &record[j];
            let v: f64 = cell.parse().map_err(|_| {
                ingestion(path, format!("row {row}, column `{}`: `{cell}` is not numeric", &headers[j]))
            })?;
            if !v.is_finite() {
                return Err(ingestion(path, format!("row {row}, column `{}`: non-finite value", &headers[j])));
            }
            values.push(v);
        }
        if let (Some(idx), Some(labels)) = (label_idx, labels.as_mut()) {
            let cell = &record[idx];
            labels.push((!cell.is_empty()).then(|| cell.to_string()));
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(ingestion(path, "no data rows"));
    }
    let features = Array2::from_shape_vec((rows, feature_cols.len()), values).expect("one value per feature cell");
    Ok(FeatureTable {
        feature_names: feature_cols.iter().map(|&j| headers[j].to_string()).collect(),
        features,
        labels,
    })
}

/// Maps label strings to dense indices in order of first appearance.
pub(crate) fn index_labels<'a>(labels: impl IntoIterator<Item = &'a str>) -> (Vec<usize>, Vec<String>) {
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut names = Vec::new();
    let indices = labels
        .into_iter()
        .map(|l| {
            *ids.entry(l).or_insert_with(|| {
                names.push(l.to_string());
                names.len() - 1
            })
        })
        .collect();
    (indices, names)
}

/// Loads a fully labeled dataset from a headered CSV.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let table = read_feature_table(path, Some(label_column))?;
    let raw = table.labels.expect("label column requested");
    let mut text = Vec::with_capacity(raw.len());
    for (r, cell) in raw.iter().enumerate() {
        match cell {
            Some(s) => text.push(s.as_str()),
            None => return Err(ingestion(path, format!("row {}: empty label", r + 1))),
        }
    }
    let (labels, class_names) = index_labels(text);
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut ds = Dataset::new(name, table.features, labels, class_names).map_err(|e| ingestion(path, e.to_string()))?;
    ds.feature_names = table.feature_names;
    Ok(ds)
}
