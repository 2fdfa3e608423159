//! Datasets: CSV ingestion, min-max scaling, per-feature AUC selection,
//! fold splitting and seeded synthetic data.
//!
//! Labels are `1` for signal and `0` for background throughout this layer.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalmetrics::auc;

pub const DEFAULT_LABEL_COLUMN: &str = "label";

/// Per-feature `(min, max)` fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    fn subset(&self, columns: &[usize]) -> Self {
        Self {
            min: columns.iter().map(|&c| self.min[c]).collect(),
            max: columns.iter().map(|&c| self.max[c]).collect(),
        }
    }
}

/// Column names and scaling carried alongside a trained model so that
/// evaluation can reproduce the training-time preprocessing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureMeta {
    pub names: Vec<String>,
    pub scaler: Option<MinMaxScaler>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
    /// Set once the features have been min-max scaled.
    pub scaler: Option<MinMaxScaler>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Usage(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.ncols() != feature_names.len() {
            return Err(Error::Usage(format!(
                "{} feature columns but {} names",
                features.ncols(),
                feature_names.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&l| l > 1) {
            return Err(Error::Data(format!("row {i} has label {}, expected 0 or 1", labels[i])));
        }
        Ok(Self {
            features,
            labels,
            feature_names,
            scaler: None,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.contains(&0) && self.labels.contains(&1)
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            scaler: self.scaler.clone(),
        }
    }

    /// Columns at `columns`, in that order.
    pub fn select_columns(&self, columns: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(1), columns),
            labels: self.labels.clone(),
            feature_names: columns.iter().map(|&c| self.feature_names[c].clone()).collect(),
            scaler: self.scaler.as_ref().map(|s| s.subset(columns)),
        }
    }

    pub fn meta(&self) -> FeatureMeta {
        FeatureMeta {
            names: self.feature_names.clone(),
            scaler: self.scaler.clone(),
        }
    }

    /// Header plus one row per sample; the label is the last column.
    pub fn to_csv(&self, label_column: &str) -> String {
        let mut out = String::new();
        for name in &self.feature_names {
            out.push_str(name);
            out.push(',');
        }
        out.push_str(label_column);
        out.push('\n');
        for (row, label) in self.features.outer_iter().zip(&self.labels) {
            for v in row {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{label}\n"));
        }
        out
    }
}

/// Reads a headered CSV; every column except `label_column` is a feature.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(file, path, label_column)
}

/// Parses CSV text from any reader; `path` is only used in error messages.
pub fn parse_csv(reader: impl Read, path: &Path, label_column: &str) -> Result<Dataset> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| parse_err(1, format!("no column named `{label_column}` in header")))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    let width = headers.len();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(parse_err(
                line,
                format!("expected {width} fields, found {}", record.len()),
            ));
        }
        for (i, field) in record.iter().enumerate() {
            let field = field.trim();
            if i == label_idx {
                let label = match field {
                    "0" | "0.0" => 0,
                    "1" | "1.0" => 1,
                    other => return Err(parse_err(line, format!("invalid label `{other}`, expected 0 or 1"))),
                };
                labels.push(label);
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_err(line, format!("non-numeric value `{field}` in column {}", &headers[i])))?;
                if !v.is_finite() {
                    return Err(parse_err(line, format!("non-finite value `{field}`")));
                }
                values.push(v);
            }
        }
    }
    let features = Array2::from_shape_vec((labels.len(), feature_names.len()), values)
        .expect("row widths checked while parsing");
    Dataset::new(features, labels, feature_names)
}

/// Fits per-feature min and max on the training rows.
pub fn fit_minmax(train: &Dataset) -> Result<MinMaxScaler> {
    if train.n_rows() == 0 {
        return Err(Error::Data("cannot fit a scaler on zero rows".into()));
    }
    let column_fold = |f: fn(f64, f64) -> f64, init: f64| -> Vec<f64> {
        train
            .features
            .axis_iter(Axis(1))
            .map(|col| col.iter().copied().fold(init, f))
            .collect()
    };
    Ok(MinMaxScaler {
        min: column_fold(f64::min, f64::INFINITY),
        max: column_fold(f64::max, f64::NEG_INFINITY),
    })
}

fn scale_value(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.5
    }
}

/// `(x − min) / (max − min)` per feature, clipped into `[0, 1]`; constant
/// features map to 0.5.
pub fn apply_minmax(ds: &Dataset, scaler: &MinMaxScaler) -> Result<Dataset> {
    if scaler.min.len() != ds.n_features() || scaler.max.len() != ds.n_features() {
        return Err(Error::Usage(format!(
            "scaler fitted on {} features applied to {}",
            scaler.min.len(),
            ds.n_features()
        )));
    }
    let mut features = ds.features.clone();
    for (j, mut col) in features.axis_iter_mut(Axis(1)).enumerate() {
        let (lo, hi) = (scaler.min[j], scaler.max[j]);
        col.mapv_inplace(|v| scale_value(v, lo, hi));
    }
    Ok(Dataset {
        features,
        labels: ds.labels.clone(),
        feature_names: ds.feature_names.clone(),
        scaler: Some(scaler.clone()),
    })
}

/// Applies the scaler stored in `meta`, if one was fitted during training.
pub fn apply_meta(ds: &Dataset, meta: &FeatureMeta) -> Result<Dataset> {
    match &meta.scaler {
        Some(s) => apply_minmax(ds, s),
        None => Err(Error::Usage("model metadata carries no fitted scaler".into())),
    }
}

/// Single-feature discrimination, `max(AUC, 1 − AUC)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRank {
    pub index: usize,
    pub name: String,
    pub discrimination: f64,
}

fn column_discrimination(col: ArrayView1<'_, f64>, labels: &[u8]) -> Result<f64> {
    let scores = col.to_vec();
    let a = auc(&scores, labels)?;
    Ok(a.max(1.0 - a))
}

/// Features sorted by discrimination, best first; ties by column index.
pub fn feature_auc_rank(ds: &Dataset) -> Result<Vec<FeatureRank>> {
    if !ds.has_both_classes() {
        return Err(Error::Data("feature ranking needs both classes present".into()));
    }
    let mut ranks = ds
        .features
        .axis_iter(Axis(1))
        .enumerate()
        .map(|(index, col)| {
            Ok(FeatureRank {
                index,
                name: ds.feature_names[index].clone(),
                discrimination: column_discrimination(col, &ds.labels)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranks.sort_by(|a, b| b.discrimination.total_cmp(&a.discrimination).then(a.index.cmp(&b.index)));
    Ok(ranks)
}

/// Keeps the `k` most discriminating features, in their original column order.
pub fn select_features(ds: &Dataset, k: usize) -> Result<Dataset> {
    if k == 0 || k > ds.n_features() {
        return Err(Error::Usage(format!(
            "cannot select {k} of {} features",
            ds.n_features()
        )));
    }
    let mut keep: Vec<usize> = feature_auc_rank(ds)?.into_iter().take(k).map(|r| r.index).collect();
    keep.sort_unstable();
    Ok(ds.select_columns(&keep))
}

/// A training set and disjoint test folds drawn from one dataset.
#[derive(Debug, Clone)]
pub struct FoldSet {
    pub train: Dataset,
    pub test_folds: Vec<Dataset>,
    pub train_indices: Vec<usize>,
    pub fold_indices: Vec<Vec<usize>>,
}

/// Seeded shuffle, then consecutive disjoint slices: `train_size` training
/// rows followed by `n_folds` folds of `fold_size` rows.
pub fn split_folds(ds: &Dataset, train_size: usize, n_folds: usize, fold_size: usize, seed: u64) -> Result<FoldSet> {
    let needed = train_size + n_folds * fold_size;
    if needed > ds.n_rows() {
        return Err(Error::Data(format!(
            "split needs {needed} rows ({train_size} + {n_folds}x{fold_size}), dataset has {}",
            ds.n_rows()
        )));
    }
    let mut order: Vec<usize> = (0..ds.n_rows()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train_indices = order[..train_size].to_vec();
    let fold_indices: Vec<Vec<usize>> = (0..n_folds)
        .map(|f| {
            let start = train_size + f * fold_size;
            order[start..start + fold_size].to_vec()
        })
        .collect();
    Ok(FoldSet {
        train: ds.select_rows(&train_indices),
        test_folds: fold_indices.iter().map(|idx| ds.select_rows(idx)).collect(),
        train_indices,
        fold_indices,
    })
}

/// Two isotropic unit-variance Gaussian classes with means
/// `±(separation / 2)·(1, …, 1)/√d` and balanced, shuffled labels.
pub fn gen_synthetic(n: usize, d: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::Usage(format!("n must be positive and even, got {n}")));
    }
    if d == 0 {
        return Err(Error::Usage("d must be at least 1".into()));
    }
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(Error::Usage(format!("separation must be >= 0, got {separation}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < n / 2)).collect();
    labels.shuffle(&mut rng);
    let shift = 0.5 * separation / (d as f64).sqrt();
    let mut features = Array2::zeros((n, d));
    for (mut row, &label) in features.outer_iter_mut().zip(&labels) {
        let mean = if label == 1 { shift } else { -shift };
        for v in row.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = mean + z;
        }
    }
    Dataset::new(features, labels, (0..d).map(|j| format!("f{j}")).collect())
}
