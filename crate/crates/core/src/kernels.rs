//! Quantum fidelity kernel and the classical benchmark kernels.

use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::FeatureMapSpec;
use crate::error::{Error, Result};
use crate::simulator::StateVector;

/// Kernel function `k(x, x')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `|<φ(x')|φ(x)>|²` on the exact simulator.
    QuantumFidelity { feature_map: FeatureMapSpec },
    /// `exp(-γ‖x − x'‖²)`.
    Rbf { gamma: f64 },
    /// `x · x'`.
    Linear,
}

impl KernelSpec {
    /// Feature count the kernel requires, if it fixes one.
    pub fn expected_dim(&self) -> Option<usize> {
        match self {
            KernelSpec::QuantumFidelity { feature_map } => Some(feature_map.expected_dim()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::QuantumFidelity { feature_map } => feature_map.validate(),
            KernelSpec::Rbf { gamma } if !(gamma.is_finite() && *gamma > 0.0) => {
                Err(Error::Config(format!("rbf gamma must be positive, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        match self.expected_dim() {
            Some(e) if e != d => Err(Error::Usage(format!(
                "kernel expects {e} features, got {d}"
            ))),
            _ => Ok(()),
        }
    }

    /// Unit diagonal holds analytically for normalized-state and rbf kernels.
    fn unit_diagonal(&self) -> bool {
        !matches!(self, KernelSpec::Linear)
    }
}

/// Per-row precomputation: encoded states for quantum kernels, nothing otherwise.
enum Prepared<'a> {
    States(Vec<StateVector>),
    Raw(Vec<&'a [f64]>),
}

fn prepare<'a>(spec: &KernelSpec, rows: &[&'a [f64]]) -> Result<Prepared<'a>> {
    match spec {
        KernelSpec::QuantumFidelity { feature_map } => {
            let states = rows
                .par_iter()
                .enumerate()
                .map(|(i, x)| {
                    feature_map.encode(x).map_err(|e| Error::Row {
                        row: i,
                        source: Box::new(e),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Prepared::States(states))
        }
        _ => {
            for (i, x) in rows.iter().enumerate() {
                if let Some(j) = x.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Row {
                        row: i,
                        source: Box::new(Error::Data(format!("feature {j} is not finite"))),
                    });
                }
            }
            Ok(Prepared::Raw(rows.to_vec()))
        }
    }
}

fn linear(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    a.inner(b).expect("states share the feature map register").norm_sqr()
}

fn row_slices<'a>(x: &'a ArrayView2<'a, f64>) -> Result<Vec<&'a [f64]>> {
    x.axis_iter(Axis(0))
        .map(|r| {
            r.to_slice()
                .ok_or_else(|| Error::Usage("feature matrix must be in standard row-major layout".into()))
        })
        .collect()
}

/// `|<φ(x_j)|φ(x_i)>|²` for a single pair.
pub fn fidelity_kernel_entry(x_i: &[f64], x_j: &[f64], map: &FeatureMapSpec) -> Result<f64> {
    let a = map.encode(x_i)?;
    let b = map.encode(x_j)?;
    Ok(fidelity(&a, &b))
}

/// A symmetric Gram matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    n: usize,
    values: Vec<f64>,
}

impl KernelMatrix {
    /// Wraps an `n×n` row-major buffer.
    pub fn from_row_major(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Usage(format!(
                "kernel buffer has {} entries, expected {n}x{n}",
                values.len()
            )));
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Full Gram matrix of the rows of `x`. Only the upper triangle is
/// evaluated; rows are distributed across threads.
pub fn kernel_matrix(x: ArrayView2<'_, f64>, spec: &KernelSpec) -> Result<KernelMatrix> {
    spec.validate()?;
    spec.check_dim(x.ncols())?;
    let rows = row_slices(&x)?;
    let n = rows.len();
    let prepared = prepare(spec, &rows)?;

    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let start = if spec.unit_diagonal() { i + 1 } else { i };
            (start..n)
                .map(|j| match (&prepared, spec) {
                    (Prepared::States(s), _) => fidelity(&s[i], &s[j]),
                    (Prepared::Raw(r), KernelSpec::Rbf { gamma }) => rbf(r[i], r[j], *gamma),
                    (Prepared::Raw(r), _) => linear(r[i], r[j]),
                })
                .collect()
        })
        .collect();

    let mut values = vec![0.0; n * n];
    for (i, row) in upper.into_iter().enumerate() {
        if spec.unit_diagonal() {
            values[i * n + i] = 1.0;
        }
        let start = n - row.len();
        for (offset, v) in row.into_iter().enumerate() {
            let j = start + offset;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(KernelMatrix { n, values })
}

/// `k(x_train_i, x)` for every training row.
pub fn kernel_vector(x: &[f64], x_train: ArrayView2<'_, f64>, spec: &KernelSpec) -> Result<Vec<f64>> {
    Ok(kernel_rows(ndarray::ArrayView2::from_shape((1, x.len()), x).expect("1xd view"), x_train, spec)?
        .pop()
        .expect("one query row"))
}

/// Cross-kernel between query rows and training rows: result `[q][i] = k(x_train_i, query_q)`.
pub fn kernel_rows(
    queries: ArrayView2<'_, f64>,
    x_train: ArrayView2<'_, f64>,
    spec: &KernelSpec,
) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    if queries.nrows() > 0 && queries.ncols() != x_train.ncols() {
        return Err(Error::Usage(format!(
            "query has {} features, training data has {}",
            queries.ncols(),
            x_train.ncols()
        )));
    }
    spec.check_dim(x_train.ncols())?;
    let train_rows = row_slices(&x_train)?;
    let query_rows = row_slices(&queries)?;
    let train = prepare(spec, &train_rows)?;
    let query = prepare(spec, &query_rows)?;

    let out = (0..query_rows.len())
        .into_par_iter()
        .map(|q| {
            (0..train_rows.len())
                .map(|i| match (&train, &query, spec) {
                    (Prepared::States(t), Prepared::States(s), _) => fidelity(&t[i], &s[q]),
                    (Prepared::Raw(t), Prepared::Raw(s), KernelSpec::Rbf { gamma }) => rbf(t[i], s[q], *gamma),
                    (Prepared::Raw(t), Prepared::Raw(s), _) => linear(t[i], s[q]),
                    _ => unreachable!("both sides prepared with the same spec"),
                })
                .collect()
        })
        .collect();
    Ok(out)
}
