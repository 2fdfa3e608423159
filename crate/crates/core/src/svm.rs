//! Kernel SVM trained on the Lagrangian dual by Sequential Minimal Optimization.
//!
//! The dual is
//!
//! ```text
//! maximize   L(c) = Σ c_i − ½ Σ_ij c_i c_j y_i y_j K_ij
//! subject to Σ c_i y_i = 0,  0 ≤ c_i ≤ C,  C = 1 / (2 n λ)
//! ```
//!
//! Each step picks the maximal KKT violator `i` and the partner `j` that
//! maximizes `|E_i − E_j|` among those that can move, then solves the
//! two-variable subproblem in closed form.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::FeatureMeta;
use crate::error::{Error, Result};
use crate::kernels::{kernel_rows, KernelMatrix, KernelSpec};

/// Coefficients below this are not support vectors.
pub const SUPPORT_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmConfig {
    /// Regularization λ; the box constant is `1 / (2 n λ)`.
    pub lambda: f64,
    /// Uses this box constant directly instead of deriving it from λ.
    pub c: Option<f64>,
    /// KKT tolerance on the maximal violating pair gap.
    pub tol: f64,
    /// Iteration budget, in units of `n` pair updates.
    pub max_passes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            lambda: 0.2,
            c: None,
            tol: 1e-3,
            max_passes: 200,
        }
    }
}

impl SvmConfig {
    pub fn box_constant(&self, n: usize) -> Result<f64> {
        let c = match self.c {
            Some(c) => c,
            None => {
                if !(self.lambda.is_finite() && self.lambda > 0.0) {
                    return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
                }
                1.0 / (2.0 * n as f64 * self.lambda)
            }
        };
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Config(format!("box constant C must be positive, got {c}")));
        }
        Ok(c)
    }
}

/// Result of [`smo_train`].
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Final `max_{I_up} −E − min_{I_low} −E`.
    pub kkt_gap: f64,
}

/// Maps data-layer labels (1 = signal, 0 = background) to ±1.
pub fn signed_labels(labels: &[u8]) -> Vec<f64> {
    labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect()
}

/// `L(c)` for coefficients `c`.
pub fn dual_objective(k: &KernelMatrix, y: &[f64], c: &[f64]) -> f64 {
    let n = k.n();
    let mut quad = 0.0;
    for i in 0..n {
        if c[i] == 0.0 {
            continue;
        }
        let row = k.row(i);
        let inner: f64 = (0..n).map(|j| c[j] * y[j] * row[j]).sum();
        quad += c[i] * y[i] * inner;
    }
    c.iter().sum::<f64>() - 0.5 * quad
}

fn in_up(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

struct Solver<'a> {
    k: &'a KernelMatrix,
    y: &'a [f64],
    c: f64,
    alpha: Vec<f64>,
    /// `f_i = Σ_j α_j y_j K_ij`, without bias.
    f: Vec<f64>,
}

/// Index and value of a candidate in the working-set search.
type Extreme = (usize, f64);

impl Solver<'_> {
    fn err(&self, i: usize) -> f64 {
        self.f[i] - self.y[i]
    }

    /// Index and value of `max_{I_up} −E` and `min_{I_low} −E`, skipping `blocked`.
    fn extremes(&self, blocked: &[bool]) -> (Option<Extreme>, Option<Extreme>) {
        let mut up: Option<(usize, f64)> = None;
        let mut low: Option<(usize, f64)> = None;
        for i in 0..self.alpha.len() {
            let g = -self.err(i);
            if !blocked[i] && in_up(self.y[i], self.alpha[i], self.c) && up.is_none_or(|(_, v)| g > v) {
                up = Some((i, g));
            }
            if in_low(self.y[i], self.alpha[i], self.c) && low.is_none_or(|(_, v)| g < v) {
                low = Some((i, g));
            }
        }
        (up, low)
    }

    /// Solves the two-variable subproblem on `(i, j)`. Returns false when the
    /// pair cannot move (degenerate curvature or empty feasible segment).
    fn take_step(&mut self, i: usize, j: usize) -> bool {
        let (k, y, c) = (self.k, self.y, self.c);
        let eta = k.get(i, i) + k.get(j, j) - 2.0 * k.get(i, j);
        if eta <= 1e-12 {
            return false;
        }
        let (ai, aj) = (self.alpha[i], self.alpha[j]);
        let s = y[i] * y[j];
        let (lo, hi) = if s < 0.0 {
            ((aj - ai).max(0.0), (c + aj - ai).min(c))
        } else {
            ((ai + aj - c).max(0.0), (ai + aj).min(c))
        };
        if hi - lo <= 0.0 {
            return false;
        }
        let snap_eps = 1e-12 * c;
        let mut aj_new = (aj + y[j] * (self.err(i) - self.err(j)) / eta).clamp(lo, hi);
        if aj_new < snap_eps {
            aj_new = 0.0;
        } else if aj_new > c - snap_eps {
            aj_new = c;
        }
        let dj = aj_new - aj;
        if dj.abs() <= 1e-15 * c.max(1.0) {
            return false;
        }
        let mut ai_new = (ai - s * dj).clamp(0.0, c);
        if ai_new < snap_eps {
            ai_new = 0.0;
        } else if ai_new > c - snap_eps {
            ai_new = c;
        }
        let di = ai_new - ai;

        if cfg!(debug_assertions) {
            let gain = di + dj
                - (di * y[i] * self.f[i] + dj * y[j] * self.f[j])
                - 0.5 * (k.get(i, i) * di * di + 2.0 * s * k.get(i, j) * di * dj + k.get(j, j) * dj * dj);
            debug_assert!(gain >= -1e-10 * (1.0 + c), "dual objective decreased by {gain}");
        }

        self.alpha[i] = ai_new;
        self.alpha[j] = aj_new;
        let (wi, wj) = (di * y[i], dj * y[j]);
        let (ri, rj) = (k.row(i), k.row(j));
        for (t, f) in self.f.iter_mut().enumerate() {
            *f += wi * ri[t] + wj * rj[t];
        }
        true
    }

    fn bias(&self) -> f64 {
        let eps = 1e-8 * self.c;
        let free: Vec<f64> = (0..self.alpha.len())
            .filter(|&i| self.alpha[i] > eps && self.alpha[i] < self.c - eps)
            .map(|i| -self.err(i))
            .collect();
        if !free.is_empty() {
            return free.iter().sum::<f64>() / free.len() as f64;
        }
        let none = vec![false; self.alpha.len()];
        match self.extremes(&none) {
            (Some((_, m)), Some((_, big_m))) => 0.5 * (m + big_m),
            (Some((_, v)), None) | (None, Some((_, v))) => v,
            (None, None) => 0.0,
        }
    }
}

/// Solves the dual on a precomputed kernel matrix. `y` holds ±1 labels.
pub fn smo_train(k: &KernelMatrix, y: &[f64], config: &SvmConfig) -> Result<SmoSolution> {
    let n = k.n();
    if y.len() != n {
        return Err(Error::Usage(format!("{} labels for a {n}x{n} kernel", y.len())));
    }
    if let Some(i) = y.iter().position(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::Usage(format!("label {i} is {}, expected ±1", y[i])));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::Training("training labels contain a single class".into()));
    }
    if let Some(p) = k.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!(
            "kernel entry ({}, {}) is not finite",
            p / n,
            p % n
        )));
    }
    if !(config.tol.is_finite() && config.tol > 0.0) {
        return Err(Error::Config(format!("tol must be positive, got {}", config.tol)));
    }
    let c = config.box_constant(n)?;

    let mut solver = Solver {
        k,
        y,
        c,
        alpha: vec![0.0; n],
        f: vec![0.0; n],
    };
    let max_iterations = config.max_passes.saturating_mul(n.max(1));
    let mut blocked = vec![false; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iterations {
        let (up, low) = solver.extremes(&blocked);
        let (Some((i, gi)), Some((_, g_low))) = (up, low) else {
            break;
        };
        if gi - g_low <= config.tol {
            converged = blocked.iter().all(|b| !b) || {
                let none = vec![false; n];
                matches!(solver.extremes(&none), (Some((_, a)), Some((_, b))) if a - b <= config.tol)
            };
            break;
        }
        // Partners that violate jointly with i, best |E_i − E_j| first.
        let ei = solver.err(i);
        let mut partners: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != i && in_low(y[j], solver.alpha[j], c) && -solver.err(j) < gi - config.tol)
            .map(|j| (j, (ei - solver.err(j)).abs()))
            .collect();
        partners.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        iterations += 1;
        if partners.iter().any(|&(j, _)| solver.take_step(i, j)) {
            blocked.iter_mut().for_each(|b| *b = false);
        } else {
            blocked[i] = true;
        }
    }

    let none = vec![false; n];
    let kkt_gap = match solver.extremes(&none) {
        (Some((_, a)), Some((_, b))) => a - b,
        _ => 0.0,
    };
    Ok(SmoSolution {
        bias: solver.bias(),
        coefficients: solver.alpha,
        c,
        converged: converged && kkt_gap <= config.tol,
        iterations,
        kkt_gap,
    })
}

/// A trained kernel SVM with everything needed to score new points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmModel {
    pub lambda: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub bias: f64,
    pub coefficients: Vec<f64>,
    /// ±1 labels of the training rows.
    pub labels: Vec<i8>,
    pub kernel_spec: KernelSpec,
    #[serde(with = "crate::serde_rows")]
    pub training_data: Array2<f64>,
    pub feature_meta: FeatureMeta,
}

impl SvmModel {
    /// Computes the Gram matrix, runs SMO and keeps the training rows.
    pub fn fit(
        x: ArrayView2<'_, f64>,
        labels: &[u8],
        kernel_spec: KernelSpec,
        config: &SvmConfig,
        feature_meta: FeatureMeta,
    ) -> Result<(Self, SmoSolution)> {
        if labels.len() != x.nrows() {
            return Err(Error::Usage(format!(
                "{} labels for {} rows",
                labels.len(),
                x.nrows()
            )));
        }
        let k = crate::kernels::kernel_matrix(x, &kernel_spec)?;
        let y = signed_labels(labels);
        let sol = smo_train(&k, &y, config)?;
        let model = Self {
            lambda: config.lambda,
            c: sol.c,
            bias: sol.bias,
            coefficients: sol.coefficients.clone(),
            labels: y.iter().map(|&v| v as i8).collect(),
            kernel_spec,
            training_data: x.to_owned(),
            feature_meta,
        };
        Ok((model, sol))
    }

    pub fn support_indices(&self) -> Vec<usize> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > SUPPORT_THRESHOLD)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn n_features(&self) -> usize {
        self.training_data.ncols()
    }
}

/// `Σ_i c_i y_i k_i + b`.
pub fn decision_value(model: &SvmModel, k_vec: &[f64]) -> Result<f64> {
    if k_vec.len() != model.coefficients.len() {
        return Err(Error::Usage(format!(
            "kernel vector has {} entries, model has {} training points",
            k_vec.len(),
            model.coefficients.len()
        )));
    }
    Ok(model
        .coefficients
        .iter()
        .zip(&model.labels)
        .zip(k_vec)
        .map(|((c, &y), k)| c * f64::from(y) * k)
        .sum::<f64>()
        + model.bias)
}

/// Decision values for every row of `x_test`.
pub fn predict_scores(model: &SvmModel, x_test: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if x_test.nrows() == 0 {
        return Ok(Vec::new());
    }
    if x_test.ncols() != model.n_features() {
        return Err(Error::Usage(format!(
            "test data has {} features, model was trained on {}",
            x_test.ncols(),
            model.n_features()
        )));
    }
    let rows = kernel_rows(x_test, model.training_data.view(), &model.kernel_spec)?;
    rows.iter().map(|k| decision_value(model, k)).collect()
}
