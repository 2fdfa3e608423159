//! Four-qubit variational classifier with data re-uploading.
//!
//! The circuit alternates feature-map loads of four inputs with
//! variational-form instances: `FM(x[0..4]) VF(θ[0..8]) FM(x[4..8]) VF(θ[8..16])`.
//! The output is the probability of measuring qubit 0 in `|1>`, read as p(signal).

use std::f64::consts::{FRAC_PI_2, PI};

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{FeatureMapKind, FeatureMapSpec, VariationalFormSpec};
use crate::data::{Dataset, FeatureMeta};
use crate::error::{Error, Result};
pub use crate::optim::AdamState;
use crate::optim::AdamHyper;
use crate::simulator::StateVector;

/// Number of feature-map loads per forward pass.
pub const UPLOADS: usize = 2;

const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-3,
            batch_size: 50,
            epochs: 70,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamHyper {
        AdamHyper {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!("learning_rate must be >= 0, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must be in [0, 1), got {b}")));
            }
        }
        if self.adam_eps.is_nan() || self.adam_eps <= 0.0 {
            return Err(Error::Config(format!("adam_eps must be > 0, got {}", self.adam_eps)));
        }
        Ok(())
    }
}

/// Trained parameters and the circuit layout they belong to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqcModel {
    pub theta: Vec<f64>,
    pub fm_spec: FeatureMapSpec,
    pub vf_spec: VariationalFormSpec,
    pub train_config: TrainConfig,
    pub final_epoch_loss: Option<f64>,
    #[serde(default)]
    pub feature_meta: FeatureMeta,
}

impl VqcModel {
    /// Default layout (PauliZZ with two repetitions, two-layer RY form) with the given parameters.
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        let model = Self {
            theta,
            fm_spec: FeatureMapSpec::pauli_zz(2),
            vf_spec: VariationalFormSpec::default(),
            train_config: TrainConfig::default(),
            final_epoch_loss: None,
            feature_meta: FeatureMeta::default(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn n_params(&self) -> usize {
        UPLOADS * self.vf_spec.params_per_instance()
    }

    pub fn input_dim(&self) -> usize {
        UPLOADS * self.fm_spec.expected_dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.fm_spec.validate()?;
        self.vf_spec.validate()?;
        if self.fm_spec.kind != FeatureMapKind::PauliZz {
            return Err(Error::Config(format!("VQC feature map must be pauli_zz, got {:?}", self.fm_spec.kind)));
        }
        if self.fm_spec.n_qubits != self.vf_spec.n_qubits {
            return Err(Error::Config(format!(
                "feature map acts on {} qubits, variational form on {}",
                self.fm_spec.n_qubits, self.vf_spec.n_qubits
            )));
        }
        if self.theta.len() != self.n_params() {
            return Err(Error::Config(format!(
                "theta has {} entries, layout needs {}",
                self.theta.len(),
                self.n_params()
            )));
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Usage(format!("VQC expects {} features, got {}", self.input_dim(), x.len())));
        }
        Ok(())
    }

    /// P(qubit 0 = 1) for an explicit parameter vector.
    fn prob(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        let chunk = self.fm_spec.expected_dim();
        let per = self.vf_spec.params_per_instance();
        let mut state = StateVector::zero(self.fm_spec.n_qubits)?;
        for u in 0..UPLOADS {
            let fm = crate::circuits::pauli_zz_feature_map(&x[u * chunk..(u + 1) * chunk], self.fm_spec.reps)?;
            state.run(&fm)?;
            state.run(&self.vf_spec.build(&theta[u * per..(u + 1) * per])?)?;
        }
        state.prob_one(0)
    }
}

/// p(signal) for one 8-feature input.
pub fn vqc_forward(x: &[f64], model: &VqcModel) -> Result<f64> {
    model.validate()?;
    model.check_input(x)?;
    model.prob(x, &model.theta)
}

/// p(signal) for every row, in row order.
pub fn vqc_predict(x: ArrayView2<'_, f64>, model: &VqcModel) -> Result<Vec<f64>> {
    model.validate()?;
    if x.ncols() != model.input_dim() {
        return Err(Error::Usage(format!("VQC expects {} features, got {}", model.input_dim(), x.ncols())));
    }
    let rows: Vec<Vec<f64>> = x.outer_iter().map(|r| r.to_vec()).collect();
    rows.par_iter()
        .enumerate()
        .map(|(row, r)| model.prob(r, &model.theta).map_err(|e| Error::Row { row, source: Box::new(e) }))
        .collect()
}

/// Signal iff `p > 0.5`.
pub fn classify(p: f64) -> u8 {
    u8::from(p > 0.5)
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Mean binary cross-entropy.
pub fn bce_loss(probs: &[f64], labels: &[u8]) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::Usage(format!("{} probabilities for {} labels", probs.len(), labels.len())));
    }
    if probs.is_empty() {
        return Err(Error::Usage("loss of an empty batch".into()));
    }
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = clamp_prob(p);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(total / probs.len() as f64)
}

/// Parameter-shift gradient of p(signal) with respect to θ.
pub fn param_shift_prob_grad(x: &[f64], model: &VqcModel) -> Result<Vec<f64>> {
    model.validate()?;
    model.check_input(x)?;
    let mut shifted = model.theta.clone();
    (0..shifted.len())
        .map(|k| {
            let base = model.theta[k];
            shifted[k] = base + FRAC_PI_2;
            let up = model.prob(x, &shifted)?;
            shifted[k] = base - FRAC_PI_2;
            let down = model.prob(x, &shifted)?;
            shifted[k] = base;
            Ok(0.5 * (up - down))
        })
        .collect()
}

/// Gradient of the single-sample loss with respect to θ.
pub fn param_shift_grad(x: &[f64], y: u8, model: &VqcModel) -> Result<Vec<f64>> {
    if y > 1 {
        return Err(Error::Usage(format!("label {y}, expected 0 or 1")));
    }
    let p = clamp_prob(vqc_forward(x, model)?);
    let dl_dp = (p - f64::from(y)) / (p * (1.0 - p));
    Ok(param_shift_prob_grad(x, model)?.into_iter().map(|g| dl_dp * g).collect())
}

/// Mean of per-sample gradients over the rows of `x`.
pub fn param_shift_batch_grad(x: ArrayView2<'_, f64>, labels: &[u8], model: &VqcModel) -> Result<Vec<f64>> {
    if x.nrows() != labels.len() || labels.is_empty() {
        return Err(Error::Usage(format!("{} rows for {} labels", x.nrows(), labels.len())));
    }
    let rows: Vec<Vec<f64>> = x.outer_iter().map(|r| r.to_vec()).collect();
    let per_sample = rows
        .par_iter()
        .zip(labels.par_iter())
        .map(|(r, &y)| param_shift_grad(r, y, model))
        .collect::<Result<Vec<_>>>()?;
    let mut mean = vec![0.0; model.theta.len()];
    for g in &per_sample {
        for (m, gi) in mean.iter_mut().zip(g) {
            *m += gi;
        }
    }
    let n = per_sample.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

/// One Adam update of `theta` using the config's hyperparameters.
pub fn adam_step(theta: &mut [f64], grad: &[f64], state: &mut AdamState, config: &TrainConfig) -> Result<()> {
    state.step(theta, grad, &config.adam())
}

/// Trains from a seeded uniform `[−π, π)` start; returns the model and the
/// training-set loss measured after every epoch.
pub fn vqc_train(train: &Dataset, config: &TrainConfig) -> Result<(VqcModel, Vec<f64>)> {
    config.validate()?;
    let mut model = VqcModel::new(vec![0.0; UPLOADS * VariationalFormSpec::default().params_per_instance()])?;
    if train.n_features() != model.input_dim() {
        return Err(Error::Config(format!(
            "VQC needs {}-feature data, got {}",
            model.input_dim(),
            train.n_features()
        )));
    }
    if train.n_rows() == 0 {
        return Err(Error::Data("empty training set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for t in model.theta.iter_mut() {
        *t = rng.random_range(-PI..PI);
    }
    model.train_config = config.clone();
    model.feature_meta = train.meta();

    let mut adam = AdamState::new(model.theta.len());
    let mut order: Vec<usize> = (0..train.n_rows()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let xb = train.features.select(ndarray::Axis(0), batch);
            let yb: Vec<u8> = batch.iter().map(|&i| train.labels[i]).collect();
            let grad = param_shift_batch_grad(xb.view(), &yb, &model)?;
            let mut theta = std::mem::take(&mut model.theta);
            adam_step(&mut theta, &grad, &mut adam, config)?;
            model.theta = theta;
        }
        let probs = vqc_predict(train.features.view(), &model)?;
        let loss = bce_loss(&probs, &train.labels)?;
        if !loss.is_finite() {
            return Err(Error::Training(format!("loss became {loss}")));
        }
        trace.push(loss);
    }
    model.final_epoch_loss = trace.last().copied();
    Ok((model, trace))
}

/// `epoch,loss` CSV with 1-based epochs.
pub fn loss_trace_csv(trace: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (e, l) in trace.iter().enumerate() {
        out.push_str(&format!("{},{l}\n", e + 1));
    }
    out
}
