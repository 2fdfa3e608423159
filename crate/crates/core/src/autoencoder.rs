//! Dense autoencoder for feature reduction.
//!
//! Hidden layers use ReLU; the latent layer and the reconstruction use a
//! sigmoid so both live in `(0, 1)`. Training minimizes the mean squared
//! reconstruction error with Adam and keeps the epoch with the lowest
//! validation error.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{AdamHyper, AdamState};

/// Encoder layer sizes from input to latent; the decoder mirrors them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AeArchitecture {
    pub layer_sizes: Vec<usize>,
}

impl AeArchitecture {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        let arch = Self { layer_sizes };
        arch.validate()?;
        Ok(arch)
    }

    /// `hidden` encoder layers whose widths interpolate geometrically between
    /// `input` and `latent`.
    pub fn geometric(input: usize, latent: usize, hidden: usize) -> Result<Self> {
        if input == 0 || latent == 0 {
            return Err(Error::Config("layer sizes must be positive".into()));
        }
        let ratio = latent as f64 / input as f64;
        let steps = (hidden + 1) as f64;
        let sizes = (0..=hidden + 1)
            .map(|i| match i {
                0 => input,
                i if i == hidden + 1 => latent,
                i => (input as f64 * ratio.powf(i as f64 / steps)).round() as usize,
            })
            .collect();
        Self::new(sizes)
    }

    /// 67 inputs, six hidden encoder layers, 16 latent features.
    pub fn preset_latent16() -> Self {
        Self::geometric(67, 16, 6).expect("valid preset")
    }

    /// 67 inputs, seven hidden encoder layers, 8 latent features.
    pub fn preset_latent8() -> Self {
        Self::geometric(67, 8, 7).expect("valid preset")
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::Config("an autoencoder needs at least input and latent sizes".into()));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::Config(format!("zero-width layer in {:?}", self.layer_sizes)));
        }
        if self.latent_dim() >= self.input_dim() {
            return Err(Error::Config(format!(
                "latent size {} must be below input size {}",
                self.latent_dim(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn latent_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated")
    }

    /// Encoder sizes followed by their mirror image.
    pub fn full_sizes(&self) -> Vec<usize> {
        let mut sizes = self.layer_sizes.clone();
        sizes.extend(self.layer_sizes.iter().rev().skip(1));
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

/// Trained weights. `weights[l]` has shape `(out, in)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AeModel {
    pub layer_sizes: Vec<usize>,
    #[serde(with = "crate::serde_rows::list")]
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Gradients with the same layout as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AeGradient {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl AeGradient {
    pub fn flatten(&self) -> Vec<f64> {
        flatten(&self.weights, &self.biases)
    }
}

fn flatten(weights: &[Array2<f64>], biases: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for (w, b) in weights.iter().zip(biases) {
        out.extend(w.iter());
        out.extend(b);
    }
    out
}

impl AeModel {
    /// All-zero weights and biases.
    pub fn zeros(arch: &AeArchitecture) -> Result<Self> {
        arch.validate()?;
        let sizes = arch.full_sizes();
        Ok(Self {
            weights: sizes.windows(2).map(|w| Array2::zeros((w[1], w[0]))).collect(),
            biases: sizes[1..].iter().map(|&n| vec![0.0; n]).collect(),
            layer_sizes: arch.layer_sizes.clone(),
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot(arch: &AeArchitecture, rng: &mut impl Rng) -> Result<Self> {
        let mut model = Self::zeros(arch)?;
        for w in &mut model.weights {
            let (fan_out, fan_in) = w.dim();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            w.mapv_inplace(|_| rng.random_range(-limit..limit));
        }
        Ok(model)
    }

    pub fn architecture(&self) -> AeArchitecture {
        AeArchitecture {
            layer_sizes: self.layer_sizes.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let arch = self.architecture();
        arch.validate()?;
        let sizes = arch.full_sizes();
        let layers = sizes.len() - 1;
        if self.weights.len() != layers || self.biases.len() != layers {
            return Err(Error::Config(format!(
                "expected {layers} weight and bias layers, got {} and {}",
                self.weights.len(),
                self.biases.len()
            )));
        }
        for (l, pair) in sizes.windows(2).enumerate() {
            if self.weights[l].dim() != (pair[1], pair[0]) || self.biases[l].len() != pair[1] {
                return Err(Error::Config(format!(
                    "layer {l} should map {} -> {}, found weights {:?} and {} biases",
                    pair[0],
                    pair[1],
                    self.weights[l].dim(),
                    self.biases[l].len()
                )));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn latent_dim(&self) -> usize {
        *self.layer_sizes.last().expect("non-empty")
    }

    fn encoder_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.encoder_layers() || layer + 1 == self.weights.len() {
            Activation::Sigmoid
        } else {
            Activation::Relu
        }
    }

    pub fn flat_params(&self) -> Vec<f64> {
        flatten(&self.weights, &self.biases)
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        let expected: usize = self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>();
        if params.len() != expected {
            return Err(Error::Usage(format!("{} parameters for a model with {expected}", params.len())));
        }
        let mut it = params.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            w.iter_mut().for_each(|v| *v = it.next().expect("length checked"));
            b.iter_mut().for_each(|v| *v = it.next().expect("length checked"));
        }
        Ok(())
    }

    fn check_input(&self, x: ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Usage(format!(
                "autoencoder expects {} features, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Activations after each of the first `layers` dense layers, preceded by the input.
    fn activations(&self, x: ArrayView2<'_, f64>, layers: usize) -> Vec<Array2<f64>> {
        let mut acts = vec![x.to_owned()];
        for l in 0..layers {
            let act = self.activation(l);
            let mut z = acts[l].dot(&self.weights[l].t());
            z += &ArrayView1::from(&self.biases[l][..]);
            z.mapv_inplace(|v| act.apply(v));
            acts.push(z);
        }
        acts
    }

    /// Reconstructions for every row.
    pub fn reconstruct(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.validate()?;
        self.check_input(x)?;
        Ok(self.activations(x, self.weights.len()).pop().expect("non-empty"))
    }

    /// Mean squared reconstruction error over all entries.
    pub fn mse(&self, x: ArrayView2<'_, f64>) -> Result<f64> {
        let rec = self.reconstruct(x)?;
        if x.is_empty() {
            return Err(Error::Data("MSE of an empty matrix".into()));
        }
        Ok((&rec - &x).mapv(|d| d * d).mean().expect("non-empty"))
    }

    /// MSE on `x` and its gradient by backpropagation.
    pub fn mse_gradient(&self, x: ArrayView2<'_, f64>) -> Result<(f64, AeGradient)> {
        self.validate()?;
        self.check_input(x)?;
        if x.is_empty() {
            return Err(Error::Data("MSE of an empty matrix".into()));
        }
        let layers = self.weights.len();
        let acts = self.activations(x, layers);
        let out = &acts[layers];
        let diff = out - &x;
        let loss = diff.mapv(|d| d * d).mean().expect("non-empty");

        let mut delta = diff * (2.0 / x.len() as f64);
        let mut weights = vec![Array2::zeros((0, 0)); layers];
        let mut biases = vec![Vec::new(); layers];
        for l in (0..layers).rev() {
            let act = self.activation(l);
            delta.zip_mut_with(&acts[l + 1], |d, &a| *d *= act.derivative_from_output(a));
            weights[l] = delta.t().dot(&acts[l]);
            biases[l] = delta.sum_axis(Axis(0)).to_vec();
            if l > 0 {
                delta = delta.dot(&self.weights[l]);
            }
        }
        Ok((loss, AeGradient { weights, biases }))
    }
}

/// Reconstruction and latent vector for one input.
pub fn ae_forward(x: &[f64], model: &AeModel) -> Result<(Vec<f64>, Vec<f64>)> {
    model.validate()?;
    let row = ArrayView2::from_shape((1, x.len()), x).expect("one row");
    model.check_input(row)?;
    let acts = model.activations(row, model.weights.len());
    let latent = acts[model.encoder_layers()].row(0).to_vec();
    let rec = acts[model.weights.len()].row(0).to_vec();
    Ok((rec, latent))
}

/// Encoder half applied row by row.
pub fn encode_latent(x: ArrayView2<'_, f64>, model: &AeModel) -> Result<Array2<f64>> {
    model.validate()?;
    model.check_input(x)?;
    Ok(model.activations(x, model.encoder_layers()).pop().expect("non-empty"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeTrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
}

impl Default for AeTrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-3,
            batch_size: 128,
            epochs: 80,
            seed: 0,
            train_fraction: 0.8,
            valid_fraction: 0.1,
            test_fraction: 0.1,
        }
    }
}

impl AeTrainConfig {
    /// Settings paired with [`AeArchitecture::preset_latent8`].
    pub fn preset_latent8() -> Self {
        Self {
            learning_rate: 3f64.sqrt() * 1e-3,
            batch_size: 93,
            epochs: 30,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!("learning_rate must be >= 0, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        let fractions = [self.train_fraction, self.valid_fraction, self.test_fraction];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || self.train_fraction == 0.0 || self.valid_fraction == 0.0 {
            return Err(Error::Config(format!("invalid split fractions {fractions:?}")));
        }
        if (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions {fractions:?} must sum to 1")));
        }
        Ok(())
    }
}

pub const MIN_AE_ROWS: usize = 10;

/// Everything a training run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct AeTrainOutcome {
    /// Snapshot from the epoch with the lowest validation MSE.
    pub model: AeModel,
    /// Validation MSE after each epoch.
    pub valid_mse: Vec<f64>,
    pub initial_valid_mse: f64,
    /// 1-based; `None` when no epoch ran.
    pub best_epoch: Option<usize>,
    pub test_mse: Option<f64>,
}

/// Seeded shuffle into train/valid/test rows, then minibatch Adam on the
/// training rows.
pub fn ae_train(data: ArrayView2<'_, f64>, arch: &AeArchitecture, config: &AeTrainConfig) -> Result<AeTrainOutcome> {
    arch.validate()?;
    config.validate()?;
    if data.ncols() != arch.input_dim() {
        return Err(Error::Config(format!(
            "architecture expects {} features, data has {}",
            arch.input_dim(),
            data.ncols()
        )));
    }
    let n = data.nrows();
    if n < MIN_AE_ROWS {
        return Err(Error::Data(format!("autoencoder training needs at least {MIN_AE_ROWS} rows, got {n}")));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite value in autoencoder input".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = AeModel::glorot(arch, &mut rng)?;
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut rng);
    let n_train = ((n as f64 * config.train_fraction).round() as usize).clamp(1, n - 1);
    let n_valid = ((n as f64 * config.valid_fraction).round() as usize).clamp(1, n - n_train);
    let train = data.select(Axis(0), &rows[..n_train]);
    let valid = data.select(Axis(0), &rows[n_train..n_train + n_valid]);
    let test = data.select(Axis(0), &rows[n_train + n_valid..]);

    let initial_valid_mse = model.mse(valid.view())?;
    let hyper = AdamHyper::with_learning_rate(config.learning_rate);
    let mut adam = AdamState::new(model.flat_params().len());
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut valid_mse = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, AeModel)> = None;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let xb = train.select(Axis(0), batch);
            let (_, grad) = model.mse_gradient(xb.view())?;
            let mut params = model.flat_params();
            adam.step(&mut params, &grad.flatten(), &hyper)?;
            model.set_flat_params(&params)?;
        }
        let mse = model.mse(valid.view())?;
        if !mse.is_finite() {
            return Err(Error::Training(format!("validation MSE became {mse} at epoch {epoch}")));
        }
        valid_mse.push(mse);
        if best.as_ref().is_none_or(|(_, b, _)| mse < *b) {
            best = Some((epoch, mse, model.clone()));
        }
    }
    let (best_epoch, model) = match best {
        Some((epoch, _, m)) => (Some(epoch), m),
        None => (None, model),
    };
    let test_mse = if test.nrows() > 0 { Some(model.mse(test.view())?) } else { None };
    Ok(AeTrainOutcome {
        model,
        valid_mse,
        initial_valid_mse,
        best_epoch,
        test_mse,
    })
}

/// `epoch,valid_mse` CSV with 1-based epochs.
pub fn mse_trace_csv(trace: &[f64]) -> String {
    let mut out = String::from("epoch,valid_mse\n");
    for (e, l) in trace.iter().enumerate() {
        out.push_str(&format!("{},{l}\n", e + 1));
    }
    out
}
