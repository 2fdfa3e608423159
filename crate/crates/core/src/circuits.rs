//! Feature maps and the variational form.
//!
//! Data-dependent angles are `2π·x` for features expected in `[0, 1]`.
//! Builders accept any finite value so that angle wrap-around can be probed.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{Circuit, Gate, StateVector};

/// Which data-encoding circuit a feature map uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMapKind {
    AmplitudeEncoding,
    U2Reuploading,
    PauliZz,
}

fn default_reps() -> usize {
    2
}

/// A feature map φ(x): kind plus register size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureMapSpec {
    pub kind: FeatureMapKind,
    pub n_qubits: usize,
    /// Only used by `PauliZz`.
    #[serde(default = "default_reps")]
    pub reps: usize,
}

impl FeatureMapSpec {
    pub fn amplitude(n_qubits: usize) -> Self {
        Self {
            kind: FeatureMapKind::AmplitudeEncoding,
            n_qubits,
            reps: 1,
        }
    }

    pub fn u2_reuploading() -> Self {
        Self {
            kind: FeatureMapKind::U2Reuploading,
            n_qubits: 8,
            reps: 1,
        }
    }

    pub fn pauli_zz(reps: usize) -> Self {
        Self {
            kind: FeatureMapKind::PauliZz,
            n_qubits: 4,
            reps,
        }
    }

    /// Number of features consumed per encoding.
    pub fn expected_dim(&self) -> usize {
        match self.kind {
            FeatureMapKind::AmplitudeEncoding => 1 << self.n_qubits,
            FeatureMapKind::U2Reuploading => U2_FEATURES,
            FeatureMapKind::PauliZz => PAULI_ZZ_QUBITS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            FeatureMapKind::AmplitudeEncoding => {
                if !(1..=crate::simulator::MAX_QUBITS).contains(&self.n_qubits) {
                    return Err(Error::Config(format!(
                        "amplitude encoding needs 1..={} qubits, got {}",
                        crate::simulator::MAX_QUBITS,
                        self.n_qubits
                    )));
                }
            }
            FeatureMapKind::U2Reuploading => {
                if self.n_qubits != U2_QUBITS {
                    return Err(Error::Config(format!(
                        "u2_reuploading is an {U2_QUBITS}-qubit map, got n_qubits = {}",
                        self.n_qubits
                    )));
                }
            }
            FeatureMapKind::PauliZz => {
                if self.n_qubits != PAULI_ZZ_QUBITS {
                    return Err(Error::Config(format!(
                        "pauli_zz is a {PAULI_ZZ_QUBITS}-qubit map, got n_qubits = {}",
                        self.n_qubits
                    )));
                }
                if self.reps == 0 {
                    return Err(Error::Config("pauli_zz needs reps >= 1".into()));
                }
            }
        }
        Ok(())
    }

    /// Prepares φ(x) from |0...0>.
    pub fn encode(&self, x: &[f64]) -> Result<StateVector> {
        self.validate()?;
        match self.kind {
            FeatureMapKind::AmplitudeEncoding => {
                if x.len() != self.expected_dim() {
                    return Err(Error::Usage(format!(
                        "amplitude map on {} qubits expects {} features, got {}",
                        self.n_qubits,
                        self.expected_dim(),
                        x.len()
                    )));
                }
                amplitude_encode(x, self.n_qubits)
            }
            FeatureMapKind::U2Reuploading => Ok(u2_reuploading_map(x)?.simulate()),
            FeatureMapKind::PauliZz => Ok(pauli_zz_feature_map(x, self.reps)?.simulate()),
        }
    }
}

const U2_QUBITS: usize = 8;
const U2_FEATURES: usize = 16;
const PAULI_ZZ_QUBITS: usize = 4;

fn check_finite(x: &[f64]) -> Result<()> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Usage(format!("feature {i} is not finite ({})", x[i])));
    }
    Ok(())
}

/// Stores `x`, zero-padded to `2^n_qubits` and L2-normalized, as amplitudes.
pub fn amplitude_encode(x: &[f64], n_qubits: usize) -> Result<StateVector> {
    if !(1..=crate::simulator::MAX_QUBITS).contains(&n_qubits) {
        return Err(Error::Config(format!(
            "n_qubits must be in 1..={}, got {n_qubits}",
            crate::simulator::MAX_QUBITS
        )));
    }
    let dim = 1usize << n_qubits;
    if x.is_empty() || x.len() > dim {
        return Err(Error::Usage(format!(
            "cannot amplitude-encode {} features on {n_qubits} qubits (capacity {dim})",
            x.len()
        )));
    }
    check_finite(x)?;
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 1e-12 {
        return Err(Error::DegenerateInput(format!(
            "feature vector norm {norm:e} is too small to amplitude-encode"
        )));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    for (a, v) in amps.iter_mut().zip(x) {
        *a = Complex64::new(v / norm, 0.0);
    }
    StateVector::from_amplitudes(amps)
}

/// Eight-qubit re-uploading encoder for 16 features.
///
/// Two blocks; in block `r` qubit `q` gets `U2(2π·x[2q + 8r mod 16], 2π·x[2q + 1 + 8r mod 16])`
/// followed by the cascade `CNOT(q, q+1)` for `q = 0..6`. Every feature is
/// uploaded exactly twice.
pub fn u2_reuploading_map(x: &[f64]) -> Result<Circuit> {
    if x.len() != U2_FEATURES {
        return Err(Error::Usage(format!(
            "u2_reuploading expects {U2_FEATURES} features, got {}",
            x.len()
        )));
    }
    check_finite(x)?;
    let mut circ = Circuit::new(U2_QUBITS)?;
    for block in 0..2 {
        for q in 0..U2_QUBITS {
            let phi = 2.0 * PI * x[(2 * q + 8 * block) % U2_FEATURES];
            let lambda = 2.0 * PI * x[(2 * q + 1 + 8 * block) % U2_FEATURES];
            circ.push(Gate::U2 { target: q, phi, lambda })?;
        }
        for q in 0..U2_QUBITS - 1 {
            circ.push(Gate::Cnot { control: q, target: q + 1 })?;
        }
    }
    Ok(circ)
}

/// Four-qubit ZZ-style feature map.
///
/// Per repetition: `H` on every qubit, `RZ(2π·x[q])` on qubit `q`, then for
/// each neighbour pair `CNOT(q, q+1) · RZ(2(π − πx[q])(π − πx[q+1])) · CNOT(q, q+1)`.
pub fn pauli_zz_feature_map(x: &[f64], reps: usize) -> Result<Circuit> {
    if x.len() != PAULI_ZZ_QUBITS {
        return Err(Error::Usage(format!(
            "pauli_zz expects {PAULI_ZZ_QUBITS} features, got {}",
            x.len()
        )));
    }
    if reps == 0 {
        return Err(Error::Usage("pauli_zz needs reps >= 1".into()));
    }
    check_finite(x)?;
    let mut circ = Circuit::new(PAULI_ZZ_QUBITS)?;
    for _ in 0..reps {
        for q in 0..PAULI_ZZ_QUBITS {
            circ.push(Gate::H { target: q })?;
        }
        for q in 0..PAULI_ZZ_QUBITS {
            circ.push(Gate::Rz { target: q, theta: 2.0 * PI * x[q] })?;
        }
        for q in 0..PAULI_ZZ_QUBITS - 1 {
            let theta = 2.0 * (PI - PI * x[q]) * (PI - PI * x[q + 1]);
            circ.push(Gate::Cnot { control: q, target: q + 1 })?;
            circ.push(Gate::Rz { target: q + 1, theta })?;
            circ.push(Gate::Cnot { control: q, target: q + 1 })?;
        }
    }
    Ok(circ)
}

fn default_rotation_layers() -> usize {
    2
}

/// Layout of one variational-form instance: RY rotation layers separated by
/// linear CNOT cascades.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationalFormSpec {
    pub n_qubits: usize,
    #[serde(default = "default_rotation_layers")]
    pub rotation_layers: usize,
}

impl Default for VariationalFormSpec {
    fn default() -> Self {
        Self {
            n_qubits: 4,
            rotation_layers: default_rotation_layers(),
        }
    }
}

impl VariationalFormSpec {
    pub fn params_per_instance(&self) -> usize {
        self.n_qubits * self.rotation_layers
    }

    pub fn validate(&self) -> Result<()> {
        if self.rotation_layers == 0 {
            return Err(Error::Config("variational form needs at least one rotation layer".into()));
        }
        if !(1..=crate::simulator::MAX_QUBITS).contains(&self.n_qubits) {
            return Err(Error::Config(format!(
                "variational form n_qubits {} out of range",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Builds the form for `theta`: layer `l` applies `RY(theta[l·n + q])`
    /// to qubit `q`, with a CNOT cascade between consecutive layers.
    pub fn build(&self, theta: &[f64]) -> Result<Circuit> {
        self.validate()?;
        let n = self.n_qubits;
        if theta.len() != self.params_per_instance() {
            return Err(Error::Usage(format!(
                "variational form expects {} parameters, got {}",
                self.params_per_instance(),
                theta.len()
            )));
        }
        let mut circ = Circuit::new(n)?;
        for (layer, angles) in theta.chunks(n).enumerate() {
            if layer > 0 {
                for q in 0..n - 1 {
                    circ.push(Gate::Cnot { control: q, target: q + 1 })?;
                }
            }
            for (q, &theta) in angles.iter().enumerate() {
                circ.push(Gate::Ry { target: q, theta })?;
            }
        }
        Ok(circ)
    }
}

/// The default two-layer variational form on `n_qubits` qubits.
pub fn variational_form(theta: &[f64], n_qubits: usize) -> Result<Circuit> {
    VariationalFormSpec {
        n_qubits,
        rotation_layers: default_rotation_layers(),
    }
    .build(theta)
}
