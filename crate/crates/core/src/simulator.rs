//! Exact statevector simulation for small circuits.
//!
//! Qubit ordering is little-endian: qubit 0 is the least-significant bit of
//! the basis index. Single-qubit gates update amplitude pairs in place with
//! stride `2^target`; no full matrices are ever built.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A 2x2 complex matrix in row-major order.
pub type Matrix2 = [[Complex64; 2]; 2];

/// The `2^n` complex amplitudes of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The computational basis state |0...0>.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The caller is responsible for normalization;
    /// only the length is checked.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Usage(format!(
                "amplitude vector length {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_register(n_qubits)?;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// Euclidean norm of the amplitude vector.
    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Applies one gate in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match *gate {
            Gate::Cnot { control, target } => {
                let c = 1usize << control;
                let t = 1usize << target;
                for k in 0..self.amplitudes.len() {
                    if k & c != 0 && k & t == 0 {
                        self.amplitudes.swap(k, k | t);
                    }
                }
            }
            _ => {
                let target = gate.targets()[0];
                let m = gate.matrix().expect("single-qubit gate has a matrix");
                self.apply_single(target, &m);
            }
        }
        Ok(())
    }

    fn apply_single(&mut self, target: usize, m: &Matrix2) {
        let stride = 1usize << target;
        let len = self.amplitudes.len();
        let mut base = 0;
        while base < len {
            for k in base..base + stride {
                let a0 = self.amplitudes[k];
                let a1 = self.amplitudes[k + stride];
                self.amplitudes[k] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[k + stride] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += stride << 1;
        }
    }

    /// Applies every gate of `circuit` in order.
    pub fn run(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits() != self.n_qubits {
            return Err(Error::Usage(format!(
                "circuit acts on {} qubits but the state has {}",
                circuit.n_qubits(),
                self.n_qubits
            )));
        }
        for gate in circuit.gates() {
            self.apply(gate)?;
        }
        Ok(())
    }

    /// Probability of reading 1 on `qubit` in the computational basis.
    pub fn prob_one(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.n_qubits {
            return Err(Error::Usage(format!(
                "qubit {qubit} out of range for a {}-qubit state",
                self.n_qubits
            )));
        }
        let mask = 1usize << qubit;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(k, _)| k & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// `<self|other>`, conjugating the left operand.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Usage(format!(
                "inner product of {}-qubit and {}-qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

fn check_register(n_qubits: usize) -> Result<()> {
    if !(1..=MAX_QUBITS).contains(&n_qubits) {
        return Err(Error::Config(format!(
            "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
        )));
    }
    Ok(())
}

/// Gates supported by the simulator. Angles are in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Ry { target: usize, theta: f64 },
    Rz { target: usize, theta: f64 },
    H { target: usize },
    X { target: usize },
    U3 { target: usize, theta: f64, phi: f64, lambda: f64 },
    U2 { target: usize, phi: f64, lambda: f64 },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn targets(&self) -> Vec<usize> {
        match *self {
            Gate::Ry { target, .. }
            | Gate::Rz { target, .. }
            | Gate::H { target }
            | Gate::X { target }
            | Gate::U3 { target, .. }
            | Gate::U2 { target, .. } => vec![target],
            Gate::Cnot { control, target } => vec![control, target],
        }
    }

    /// Checks qubit indices against a register size.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let targets = self.targets();
        if let Some(&q) = targets.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::Usage(format!(
                "{self:?}: qubit {q} out of range for {n_qubits} qubits"
            )));
        }
        if let Gate::Cnot { control, target } = *self {
            if control == target {
                return Err(Error::Usage(format!(
                    "CNOT control and target are both qubit {control}"
                )));
            }
        }
        Ok(())
    }

    /// The 2x2 unitary of a single-qubit gate; `None` for CNOT.
    pub fn matrix(&self) -> Option<Matrix2> {
        let m = match *self {
            Gate::Ry { theta, .. } => u3_matrix(theta, 0.0, 0.0),
            Gate::Rz { theta, .. } => {
                let half = 0.5 * theta;
                [
                    [Complex64::from_polar(1.0, -half), ZERO],
                    [ZERO, Complex64::from_polar(1.0, half)],
                ]
            }
            Gate::H { .. } => {
                let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                [[s, s], [s, -s]]
            }
            Gate::X { .. } => [[ZERO, ONE], [ONE, ZERO]],
            Gate::U3 {
                theta, phi, lambda, ..
            } => u3_matrix(theta, phi, lambda),
            Gate::U2 { phi, lambda, .. } => u3_matrix(std::f64::consts::FRAC_PI_2, phi, lambda),
            Gate::Cnot { .. } => return None,
        };
        Some(m)
    }

    /// A gate whose unitary is the conjugate transpose of this one.
    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Ry { target, theta } => Gate::Ry {
                target,
                theta: -theta,
            },
            Gate::Rz { target, theta } => Gate::Rz {
                target,
                theta: -theta,
            },
            Gate::H { .. } | Gate::X { .. } | Gate::Cnot { .. } => *self,
            Gate::U3 {
                target,
                theta,
                phi,
                lambda,
            } => Gate::U3 {
                target,
                theta: -theta,
                phi: -lambda,
                lambda: -phi,
            },
            Gate::U2 {
                target,
                phi,
                lambda,
            } => Gate::U3 {
                target,
                theta: -std::f64::consts::FRAC_PI_2,
                phi: -lambda,
                lambda: -phi,
            },
        }
    }
}

/// `U3(θ, φ, λ) = [[cos θ/2, -e^{iλ} sin θ/2], [e^{iφ} sin θ/2, e^{i(φ+λ)} cos θ/2]]`.
pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> Matrix2 {
    let (s, c) = (0.5 * theta).sin_cos();
    [
        [Complex64::new(c, 0.0), -Complex64::from_polar(s, lambda)],
        [
            Complex64::from_polar(s, phi),
            Complex64::from_polar(c, phi + lambda),
        ],
    ]
}

/// An ordered gate list on a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        Ok(Self {
            n_qubits,
            gates: Vec::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Appends a gate after validating its qubit indices.
    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    /// Appends all gates of `other`, which must act on the same register.
    pub fn extend(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::Usage(format!(
                "cannot append a {}-qubit circuit to a {}-qubit circuit",
                other.n_qubits, self.n_qubits
            )));
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(self)
    }

    /// The adjoint circuit: inverted gates in reverse order.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    /// Runs the circuit on |0...0> and returns the final state.
    pub fn simulate(&self) -> StateVector {
        let mut state = StateVector::zero(self.n_qubits).expect("register size checked at construction");
        for gate in &self.gates {
            state.apply(gate).expect("gates validated on push");
        }
        state
    }
}

/// |0...0> on `n_qubits` qubits.
pub fn zero_state(n_qubits: usize) -> Result<StateVector> {
    StateVector::zero(n_qubits)
}

/// Returns `state` transformed by `gate`.
pub fn apply_gate(mut state: StateVector, gate: &Gate) -> Result<StateVector> {
    state.apply(gate)?;
    Ok(state)
}

/// Returns `state` transformed by every gate of `circuit` in order.
pub fn run_circuit(circuit: &Circuit, mut state: StateVector) -> Result<StateVector> {
    state.run(circuit)?;
    Ok(state)
}

pub fn prob_qubit_one(state: &StateVector, qubit: usize) -> Result<f64> {
    state.prob_one(qubit)
}

/// `Σ_k conj(a_k) b_k`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    a.inner(b)
}
