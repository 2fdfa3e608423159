//! Adam optimizer shared by the variational classifier and the autoencoder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamHyper {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// One bias-corrected update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], hyper: &AdamHyper) -> Result<()> {
        if grad.len() != params.len() || self.m.len() != params.len() || self.v.len() != params.len() {
            return Err(Error::Usage(format!(
                "Adam lengths differ: params {}, grad {}, state {}/{}",
                params.len(),
                grad.len(),
                self.m.len(),
                self.v.len()
            )));
        }
        self.t += 1;
        let AdamHyper { learning_rate, beta1: b1, beta2: b2, eps } = *hyper;
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        for k in 0..params.len() {
            self.m[k] = b1 * self.m[k] + (1.0 - b1) * grad[k];
            self.v[k] = b2 * self.v[k] + (1.0 - b2) * grad[k] * grad[k];
            let m_hat = self.m[k] / c1;
            let v_hat = self.v[k] / c2;
            params[k] -= learning_rate * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}
