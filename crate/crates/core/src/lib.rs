//! Statevector simulation, quantum kernels and classical baselines for
//! binary signal/background classification.

pub mod autoencoder;
pub mod circuits;
pub mod data;
pub mod error;
pub mod evalmetrics;
pub mod kernels;
pub mod optim;
#[cfg(any(test, feature = "oracles"))]
pub mod oracles;
#[doc(hidden)]
pub mod serde_rows;
pub mod simulator;
pub mod svm;
pub mod vqc;

pub use error::{Error, Result};
