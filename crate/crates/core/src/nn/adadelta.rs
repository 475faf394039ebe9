//! Adadelta with a global learning-rate multiplier.
//!
//! Per element, with gradient `g`:
//!
//! ```text
//! Eg2  <- rho * Eg2  + (1 - rho) * g^2
//! dx    = -lr * sqrt(Edx2 + eps) / sqrt(Eg2 + eps) * g
//! Edx2 <- rho * Edx2 + (1 - rho) * dx^2
//! x    <- x + dx
//! ```

use serde::{Deserialize, Serialize};

use super::model::{ModelConfig, Parameters, PARAM_NAMES};
use super::tensor::Real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdadeltaConfig {
    pub lr: f64,
    pub rho: f64,
    pub epsilon: f64,
}

impl Default for AdadeltaConfig {
    fn default() -> Self {
        Self {
            lr: 1.0,
            rho: 0.95,
            epsilon: 1e-6,
        }
    }
}

/// Updates `theta` in place and returns nothing; all slices must be the
/// same length.
pub fn adadelta_update(
    theta: &mut [Real],
    grad: &[Real],
    avg_sq_grad: &mut [Real],
    avg_sq_update: &mut [Real],
    cfg: &AdadeltaConfig,
) {
    let rho = cfg.rho as Real;
    let eps = cfg.epsilon as Real;
    let lr = cfg.lr as Real;
    for (((x, &g), eg2), edx2) in theta
        .iter_mut()
        .zip(grad)
        .zip(avg_sq_grad.iter_mut())
        .zip(avg_sq_update.iter_mut())
    {
        *eg2 = rho * *eg2 + (1.0 - rho) * g * g;
        let dx = -lr * ((*edx2 + eps).sqrt() / (*eg2 + eps).sqrt()) * g;
        *edx2 = rho * *edx2 + (1.0 - rho) * dx * dx;
        *x += dx;
    }
}

/// Accumulators for every model tensor, zero-initialised.
#[derive(Debug, Clone, PartialEq)]
pub struct Adadelta {
    pub config: AdadeltaConfig,
    pub avg_sq_grad: Parameters,
    pub avg_sq_update: Parameters,
}

impl Adadelta {
    pub fn new(config: AdadeltaConfig, model: &ModelConfig) -> Self {
        Self {
            config,
            avg_sq_grad: Parameters::zeros(model),
            avg_sq_update: Parameters::zeros(model),
        }
    }

    /// One update. Rejects the step, leaving everything untouched, if any
    /// gradient entry is non-finite.
    pub fn step(&mut self, params: &mut Parameters, grads: &Parameters) -> Result<()> {
        for (name, g) in PARAM_NAMES.iter().zip(grads.tensors()) {
            if !g.is_finite() {
                return Err(Error::NonFiniteGradient(name));
            }
        }
        let cfg = self.config;
        for (((p, g), eg2), edx2) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.avg_sq_grad.tensors_mut())
            .zip(self.avg_sq_update.tensors_mut())
        {
            if p.shape() != g.shape() || p.shape() != eg2.shape() {
                return Err(Error::ShapeMismatch {
                    expected: p.shape().to_vec(),
                    got: g.shape().to_vec(),
                });
            }
            adadelta_update(p.data_mut(), g.data(), eg2.data_mut(), edx2.data_mut(), &cfg);
        }
        Ok(())
    }
}
