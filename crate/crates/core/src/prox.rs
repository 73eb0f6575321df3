//! The L0/1 proximal operator `prox_{γC‖(·)₊‖₀}` and the step loss `‖v₊‖₀`.

use crate::error::{Error, Result};

/// Step size `γ` and loss weight `C` of one proximal evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxParams {
    gamma: f64,
    c: f64,
    threshold: f64,
}

impl ProxParams {
    pub fn new(gamma: f64, c: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) || !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "prox parameters must be positive, got gamma={gamma}, C={c}"
            )));
        }
        Ok(ProxParams {
            gamma,
            c,
            threshold: (2.0 * gamma * c).sqrt(),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `sqrt(2γC)`, the right end of the interval mapped to zero.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// Number of strictly positive components.
pub fn step_loss(v: &[f64]) -> usize {
    v.iter().filter(|&&x| x > 0.0).count()
}

/// Hard-thresholds the positive half-line: `z ∈ (0, sqrt(2γC)]` maps to 0,
/// everything else is left unchanged.
#[inline]
pub fn prox_scalar(z: f64, p: &ProxParams) -> f64 {
    if z > 0.0 && z <= p.threshold {
        0.0
    } else {
        z
    }
}

pub fn prox_vector(z: &[f64], p: &ProxParams) -> Vec<f64> {
    z.iter().map(|&zi| prox_scalar(zi, p)).collect()
}
