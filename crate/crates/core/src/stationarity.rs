//! Residuals of the P-stationarity (KKT-like) conditions at a candidate point.
//!
//! A point `(f, d, b, u)` is P-stationary at step `γ` when there are
//! multipliers `(θ, α, λ)` with
//!
//! ```text
//! d ≥ 0,  1ᵀd = 1,  u + D_y(f + b·1) = 1,  θ ≥ 0,  θ_ℓ d_ℓ = 0,
//! f_ℓ / d_ℓ = −Σ_i λ_i y_i κ_ℓ(·, x_i),
//! −‖f_ℓ‖² / (2 d_ℓ²) + α − θ_ℓ = 0,
//! yᵀλ = 0,
//! prox_{γC‖(·)₊‖₀}(u − γλ) = u.
//! ```
//!
//! The multiplier of `d ≥ 0` here is the negative of the ADMM multiplier
//! stored in [`SolverState::theta`], which multiplies `d − z`.
//! Every P-stationary point is a local minimizer; nothing stronger is
//! certified.

use std::fmt;

use nalgebra::DVector;

use crate::admm::{Hyperparams, SolverState};
use crate::error::{Error, Result};
use crate::kernel::GramStack;
use crate::prox::{prox_vector, ProxParams};

/// Weights at or below this count as zero for the `f` and `d` conditions.
pub const ZERO_WEIGHT: f64 = 1e-9;

/// One nonnegative residual per condition group, all in max-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub d_nonnegativity: f64,
    pub simplex: f64,
    pub primal_u: f64,
    pub theta_nonnegativity: f64,
    pub complementary_slackness: f64,
    pub f_stationarity: f64,
    pub d_stationarity: f64,
    pub y_lambda: f64,
    pub prox_fixed_point: f64,
    pub max_residual: f64,
    pub gamma: f64,
}

/// What a report allows one to conclude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    /// All residuals are within the threshold: P-stationary, hence a local minimizer.
    LocalMinimizer,
    NotCertified,
}

impl StationarityReport {
    pub fn entries(&self) -> [(&'static str, f64); 9] {
        [
            ("d_nonnegativity", self.d_nonnegativity),
            ("simplex", self.simplex),
            ("primal_u", self.primal_u),
            ("theta_nonnegativity", self.theta_nonnegativity),
            ("complementary_slackness", self.complementary_slackness),
            ("f_stationarity", self.f_stationarity),
            ("d_stationarity", self.d_stationarity),
            ("y_lambda", self.y_lambda),
            ("prox_fixed_point", self.prox_fixed_point),
        ]
    }

    pub fn certify(&self, threshold: f64) -> Certificate {
        if self.max_residual <= threshold {
            Certificate::LocalMinimizer
        } else {
            Certificate::NotCertified
        }
    }
}

impl fmt::Display for StationarityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, v) in self.entries() {
            writeln!(f, "{name} {v:e}")?;
        }
        writeln!(f, "gamma {}", self.gamma)?;
        write!(f, "max_residual {:e}", self.max_residual)
    }
}

/// Evaluates every condition at the ADMM iterate `state` with prox step `gamma`
/// (pass `1/ρ1` for ADMM limit points).
pub fn check_pstationary(
    state: &SolverState,
    gram: &GramStack,
    labels: &[f64],
    hp: &Hyperparams,
    gamma: f64,
) -> Result<StationarityReport> {
    let prox = ProxParams::new(gamma, hp.c)?;
    state.check_shape(gram.len(), gram.m())?;
    if labels.len() != gram.m() {
        return Err(Error::DimensionMismatch {
            expected: gram.m(),
            got: labels.len(),
        });
    }
    let y = DVector::from_column_slice(labels);
    let kernels = state.kernels();

    let d_nonnegativity = state.d.iter().map(|&d| (-d).max(0.0)).fold(0.0, f64::max);
    let simplex = (state.d.sum() - 1.0).abs();
    let primal_u = state.residual(&y).amax();

    // multiplier of d ≥ 0
    let theta_kkt: Vec<f64> = state.theta.iter().map(|t| -t).collect();
    let theta_nonnegativity = theta_kkt.iter().map(|&t| (-t).max(0.0)).fold(0.0, f64::max);
    let complementary_slackness = theta_kkt
        .iter()
        .zip(state.d.iter())
        .map(|(t, d)| (t * d).abs())
        .fold(0.0, f64::max);

    let y_lambda = y.component_mul(&state.lambda);
    let mut f_stationarity: f64 = 0.0;
    let mut d_stationarity: f64 = 0.0;
    for ell in 0..kernels {
        let d = state.d[ell];
        let row = state.vf.row(ell).transpose();
        if d > ZERO_WEIGHT {
            let fit = &row + gram.matrix(ell) * &y_lambda * d;
            f_stationarity = f_stationarity.max(fit.amax());
            let q = gram.quad_form_inv(ell, &row);
            d_stationarity = d_stationarity.max((-q / (2.0 * d * d) + state.alpha - theta_kkt[ell]).abs());
        } else {
            f_stationarity = f_stationarity.max(row.amax());
        }
    }

    let y_lambda_sum = y.dot(&state.lambda).abs();
    let shifted: Vec<f64> = state
        .u
        .iter()
        .zip(state.lambda.iter())
        .map(|(u, l)| u - gamma * l)
        .collect();
    let prox_fixed_point = prox_vector(&shifted, &prox)
        .iter()
        .zip(state.u.iter())
        .map(|(p, u)| (p - u).abs())
        .fold(0.0, f64::max);

    let mut report = StationarityReport {
        d_nonnegativity,
        simplex,
        primal_u,
        theta_nonnegativity,
        complementary_slackness,
        f_stationarity,
        d_stationarity,
        y_lambda: y_lambda_sum,
        prox_fixed_point,
        max_residual: 0.0,
        gamma,
    };
    report.max_residual = report.entries().iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(report)
}
