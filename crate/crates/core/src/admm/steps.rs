//! The individual ADMM updates. Each function reads the iterates it needs and
//! returns the new value; composing them in order is [`super::Solver::step`].

use nalgebra::{DMatrix, DVector};

use super::{Hyperparams, SolverState};
use crate::error::{Error, Result};
use crate::kernel::GramStack;
use crate::numeric::{real_roots_cubic, select_positive_root, CubicCoeffs};

/// How the `f_ℓ` updates see the other kernels' blocks within one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    /// Every `f_ℓ` uses the previous iterate of all other blocks. With many
    /// kernels the blocks jointly overshoot and the weights can collapse to 0.
    Jacobi,
    /// `f_ℓ` uses the already-updated blocks `t < ℓ`.
    #[default]
    GaussSeidel,
}

/// `s = 1 − D_y f − b y − λ/ρ1`
pub fn compute_s(state: &SolverState, y: &DVector<f64>, hp: &Hyperparams) -> DVector<f64> {
    let f = state.f_values();
    DVector::from_fn(y.len(), |i, _| {
        1.0 - y[i] * f[i] - state.b * y[i] - state.lambda[i] / hp.rho1
    })
}

/// Working set `T_k = {i : s_i ∈ (0, sqrt(2C/ρ1)]}`; the new `u` is zero on
/// `T_k` and equal to `s` elsewhere.
pub fn update_u(s: &DVector<f64>, hp: &Hyperparams) -> (DVector<f64>, Vec<usize>) {
    let threshold = hp.working_set_threshold();
    let mut u = s.clone();
    let mut t_k = Vec::new();
    for (i, &si) in s.iter().enumerate() {
        if si > 0.0 && si <= threshold {
            u[i] = 0.0;
            t_k.push(i);
        }
    }
    (u, t_k)
}

/// Linear system `(shift·I + ρ1 K_ℓ) v = rhs` solved for one block.
#[derive(Debug, Clone)]
pub struct FSystem {
    pub kernel: usize,
    pub shift: f64,
    pub rhs: DVector<f64>,
}

/// Result of the `f` step.
#[derive(Debug, Clone)]
pub struct FUpdate {
    pub vf: DMatrix<f64>,
    /// One entry per block with `d_ℓ > 0`.
    pub systems: Vec<FSystem>,
}

/// Blocks with `d_ℓ > 0` solve
/// `(I/d_ℓ + ρ1 K_ℓ) v = −ρ1 K_ℓ D_y (u⁺ + D_y Σ_{t≠ℓ} f_t + b y − 1 + λ/ρ1)`;
/// blocks with `d_ℓ = 0` are set to zero.
pub fn update_f(
    state: &SolverState,
    gram: &GramStack,
    y: &DVector<f64>,
    u_new: &DVector<f64>,
    hp: &Hyperparams,
    coupling: Coupling,
) -> FUpdate {
    let kernels = state.kernels();
    let m = state.samples();
    let mut vf = DMatrix::zeros(kernels, m);
    let mut systems = Vec::new();
    // Σ_t f_t over the rows the current block should see
    let mut total = state.f_values();

    // constant part u⁺ + b y − 1 + λ/ρ1
    let base = DVector::from_fn(m, |i, _| {
        u_new[i] + state.b * y[i] - 1.0 + state.lambda[i] / hp.rho1
    });

    for ell in 0..kernels {
        let d = state.d[ell];
        if d > 0.0 {
            let old_row = state.vf.row(ell);
            // y_i (base_i + y_i Σ_{t≠ℓ} f_t(x_i))
            let inner = DVector::from_fn(m, |i, _| y[i] * base[i] + (total[i] - old_row[i]));
            let rhs = (gram.matrix(ell) * inner) * (-hp.rho1);
            let shift = 1.0 / d;
            let v = gram.solve_shifted(ell, shift, hp.rho1, &rhs);
            vf.set_row(ell, &v.transpose());
            systems.push(FSystem { kernel: ell, shift, rhs });
        }
        if coupling == Coupling::GaussSeidel {
            for i in 0..m {
                total[i] += vf[(ell, i)] - state.vf[(ell, i)];
            }
        }
    }
    FUpdate { vf, systems }
}

/// `‖(shift·I + ρ1 K_ℓ) v − rhs‖ / max(‖rhs‖, 1e-300)`
pub fn f_system_residual(gram: &GramStack, system: &FSystem, v: &DVector<f64>, rho1: f64) -> f64 {
    let lhs = gram.matrix(system.kernel) * v * rho1 + v * system.shift;
    (lhs - &system.rhs).norm() / system.rhs.norm().max(1e-300)
}

/// `b = [yᵀ(1 − u − λ/ρ1) − 1ᵀ f] / m`, with `u` and `f` already updated and
/// `λ` from the previous iterate.
pub fn update_b(
    vf: &DMatrix<f64>,
    u_new: &DVector<f64>,
    lambda: &DVector<f64>,
    y: &DVector<f64>,
    hp: &Hyperparams,
) -> f64 {
    let m = y.len() as f64;
    let f_sum: f64 = vf.iter().sum();
    let weighted: f64 = (0..y.len())
        .map(|i| y[i] * (1.0 - u_new[i] - lambda[i] / hp.rho1))
        .sum();
    (weighted - f_sum) / m
}

/// Value of the `b` stationarity equation `Σλ_i y_i + ρ1 Σ y_i r_i` divided by
/// the magnitude of its terms.
pub fn b_equation_residual(
    vf: &DMatrix<f64>,
    u_new: &DVector<f64>,
    lambda: &DVector<f64>,
    b: f64,
    y: &DVector<f64>,
    hp: &Hyperparams,
) -> f64 {
    let f = vf.row_sum();
    let mut value = 0.0;
    let mut scale = 0.0;
    for i in 0..y.len() {
        let r = u_new[i] + y[i] * (f[i] + b) - 1.0;
        value += lambda[i] * y[i] + hp.rho1 * y[i] * r;
        scale += lambda[i].abs() + hp.rho1 * (u_new[i].abs() + f[i].abs() + b.abs() + 1.0);
    }
    value.abs() / scale.max(1.0)
}

/// Working set `S_k = {ℓ : d_ℓ + θ_ℓ/ρ2 > 0}` and `z = (d + θ/ρ2)₊`.
pub fn update_z(d: &DVector<f64>, theta: &DVector<f64>, hp: &Hyperparams) -> (DVector<f64>, Vec<usize>) {
    let mut z = DVector::zeros(d.len());
    let mut s_k = Vec::new();
    for ell in 0..d.len() {
        let v = d[ell] + theta[ell] / hp.rho2;
        if v > 0.0 {
            z[ell] = v;
            s_k.push(ell);
        }
    }
    (z, s_k)
}

/// Cubic solved for one kernel weight and the root taken.
#[derive(Debug, Clone, Copy)]
pub struct DRoot {
    pub kernel: usize,
    pub coeffs: CubicCoeffs,
    pub root: f64,
}

/// Tolerance for the closed-form cubic solver.
const CUBIC_TOL: f64 = 1e-12;

/// For `ℓ ∈ S_k` the new weight is the positive root of
/// `(ρ2+ρ3) d³ + [θ_ℓ + α − ρ2 z_ℓ + ρ3(Σ_{t≠ℓ} d_t − 1)] d² − q_ℓ/2 = 0`
/// with `q_ℓ = v_ℓᵀ K_ℓ⁻¹ v_ℓ`, or 0 if it has none; outside `S_k` it is 0.
/// `theta`, `alpha` and the other weights are the previous iterate.
pub fn update_d(
    state: &SolverState,
    vf_new: &DMatrix<f64>,
    z_new: &DVector<f64>,
    s_k: &[usize],
    gram: &GramStack,
    hp: &Hyperparams,
) -> Result<(DVector<f64>, Vec<DRoot>)> {
    let kernels = state.kernels();
    let d_sum = state.d.sum();
    let mut d = DVector::zeros(kernels);
    let mut roots = Vec::with_capacity(s_k.len());
    for &ell in s_k {
        let row = vf_new.row(ell).transpose();
        let q = gram.quad_form_inv(ell, &row);
        let others = d_sum - state.d[ell];
        let coeffs = CubicCoeffs::new(
            hp.rho2 + hp.rho3,
            state.theta[ell] + state.alpha - hp.rho2 * z_new[ell] + hp.rho3 * (others - 1.0),
            0.0,
            -q / 2.0,
        );
        let candidates = real_roots_cubic(&coeffs, CUBIC_TOL)
            .map_err(|e| Error::InvalidArgument(format!("d-update for kernel {ell}: {e}")))?;
        let root = select_positive_root(&candidates).unwrap_or(0.0);
        d[ell] = root;
        roots.push(DRoot { kernel: ell, coeffs, root });
    }
    Ok((d, roots))
}

/// `θ_ℓ += ρ2 (d_ℓ − z_ℓ)` on `S_k`; unchanged elsewhere.
pub fn update_theta(
    theta: &DVector<f64>,
    d_new: &DVector<f64>,
    z_new: &DVector<f64>,
    s_k: &[usize],
    hp: &Hyperparams,
) -> DVector<f64> {
    let mut out = theta.clone();
    for &ell in s_k {
        out[ell] += hp.rho2 * (d_new[ell] - z_new[ell]);
    }
    out
}

/// `α += ρ3 (1ᵀd − 1)`
pub fn update_alpha(alpha: f64, d_new: &DVector<f64>, hp: &Hyperparams) -> f64 {
    alpha + hp.rho3 * (d_new.sum() - 1.0)
}

/// `λ_i += ρ1 r_i` on `T_k`; zero elsewhere.
pub fn update_lambda(
    lambda: &DVector<f64>,
    residual: &DVector<f64>,
    t_k: &[usize],
    hp: &Hyperparams,
) -> DVector<f64> {
    let mut out = DVector::zeros(lambda.len());
    for &i in t_k {
        out[i] = lambda[i] + hp.rho1 * residual[i];
    }
    out
}

/// Successive-iterate distances and the stopping decision.
#[derive(Debug, Clone, PartialEq)]
pub struct StopReport {
    /// `‖Δu‖, ‖Δf‖_F, |Δb|, ‖Δz‖, ‖Δd‖, ‖Δθ‖, |Δα|, ‖Δλ‖`
    pub betas: [f64; 8],
    pub converged: bool,
    pub iterations: usize,
}

impl StopReport {
    pub fn max_beta(&self) -> f64 {
        self.betas.iter().copied().fold(0.0, f64::max)
    }
}

pub fn check_stop(prev: &SolverState, cur: &SolverState, hp: &Hyperparams) -> StopReport {
    let betas = [
        (&cur.u - &prev.u).norm(),
        (&cur.vf - &prev.vf).norm(),
        (cur.b - prev.b).abs(),
        (&cur.z - &prev.z).norm(),
        (&cur.d - &prev.d).norm(),
        (&cur.theta - &prev.theta).norm(),
        (cur.alpha - prev.alpha).abs(),
        (&cur.lambda - &prev.lambda).norm(),
    ];
    let max = betas.iter().copied().fold(0.0, f64::max);
    StopReport {
        betas,
        converged: max < hp.tol,
        iterations: cur.iter,
    }
}
