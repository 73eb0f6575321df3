//! ADMM with working sets for the multiple-kernel (0,1)-loss SVM.
//!
//! One sweep updates, in order: the working set `T_k`, `u`, `f`, `b`, `z`
//! (with the working set `S_k`), `d`, `θ`, `α` and `λ`. The loop stops when
//! all eight successive-iterate distances drop below `tol` or after
//! `max_iter` sweeps.

mod params;
mod state;
pub mod steps;

use nalgebra::DVector;

pub use params::{Hyperparams, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use state::{init_state, SolverState, StateFile};
pub use steps::{check_stop, Coupling, StopReport};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{build_gram_stack, GramStack, KernelBank};
use crate::model::TrainedModel;

/// Index sets of one sweep.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WorkingSets {
    /// Samples whose `s_i` fell in `(0, sqrt(2C/ρ1)]`.
    pub t_k: Vec<usize>,
    /// Kernels with `d_ℓ + θ_ℓ/ρ2 > 0`.
    pub s_k: Vec<usize>,
}

/// Accuracy of the subproblem solves in one sweep.
#[derive(Debug, Clone, Default)]
pub struct SweepDiagnostics {
    /// Relative residual of each `f_ℓ` linear system that was solved.
    pub f_residuals: Vec<(usize, f64)>,
    /// Normalized value of the `b` stationarity equation.
    pub b_residual: f64,
    /// `(kernel, |p(root)|, 1 + max|coeff|)` for every accepted positive root.
    pub cubic_residuals: Vec<(usize, f64, f64)>,
}

/// What one call of [`Solver::step`] did.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub working: WorkingSets,
    pub stop: StopReport,
    pub diagnostics: Option<SweepDiagnostics>,
}

/// Drives the ADMM iteration over a fixed Gram stack.
pub struct Solver<'a> {
    gram: &'a GramStack,
    y: DVector<f64>,
    hp: Hyperparams,
    coupling: Coupling,
    diagnostics: bool,
    state: SolverState,
}

impl<'a> Solver<'a> {
    pub fn new(gram: &'a GramStack, labels: &[f64], hp: Hyperparams) -> Result<Self> {
        hp.validate()?;
        if labels.len() != gram.m() {
            return Err(Error::DimensionMismatch {
                expected: gram.m(),
                got: labels.len(),
            });
        }
        let state = init_state(labels, gram.len())?;
        Ok(Solver {
            gram,
            y: DVector::from_column_slice(labels),
            hp,
            coupling: Coupling::default(),
            diagnostics: false,
            state,
        })
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    /// Record subproblem residuals in every [`Sweep`].
    pub fn with_diagnostics(mut self, on: bool) -> Self {
        self.diagnostics = on;
        self
    }

    /// Replaces the current iterate (for warm starts and tests).
    pub fn with_state(mut self, state: SolverState) -> Result<Self> {
        state.check_shape(self.gram.len(), self.gram.m())?;
        self.state = state;
        Ok(self)
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn into_state(self) -> SolverState {
        self.state
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    /// One full sweep of the updates.
    pub fn step(&mut self) -> Result<Sweep> {
        let hp = &self.hp;
        let prev = &self.state;
        let y = &self.y;

        let s = steps::compute_s(prev, y, hp);
        let (u, t_k) = steps::update_u(&s, hp);
        let fup = steps::update_f(prev, self.gram, y, &u, hp, self.coupling);
        let b = steps::update_b(&fup.vf, &u, &prev.lambda, y, hp);
        let (z, s_k) = steps::update_z(&prev.d, &prev.theta, hp);
        let (d, roots) = steps::update_d(prev, &fup.vf, &z, &s_k, self.gram, hp)?;
        let theta = steps::update_theta(&prev.theta, &d, &z, &s_k, hp);
        let alpha = steps::update_alpha(prev.alpha, &d, hp);

        let diagnostics = self.diagnostics.then(|| SweepDiagnostics {
            f_residuals: fup
                .systems
                .iter()
                .map(|sys| {
                    let v = fup.vf.row(sys.kernel).transpose();
                    (sys.kernel, steps::f_system_residual(self.gram, sys, &v, hp.rho1))
                })
                .collect(),
            b_residual: steps::b_equation_residual(&fup.vf, &u, &prev.lambda, b, y, hp),
            cubic_residuals: roots
                .iter()
                .filter(|r| r.root > 0.0)
                .map(|r| (r.kernel, r.coeffs.eval(r.root).abs(), 1.0 + r.coeffs.max_abs_coeff()))
                .collect(),
        });

        let mut next = SolverState {
            vf: fup.vf,
            d,
            b,
            u,
            z,
            lambda: DVector::zeros(0),
            theta,
            alpha,
            iter: prev.iter + 1,
        };
        let r = next.residual(y);
        next.lambda = steps::update_lambda(&prev.lambda, &r, &t_k, hp);

        let stop = check_stop(prev, &next, hp);
        self.state = next;
        Ok(Sweep {
            working: WorkingSets { t_k, s_k },
            stop,
            diagnostics,
        })
    }

    /// Sweeps until convergence or `max_iter`. Hitting the iteration limit is
    /// reported through `converged = false`, not as an error.
    pub fn run(&mut self) -> Result<StopReport> {
        let mut last = StopReport {
            betas: [f64::INFINITY; 8],
            converged: false,
            iterations: self.state.iter,
        };
        while self.state.iter < self.hp.max_iter {
            last = self.step()?.stop;
            if last.converged {
                break;
            }
        }
        Ok(last)
    }
}

/// Options that do not change the optimization problem itself.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainOptions {
    /// Added to every Gram diagonal; 0 keeps the matrices exact.
    pub jitter: f64,
    /// Sequential block updates unless Jacobi is requested.
    pub coupling: Coupling,
}

/// Everything a training run produces.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub report: StopReport,
    pub state: SolverState,
    pub gram: GramStack,
}

pub fn train(dataset: &Dataset, bank: &KernelBank, hp: &Hyperparams) -> Result<TrainOutcome> {
    train_with_options(dataset, bank, hp, &TrainOptions::default())
}

pub fn train_with_options(
    dataset: &Dataset,
    bank: &KernelBank,
    hp: &Hyperparams,
    opts: &TrainOptions,
) -> Result<TrainOutcome> {
    let gram = build_gram_stack(bank, &dataset.points, opts.jitter)?;
    let (report, state) = train_on_gram(&gram, &dataset.labels, hp, opts.coupling)?;
    let model = TrainedModel::from_state(dataset, bank, &state, hp);
    Ok(TrainOutcome {
        model,
        report,
        state,
        gram,
    })
}

/// Runs the solver on a prebuilt Gram stack.
pub fn train_on_gram(
    gram: &GramStack,
    labels: &[f64],
    hp: &Hyperparams,
    coupling: Coupling,
) -> Result<(StopReport, SolverState)> {
    let mut solver = Solver::new(gram, labels, *hp)?.with_coupling(coupling);
    let report = solver.run()?;
    Ok((report, solver.into_state()))
}

/// `T_*`: samples whose final `s_i` lies in `(0, sqrt(2C/ρ1)]`.
pub fn final_working_set(state: &SolverState, labels: &[f64], hp: &Hyperparams) -> Vec<usize> {
    let y = DVector::from_column_slice(labels);
    let s = steps::compute_s(state, &y, hp);
    steps::update_u(&s, hp).1
}
