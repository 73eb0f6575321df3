use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::Hyperparams;
use crate::data::validate_labels;
use crate::error::{Error, Result};
use crate::textio::{self, join, Lines};

/// All ADMM iterates.
///
/// `vf` is `L × m`; row `ℓ` holds the values of `f_ℓ` at the training
/// points, which determine `f_ℓ` completely when `K_ℓ` is invertible.
/// `theta` is the multiplier of the splitting constraint `d − z = 0`, so it
/// enters the Lagrangian with the opposite sign of the multiplier of `d ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub vf: DMatrix<f64>,
    pub d: DVector<f64>,
    pub b: f64,
    pub u: DVector<f64>,
    pub z: DVector<f64>,
    pub lambda: DVector<f64>,
    pub theta: DVector<f64>,
    pub alpha: f64,
    pub iter: usize,
}

/// Starting point: everything zero except `d = 1/L` and `b = ±1`, with the
/// sign of `b` chosen so that the initial objective is `C·min(m₊, m₋)`
/// (`b = +1` on a tie).
pub fn init_state(labels: &[f64], kernels: usize) -> Result<SolverState> {
    if labels.is_empty() {
        return Err(Error::InvalidArgument("labels must be non-empty".into()));
    }
    if kernels == 0 {
        return Err(Error::InvalidArgument("at least one kernel is required".into()));
    }
    validate_labels(labels)?;
    let m = labels.len();
    let m_pos = labels.iter().filter(|&&y| y > 0.0).count();
    let m_neg = m - m_pos;
    Ok(SolverState {
        vf: DMatrix::zeros(kernels, m),
        d: DVector::from_element(kernels, 1.0 / kernels as f64),
        b: if m_neg <= m_pos { 1.0 } else { -1.0 },
        u: DVector::zeros(m),
        z: DVector::zeros(kernels),
        lambda: DVector::zeros(m),
        theta: DVector::zeros(kernels),
        alpha: 0.0,
        iter: 0,
    })
}

impl SolverState {
    pub fn kernels(&self) -> usize {
        self.vf.nrows()
    }

    pub fn samples(&self) -> usize {
        self.vf.ncols()
    }

    /// Values of `f = Σ_ℓ f_ℓ` at the training points.
    pub fn f_values(&self) -> DVector<f64> {
        self.vf.row_sum().transpose()
    }

    /// Constraint residual `r = u + D_y f + b y − 1`.
    pub fn residual(&self, y: &DVector<f64>) -> DVector<f64> {
        let f = self.f_values();
        DVector::from_fn(self.samples(), |i, _| self.u[i] + y[i] * (f[i] + self.b) - 1.0)
    }

    pub(crate) fn check_shape(&self, kernels: usize, samples: usize) -> Result<()> {
        let ok = self.vf.nrows() == kernels
            && self.vf.ncols() == samples
            && self.d.len() == kernels
            && self.z.len() == kernels
            && self.theta.len() == kernels
            && self.u.len() == samples
            && self.lambda.len() == samples;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "solver state shape does not match {kernels} kernels and {samples} samples"
            )))
        }
    }
}

const STATE_HEADER: &str = "mkl01-state v1";

/// A solver state with the hyperparameters and Gram jitter it was produced with.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFile {
    pub hp: Hyperparams,
    pub jitter: f64,
    pub converged: bool,
    pub state: SolverState,
}

impl StateFile {
    pub fn to_text(&self) -> String {
        let s = &self.state;
        let hp = &self.hp;
        let mut out = String::new();
        let mut w = |line: String| {
            out.push_str(&line);
            out.push('\n');
        };
        w(STATE_HEADER.to_string());
        w(format!("c {}", hp.c));
        w(format!("rho {} {} {}", hp.rho1, hp.rho2, hp.rho3));
        w(format!("tol {}", hp.tol));
        w(format!("max_iter {}", hp.max_iter));
        w(format!("jitter {}", self.jitter));
        w(format!("converged {}", u8::from(self.converged)));
        w(format!("iter {}", s.iter));
        w(format!("kernels {}", s.kernels()));
        w(format!("samples {}", s.samples()));
        w(format!("b {}", s.b));
        w(format!("alpha {}", s.alpha));
        w(format!("d {}", join(s.d.iter())));
        w(format!("z {}", join(s.z.iter())));
        w(format!("theta {}", join(s.theta.iter())));
        w(format!("u {}", join(s.u.iter())));
        w(format!("lambda {}", join(s.lambda.iter())));
        for row in s.vf.row_iter() {
            w(format!("vf {}", join(row.iter())));
        }
        out
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = Lines::new(text, origin);
        if lines.next_line()? != STATE_HEADER {
            return Err(lines.err(format!("expected header `{STATE_HEADER}`")));
        }
        let c = lines.keyed_f64("c")?;
        let rho = lines.keyed_vec("rho", 3)?;
        let tol = lines.keyed_f64("tol")?;
        let max_iter = lines.keyed_usize("max_iter")?;
        let hp = Hyperparams {
            c,
            rho1: rho[0],
            rho2: rho[1],
            rho3: rho[2],
            tol,
            max_iter,
        };
        hp.validate().map_err(|e| lines.err(e.to_string()))?;
        let jitter = lines.keyed_f64("jitter")?;
        let converged = match lines.keyed_usize("converged")? {
            0 => false,
            1 => true,
            _ => return Err(lines.err("converged must be 0 or 1")),
        };
        let iter = lines.keyed_usize("iter")?;
        let kernels = lines.keyed_usize("kernels")?;
        let samples = lines.keyed_usize("samples")?;
        if kernels == 0 || samples == 0 {
            return Err(lines.err("kernels and samples must be positive"));
        }
        let b = lines.keyed_f64("b")?;
        let alpha = lines.keyed_f64("alpha")?;
        let d = lines.keyed_vec("d", kernels)?;
        let z = lines.keyed_vec("z", kernels)?;
        let theta = lines.keyed_vec("theta", kernels)?;
        let u = lines.keyed_vec("u", samples)?;
        let lambda = lines.keyed_vec("lambda", samples)?;
        let mut vf = DMatrix::zeros(kernels, samples);
        for ell in 0..kernels {
            let row = lines.keyed_vec("vf", samples)?;
            for (i, v) in row.into_iter().enumerate() {
                vf[(ell, i)] = v;
            }
        }
        Ok(StateFile {
            hp,
            jitter,
            converged,
            state: SolverState {
                vf,
                d: DVector::from_vec(d),
                b,
                u: DVector::from_vec(u),
                z: DVector::from_vec(z),
                lambda: DVector::from_vec(lambda),
                theta: DVector::from_vec(theta),
                alpha,
                iter,
            },
        })
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        textio::write_atomic(path, &self.to_text())
    }
}
