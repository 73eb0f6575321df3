use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 1000;

/// Loss weight, penalty parameters and stopping rule of one training run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    /// Weight `C` of the (0,1)-loss.
    pub c: f64,
    /// Penalty on the margin constraint `u + D_y f + b y = 1`.
    pub rho1: f64,
    /// Penalty on the splitting constraint `d = z`.
    pub rho2: f64,
    /// Penalty on the simplex constraint `1ᵀd = 1`.
    pub rho3: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Hyperparams {
    pub fn new(c: f64, rho1: f64, rho2: f64, rho3: f64) -> Result<Self> {
        let hp = Hyperparams {
            c,
            rho1,
            rho2,
            rho3,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        };
        hp.validate()?;
        Ok(hp)
    }

    /// `ρ1 = ρ2 = ρ3 = rho`.
    pub fn with_rho(c: f64, rho: f64) -> Result<Self> {
        Self::new(c, rho, rho, rho)
    }

    pub fn tol(mut self, tol: f64) -> Result<Self> {
        self.tol = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn max_iter(mut self, max_iter: usize) -> Result<Self> {
        self.max_iter = max_iter;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("C", self.c),
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("rho3", self.rho3),
            ("tol", self.tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Prox step `γ = 1/ρ1` at which limit points are P-stationary.
    pub fn gamma(&self) -> f64 {
        1.0 / self.rho1
    }

    /// Right end `sqrt(2C/ρ1)` of the interval defining the working set `T_k`.
    pub fn working_set_threshold(&self) -> f64 {
        (2.0 * self.c / self.rho1).sqrt()
    }
}
