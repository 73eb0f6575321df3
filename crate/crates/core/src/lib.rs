//! Multiple kernel learning for the support vector machine with the exact
//! (0,1)-loss.
//!
//! The classifier is `sign(Σ_ℓ f_ℓ(x) + b)` where each `f_ℓ` lives in the
//! RKHS of a candidate kernel `κ_ℓ` and the kernel weights `d` lie on the
//! probability simplex. Training minimizes
//!
//! ```text
//! ½ Σ_ℓ ‖f_ℓ‖²/d_ℓ + C ‖u₊‖₀   s.t.  u_i + y_i (f(x_i) + b) = 1,  d ≥ 0,  Σ d = 1
//! ```
//!
//! with an ADMM scheme whose `u` step is the closed-form L0/1 proximal
//! operator and whose `d` step solves a cubic. Working sets on the data
//! (`T_k`) and on the kernels (`S_k`) make both the support vectors and the
//! kernel combination sparse.
//!
//! Module map:
//! - [`kernel`]: kernel specs, Gram matrices and their factorizations.
//! - [`prox`]: the L0/1 proximal operator and step loss.
//! - [`numeric`]: real roots of the d-step cubic.
//! - [`admm`]: solver state, the update steps and the training loop.
//! - [`stationarity`]: P-stationarity residuals of a candidate point.
//! - [`model`]: the exported classifier and its metrics.
//! - [`tuning`]: k-fold cross-validated grid search over `(C, ρ)`.
//! - [`data`]: synthetic four-quadrant data and CSV I/O.
//! - [`cli`]: the command-line front end.

pub mod admm;
pub mod cli;
pub mod data;
pub mod error;
pub mod kernel;
pub mod model;
pub mod numeric;
pub mod prox;
pub mod stationarity;
pub mod tuning;
mod textio;

pub use admm::{train, train_with_options, Hyperparams, SolverState, StopReport, TrainOptions, TrainOutcome};
pub use data::Dataset;
pub use error::{Error, Result};
pub use kernel::{GramStack, KernelBank, KernelSpec};
pub use model::{EvalMetrics, TrainedModel};
