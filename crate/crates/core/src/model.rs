//! The exported classifier
//! `x ↦ sign(−Σ_ℓ d_ℓ Σ_{i∈T*} λ_i y_i κ_ℓ(x, x_i) + b)`.

use std::fmt::Write as _;
use std::path::Path;

use crate::admm::{final_working_set, Hyperparams, SolverState};
use crate::data::{validate_labels, Dataset};
use crate::error::{Error, Result};
use crate::kernel::{KernelBank, KernelSpec};
use crate::textio::{self, join, Lines};

/// Kernel weights above this are reported as active.
pub const ACTIVE_WEIGHT_CUTOFF: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub anchors: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    /// Zero outside `support_idx`.
    pub lambda_star: Vec<f64>,
    pub d_star: Vec<f64>,
    pub b_star: f64,
    pub bank: KernelBank,
    /// `T_*`, ascending.
    pub support_idx: Vec<usize>,
}

/// Testing accuracy and number of support vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalMetrics {
    pub tacc: f64,
    pub nsv: usize,
}

impl TrainedModel {
    /// Exports the classifier at `state`, recomputing `T_*` from its `s` vector
    /// and restricting `λ` to it.
    pub fn from_state(dataset: &Dataset, bank: &KernelBank, state: &SolverState, hp: &Hyperparams) -> Self {
        let support_idx = final_working_set(state, &dataset.labels, hp);
        let mut lambda_star = vec![0.0; dataset.len()];
        for &i in &support_idx {
            lambda_star[i] = state.lambda[i];
        }
        TrainedModel {
            anchors: dataset.points.clone(),
            labels: dataset.labels.clone(),
            lambda_star,
            d_star: state.d.iter().copied().collect(),
            b_star: state.b,
            bank: bank.clone(),
            support_idx,
        }
    }

    pub fn dim(&self) -> usize {
        self.anchors.first().map_or(0, Vec::len)
    }

    pub fn nsv(&self) -> usize {
        self.support_idx.len()
    }

    /// `(ℓ, d_ℓ)` for weights above [`ACTIVE_WEIGHT_CUTOFF`].
    pub fn active_kernels(&self) -> Vec<(usize, f64)> {
        self.d_star
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, d)| d > ACTIVE_WEIGHT_CUTOFF)
            .collect()
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut f = 0.0;
        for (spec, &d) in self.bank.specs().iter().zip(&self.d_star) {
            if d == 0.0 {
                continue;
            }
            let sum: f64 = self
                .support_idx
                .iter()
                .map(|&i| self.lambda_star[i] * self.labels[i] * spec.eval_unchecked(x, &self.anchors[i]))
                .sum();
            f -= d * sum;
        }
        Ok(f + self.b_star)
    }

    /// `+1` when the decision value is nonnegative (so `sign(0) = +1`), else `-1`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(sign(self.decision_value(x)?))
    }

    /// `TACC = 1 − Σ_j |sign(f(x_j)) − y_j| / (2 m_test)` and `NSV = |T_*|`.
    pub fn evaluate(&self, points: &[Vec<f64>], labels: &[f64]) -> Result<EvalMetrics> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("test set is empty".into()));
        }
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: labels.len(),
            });
        }
        validate_labels(labels)?;
        let mut err = 0.0;
        for (x, &y) in points.iter().zip(labels) {
            err += (self.predict(x)? - y).abs();
        }
        Ok(EvalMetrics {
            tacc: 1.0 - err / (2.0 * points.len() as f64),
            nsv: self.nsv(),
        })
    }

    /// Decision values on a `resolution × resolution` grid over a 2-D box.
    pub fn boundary_grid(&self, x_range: (f64, f64), y_range: (f64, f64), resolution: usize) -> Result<BoundaryGrid> {
        if self.dim() != 2 {
            return Err(Error::InvalidArgument(format!(
                "boundary export requires n=2, model has n={}",
                self.dim()
            )));
        }
        if resolution < 2 {
            return Err(Error::InvalidArgument("resolution must be at least 2".into()));
        }
        let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
            (0..resolution)
                .map(|k| lo + (hi - lo) * k as f64 / (resolution - 1) as f64)
                .collect()
        };
        let xs = axis(x_range);
        let ys = axis(y_range);
        let mut values = Vec::with_capacity(resolution * resolution);
        for &x1 in &xs {
            for &x2 in &ys {
                values.push(self.decision_value(&[x1, x2])?);
            }
        }
        Ok(BoundaryGrid { xs, ys, values })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MODEL_HEADER}").unwrap();
        writeln!(out, "kernels {}", self.bank.len()).unwrap();
        for spec in self.bank.specs() {
            writeln!(out, "{spec}").unwrap();
        }
        writeln!(out, "dims {} {}", self.anchors.len(), self.dim()).unwrap();
        writeln!(out, "b {}", self.b_star).unwrap();
        writeln!(out, "d {}", join(&self.d_star)).unwrap();
        writeln!(out, "support {} {}", self.support_idx.len(), join(&self.support_idx)).unwrap();
        writeln!(out, "anchors").unwrap();
        for ((x, y), l) in self.anchors.iter().zip(&self.labels).zip(&self.lambda_star) {
            writeln!(out, "{} {} {}", join(x), y, l).unwrap();
        }
        out
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = Lines::new(text, origin);
        if lines.next_line()? != MODEL_HEADER {
            return Err(lines.err(format!("expected header `{MODEL_HEADER}`")));
        }
        let l = lines.keyed_usize("kernels")?;
        let mut specs = Vec::with_capacity(l);
        for _ in 0..l {
            let line = lines.next_line()?;
            specs.push(line.parse::<KernelSpec>().map_err(|e| lines.err(e.to_string()))?);
        }
        let bank = KernelBank::new(specs).map_err(|e| lines.err(e.to_string()))?;
        let dims = lines.keyed("dims")?;
        if dims.len() != 2 {
            return Err(lines.err("`dims` expects m and n"));
        }
        let m = lines.parse_usize(dims[0])?;
        let n = lines.parse_usize(dims[1])?;
        if m == 0 || n == 0 {
            return Err(lines.err("m and n must be positive"));
        }
        let b_star = lines.keyed_f64("b")?;
        let d_star = lines.keyed_vec("d", l)?;
        let support = lines.keyed("support")?;
        let count = support
            .first()
            .ok_or_else(|| lines.err("`support` needs a count"))
            .and_then(|t| lines.parse_usize(t))?;
        if support.len() != count + 1 {
            return Err(lines.err(format!("`support` lists {} indices, expected {count}", support.len() - 1)));
        }
        let support_idx = support[1..]
            .iter()
            .map(|t| lines.parse_usize(t))
            .collect::<Result<Vec<_>>>()?;
        if support_idx.iter().any(|&i| i >= m) {
            return Err(lines.err("support index out of range"));
        }
        lines.keyed("anchors")?;
        let mut anchors = Vec::with_capacity(m);
        let mut labels = Vec::with_capacity(m);
        let mut lambda_star = Vec::with_capacity(m);
        for _ in 0..m {
            let line = lines.next_line()?;
            let vals = line
                .split_whitespace()
                .map(|t| lines.parse_f64(t))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != n + 2 {
                return Err(lines.err(format!("anchor row needs {} values", n + 2)));
            }
            anchors.push(vals[..n].to_vec());
            labels.push(vals[n]);
            lambda_star.push(vals[n + 1]);
        }
        validate_labels(&labels).map_err(|e| lines.err(e.to_string()))?;
        Ok(TrainedModel {
            anchors,
            labels,
            lambda_star,
            d_star,
            b_star,
            bank,
            support_idx,
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

const MODEL_HEADER: &str = "mkl01-model v1";

fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Decision values on a regular 2-D grid, `values[i·len(ys) + j]` at `(xs[i], ys[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

impl BoundaryGrid {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x1,x2,value\n");
        for (i, &x1) in self.xs.iter().enumerate() {
            for (j, &x2) in self.ys.iter().enumerate() {
                writeln!(out, "{x1},{x2},{}", self.values[i * self.ys.len() + j]).unwrap();
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        textio::write_atomic(path, &self.to_csv())
    }
}
