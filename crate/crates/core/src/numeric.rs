//! Real roots of the cubic arising in the kernel-weight update.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Positive roots at or below this value are treated as zero.
pub const POSITIVE_ROOT_CUTOFF: f64 = 1e-12;

/// `a3·x³ + a2·x² + a1·x + a0`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoeffs {
    pub a3: f64,
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
}

impl CubicCoeffs {
    pub fn new(a3: f64, a2: f64, a1: f64, a0: f64) -> Self {
        CubicCoeffs { a3, a2, a1, a0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        ((self.a3 * x + self.a2) * x + self.a1) * x + self.a0
    }

    fn derivative(&self, x: f64) -> f64 {
        (3.0 * self.a3 * x + 2.0 * self.a2) * x + self.a1
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.a3.abs().max(self.a2.abs()).max(self.a1.abs()).max(self.a0.abs())
    }
}

/// All real roots, ascending, deduplicated.
///
/// Closed form (trigonometric when three roots are real, Cardano otherwise),
/// followed by a Newton step on each root that is kept only when it lowers
/// the residual.
pub fn real_roots_cubic(c: &CubicCoeffs, tol: f64) -> Result<Vec<f64>> {
    if !(c.a3.abs() > tol) || !c.a3.is_finite() {
        return Err(Error::DegenerateCubic(c.a3));
    }
    let a = c.a2 / c.a3;
    let b = c.a1 / c.a3;
    let d = c.a0 / c.a3;

    let mut roots = if d == 0.0 {
        // x (x² + a x + b)
        let mut r = quadratic_roots(a, b);
        r.push(0.0);
        r
    } else {
        monic_cubic_roots(a, b, d)
    };

    for r in roots.iter_mut() {
        *r = polish(c, *r);
    }
    roots.sort_by(|x, y| x.partial_cmp(y).expect("roots are finite"));
    let scale = 1.0 + c.max_abs_coeff() / c.a3.abs();
    roots.dedup_by(|x, y| (*x - *y).abs() <= tol * scale.max(y.abs()));
    Ok(roots)
}

/// Real roots of `x² + a x + b`.
fn quadratic_roots(a: f64, b: f64) -> Vec<f64> {
    let disc = a * a - 4.0 * b;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // avoid cancellation: q = -(a + sign(a)·sqrt(disc))/2
    let q = -0.5 * (a + a.signum() * sq);
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q, b / q]
}

fn monic_cubic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    // x = t − a/3 gives t³ + p t + q = 0
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;

    let size = 1.0 + a.abs().max(b.abs()).max(c.abs());
    let tiny = 1e-14 * size * size * size;

    if disc.abs() <= tiny && p.abs() <= 1e-10 * size {
        // triple root
        return vec![-shift];
    }
    if disc > tiny {
        let sq = disc.sqrt();
        let u = (-half_q - half_q.signum() * sq).cbrt();
        let t = if u == 0.0 { 0.0 } else { u - third_p / u };
        return vec![t - shift];
    }
    if disc.abs() <= tiny {
        // a simple and a double root
        let simple = 3.0 * q / p;
        let double = -3.0 * q / (2.0 * p);
        return vec![simple - shift, double - shift];
    }
    let r = (-third_p).sqrt();
    let cos_arg = (-half_q / (r * r * r)).clamp(-1.0, 1.0);
    let phi = cos_arg.acos();
    (0..3)
        .map(|k| 2.0 * r * ((phi - 2.0 * PI * k as f64) / 3.0).cos() - shift)
        .collect()
}

fn polish(c: &CubicCoeffs, x: f64) -> f64 {
    let fx = c.eval(x);
    let dfx = c.derivative(x);
    if dfx == 0.0 || !dfx.is_finite() {
        return x;
    }
    let next = x - fx / dfx;
    if next.is_finite() && c.eval(next).abs() < fx.abs() {
        next
    } else {
        x
    }
}

/// Largest positive root (by absolute value); `None` if no root exceeds
/// [`POSITIVE_ROOT_CUTOFF`].
pub fn select_positive_root(roots: &[f64]) -> Option<f64> {
    roots
        .iter()
        .copied()
        .filter(|&r| r > POSITIVE_ROOT_CUTOFF)
        .max_by(|x, y| x.abs().partial_cmp(&y.abs()).expect("roots are finite"))
}
