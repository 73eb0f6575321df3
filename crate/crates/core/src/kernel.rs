//! Kernel functions, Gram matrices and the RKHS quadratic form.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Kernel widths of the ten-kernel Gaussian bank used in the four-quadrant experiment.
pub const QUADRANT_BANK_SIGMAS: [f64; 10] = [
    0.1400, 0.0995, 0.0161, 0.0409, 0.1561, 0.0156, 0.1221, 0.1175, 0.0539, 0.1247,
];

/// A single candidate kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `exp(-‖x - y‖² / (2σ²))`
    Gaussian { sigma: f64 },
    /// `(xᵀy)^degree`
    HomogeneousPolynomial { degree: u32 },
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gaussian sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(KernelSpec::Gaussian { sigma })
    }

    pub fn polynomial(degree: u32) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidArgument(
                "polynomial degree must be at least 1".into(),
            ));
        }
        Ok(KernelSpec::HomogeneousPolynomial { degree })
    }

    /// Evaluates the kernel, checking that both points have the same dimension.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::InvalidArgument("kernel inputs must be non-empty".into()));
        }
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Gaussian { sigma } => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq / (2.0 * sigma * sigma)).exp()
            }
            KernelSpec::HomogeneousPolynomial { degree } => {
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                dot.powi(degree as i32)
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Gaussian { sigma } => write!(f, "gaussian {sigma}"),
            KernelSpec::HomogeneousPolynomial { degree } => write!(f, "poly {degree}"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// Parses `gaussian <sigma>` or `poly <degree>`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let kind = parts.next().unwrap_or("");
        let arg = parts.next();
        if parts.next().is_some() {
            return Err(Error::InvalidArgument(format!("trailing tokens in kernel spec {s:?}")));
        }
        let arg = arg.ok_or_else(|| Error::InvalidArgument(format!("missing parameter in kernel spec {s:?}")))?;
        match kind {
            "gaussian" => {
                let sigma: f64 = arg
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad sigma {arg:?}")))?;
                KernelSpec::gaussian(sigma)
            }
            "poly" => {
                let degree: u32 = arg
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad degree {arg:?}")))?;
                KernelSpec::polynomial(degree)
            }
            other => Err(Error::InvalidArgument(format!("unknown kernel family {other:?}"))),
        }
    }
}

/// Ordered, non-empty list of candidate kernels. The index of a kernel in
/// the bank is its index in `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank {
    specs: Vec<KernelSpec>,
}

impl KernelBank {
    pub fn new(specs: Vec<KernelSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidArgument("kernel bank must contain at least one kernel".into()));
        }
        Ok(KernelBank { specs })
    }

    /// The ten Gaussian kernels of the four-quadrant experiment.
    pub fn quadrant_bank() -> Self {
        KernelBank {
            specs: QUADRANT_BANK_SIGMAS
                .iter()
                .map(|&sigma| KernelSpec::Gaussian { sigma })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn specs(&self) -> &[KernelSpec] {
        &self.specs
    }

    /// Parses the bank file format: one spec per line, `#` comments and blank lines ignored.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut specs = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let spec = line
                .parse::<KernelSpec>()
                .map_err(|e| Error::parse(origin, no + 1, e.to_string()))?;
            specs.push(spec);
        }
        if specs.is_empty() {
            return Err(Error::parse(origin, 0, "kernel bank file lists no kernels"));
        }
        Ok(KernelBank { specs })
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        self.specs.iter().map(|s| format!("{s}\n")).collect()
    }
}

/// Dense Gram matrices `K_ℓ[i, j] = κ_ℓ(x_i, x_j)` with their Cholesky factors
/// and spectral decompositions, computed once and read-only afterwards.
#[derive(Debug, Clone)]
pub struct GramStack {
    mats: Vec<DMatrix<f64>>,
    chol: Vec<Cholesky<f64, Dyn>>,
    eig: Vec<SymmetricEigen<f64, Dyn>>,
    m: usize,
}

/// Builds one Gram matrix per kernel and factorizes each of them.
///
/// `jitter` is added to every diagonal entry. Fails on the first kernel
/// whose matrix is not numerically positive definite.
pub fn build_gram_stack(bank: &KernelBank, points: &[Vec<f64>], jitter: f64) -> Result<GramStack> {
    let m = points.len();
    if m == 0 {
        return Err(Error::InvalidArgument("cannot build a Gram matrix from zero points".into()));
    }
    if !(jitter >= 0.0 && jitter.is_finite()) {
        return Err(Error::InvalidArgument(format!("jitter must be nonnegative, got {jitter}")));
    }
    let n = points[0].len();
    if n == 0 {
        return Err(Error::InvalidArgument("points must have at least one feature".into()));
    }
    if let Some(p) = points.iter().find(|p| p.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: p.len() });
    }

    type Factored = (DMatrix<f64>, Cholesky<f64, Dyn>, SymmetricEigen<f64, Dyn>);
    let built: Vec<Result<Factored>> = bank
        .specs()
        .par_iter()
        .enumerate()
        .map(|(ell, spec)| {
            let mat = gram_matrix(spec, points, jitter);
            let chol = Cholesky::new(mat.clone()).ok_or(Error::NotPositiveDefinite { kernel: ell })?;
            let eig = SymmetricEigen::new(mat.clone());
            Ok((mat, chol, eig))
        })
        .collect();

    let mut mats = Vec::with_capacity(bank.len());
    let mut chol = Vec::with_capacity(bank.len());
    let mut eig = Vec::with_capacity(bank.len());
    for item in built {
        let (k, c, e) = item?;
        mats.push(k);
        chol.push(c);
        eig.push(e);
    }
    Ok(GramStack { mats, chol, eig, m })
}

fn gram_matrix(spec: &KernelSpec, points: &[Vec<f64>], jitter: f64) -> DMatrix<f64> {
    let m = points.len();
    let mut k = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = spec.eval_unchecked(&points[i], &points[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += jitter;
    }
    k
}

impl GramStack {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of kernels `L`.
    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn matrix(&self, ell: usize) -> &DMatrix<f64> {
        &self.mats[ell]
    }

    pub fn cholesky(&self, ell: usize) -> &Cholesky<f64, Dyn> {
        &self.chol[ell]
    }

    /// `vᵀ K_ℓ⁻¹ v` through a forward solve with the cached Cholesky factor,
    /// clamped at zero.
    pub fn quad_form_inv(&self, ell: usize, v: &DVector<f64>) -> f64 {
        assert_eq!(v.len(), self.m, "value vector length must equal sample count");
        let l = self.chol[ell].l_dirty();
        let w = l
            .solve_lower_triangular(v)
            .expect("Cholesky factor has a nonzero diagonal");
        w.norm_squared().max(0.0)
    }

    /// Solves `(shift·I + scale·K_ℓ) x = rhs` using the cached eigendecomposition of `K_ℓ`.
    pub fn solve_shifted(&self, ell: usize, shift: f64, scale: f64, rhs: &DVector<f64>) -> DVector<f64> {
        let eig = &self.eig[ell];
        let mut coef = eig.eigenvectors.tr_mul(rhs);
        for (c, lam) in coef.iter_mut().zip(eig.eigenvalues.iter()) {
            *c /= shift + scale * lam;
        }
        &eig.eigenvectors * coef
    }

    /// Same system as [`GramStack::solve_shifted`], factorizing the coefficient
    /// matrix with Cholesky on every call.
    pub fn solve_shifted_cholesky(
        &self,
        ell: usize,
        shift: f64,
        scale: f64,
        rhs: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let mut a = &self.mats[ell] * scale;
        for i in 0..self.m {
            a[(i, i)] += shift;
        }
        let chol = Cholesky::new(a).ok_or(Error::LinearSolve { kernel: ell })?;
        Ok(chol.solve(rhs))
    }

    /// Smallest eigenvalue of `Σ_ℓ d_ℓ K_ℓ`.
    ///
    /// Diagnostic only: this is the natural candidate for the combined kernel
    /// matrix whose smallest eigenvalue bounds the prox step for global
    /// minimizers, but nothing else in the crate depends on it.
    pub fn combined_min_eigenvalue(&self, d: &[f64]) -> f64 {
        assert_eq!(d.len(), self.len());
        let mut combined = DMatrix::zeros(self.m, self.m);
        for (k, &w) in self.mats.iter().zip(d) {
            combined += k * w;
        }
        SymmetricEigen::new(combined).eigenvalues.min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(m: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn gaussian_at_equal_points_is_one() {
        let k = KernelSpec::gaussian(0.5).unwrap();
        assert_eq!(k.eval(&[0.3, -1.2], &[0.3, -1.2]).unwrap(), 1.0);
    }

    #[test]
    fn gaussian_unit_sigma_squared_distance_two() {
        let k = KernelSpec::gaussian(1.0).unwrap();
        // ‖x − y‖² = 2
        let v = k.eval(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_relative_eq!(v, (-1.0f64).exp(), epsilon = 1e-15);
        assert!((v - 0.36788).abs() < 1e-5);
    }

    #[test]
    fn polynomial_kernels() {
        let lin = KernelSpec::polynomial(1).unwrap();
        assert_eq!(lin.eval(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        let quad = KernelSpec::polynomial(2).unwrap();
        assert_eq!(quad.eval(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn eval_rejects_dimension_mismatch() {
        let k = KernelSpec::gaussian(1.0).unwrap();
        assert!(matches!(
            k.eval(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(KernelSpec::gaussian(0.0).is_err());
        assert!(KernelSpec::gaussian(-1.0).is_err());
        assert!(KernelSpec::polynomial(0).is_err());
        assert!(KernelBank::new(vec![]).is_err());
    }

    #[test]
    fn bank_file_round_trip() {
        let bank = KernelBank::new(vec![
            KernelSpec::gaussian(0.0161).unwrap(),
            KernelSpec::polynomial(3).unwrap(),
        ])
        .unwrap();
        let parsed = KernelBank::parse(&bank.to_text(), Path::new("bank.txt")).unwrap();
        assert_eq!(parsed, bank);
    }

    #[test]
    fn bank_file_errors_carry_line_numbers() {
        let err = KernelBank::parse("# header\ngaussian 0.1\nlaplace 2\n", Path::new("b.txt")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(KernelBank::parse("\n# nothing\n", Path::new("b.txt")).is_err());
    }

    #[test]
    fn duplicate_points_are_not_positive_definite() {
        let bank = KernelBank::new(vec![KernelSpec::gaussian(1.0).unwrap()]).unwrap();
        let pts = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        assert!(matches!(
            build_gram_stack(&bank, &pts, 0.0),
            Err(Error::NotPositiveDefinite { kernel: 0 })
        ));
        // jitter makes it factorizable
        assert!(build_gram_stack(&bank, &pts, 1e-6).is_ok());
    }

    #[test]
    fn failing_kernel_is_named() {
        let bank = KernelBank::new(vec![
            KernelSpec::gaussian(0.1).unwrap(),
            KernelSpec::polynomial(1).unwrap(),
        ])
        .unwrap();
        // three points in the plane: the linear kernel Gram has rank ≤ 2
        let pts = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        assert!(matches!(
            build_gram_stack(&bank, &pts, 0.0),
            Err(Error::NotPositiveDefinite { kernel: 1 })
        ));
    }

    #[test]
    fn separated_points_give_unit_diagonal() {
        let bank = KernelBank::new(vec![KernelSpec::gaussian(0.1).unwrap()]).unwrap();
        let pts = vec![vec![0.0, 0.0], vec![0.2, 0.0], vec![0.0, 0.25]];
        let g = build_gram_stack(&bank, &pts, 0.0).unwrap();
        let k = g.matrix(0);
        assert_eq!(k.nrows(), 3);
        for i in 0..3 {
            assert_eq!(k[(i, i)], 1.0);
            for j in 0..3 {
                if i != j {
                    assert!(k[(i, j)] < 1.0 && k[(i, j)] > 0.0);
                }
            }
        }
    }

    #[test]
    fn quadrant_bank_factorizes_on_random_points() {
        let data = crate::data::gen_quadrant_data(100, 0.05, 11).unwrap();
        let g = build_gram_stack(&KernelBank::quadrant_bank(), &data.points, 0.0).unwrap();
        assert_eq!(g.len(), 10);
        assert_eq!(g.m(), 100);
    }

    #[test]
    fn quad_form_of_zero_is_zero() {
        let bank = KernelBank::new(vec![KernelSpec::gaussian(0.3).unwrap()]).unwrap();
        let g = build_gram_stack(&bank, &random_points(4, 2, 1), 0.0).unwrap();
        assert_eq!(g.quad_form_inv(0, &DVector::zeros(4)), 0.0);
    }

    #[test]
    fn quad_form_on_near_identity_gram() {
        let bank = KernelBank::new(vec![KernelSpec::gaussian(0.01).unwrap()]).unwrap();
        let pts = vec![vec![0.0, 0.0], vec![10.0, 0.0]];
        let g = build_gram_stack(&bank, &pts, 0.0).unwrap();
        let q = g.quad_form_inv(0, &DVector::from_vec(vec![3.0, 4.0]));
        assert!((q - 25.0).abs() < 1e-6);
    }

    #[test]
    fn quad_form_matches_dense_inverse() {
        let bank = KernelBank::new(vec![KernelSpec::gaussian(0.7).unwrap()]).unwrap();
        let g = build_gram_stack(&bank, &random_points(5, 3, 7), 0.0).unwrap();
        let v = DVector::from_vec(vec![0.3, -1.1, 0.8, 2.0, -0.4]);
        let inv = g.matrix(0).clone().try_inverse().unwrap();
        let oracle = v.dot(&(&inv * &v));
        let q = g.quad_form_inv(0, &v);
        assert!((q - oracle).abs() <= 1e-10 * oracle.abs().max(1.0), "{q} vs {oracle}");
    }

    #[test]
    fn shifted_solves_agree() {
        let bank = KernelBank::new(vec![KernelSpec::gaussian(0.4).unwrap()]).unwrap();
        let g = build_gram_stack(&bank, &random_points(8, 2, 3), 0.0).unwrap();
        let rhs = DVector::from_fn(8, |i, _| (i as f64).sin());
        let a = g.solve_shifted(0, 2.5, 4.0, &rhs);
        let b = g.solve_shifted_cholesky(0, 2.5, 4.0, &rhs).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn combined_min_eigenvalue_of_single_identity_like_gram() {
        let bank = KernelBank::new(vec![KernelSpec::gaussian(0.01).unwrap()]).unwrap();
        let g = build_gram_stack(&bank, &[vec![0.0], vec![5.0]], 0.0).unwrap();
        assert!((g.combined_min_eigenvalue(&[0.5]) - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn gram_is_exactly_symmetric_and_gaussian_entries_in_unit_interval(
            seed in 0u64..1000, m in 1usize..12, sigma in 0.05f64..2.0
        ) {
            let bank = KernelBank::new(vec![
                KernelSpec::Gaussian { sigma },
                KernelSpec::HomogeneousPolynomial { degree: 2 },
            ]).unwrap();
            let pts = random_points(m, 2, seed);
            let mats: Vec<_> = bank.specs().iter().map(|s| gram_matrix(s, &pts, 0.0)).collect();
            for k in &mats {
                for i in 0..m {
                    for j in 0..m {
                        prop_assert_eq!(k[(i, j)], k[(j, i)]);
                    }
                }
            }
            // far-apart points at small sigma may underflow to exactly 0
            for v in mats[0].iter() {
                prop_assert!(*v >= 0.0 && *v <= 1.0);
            }
            for i in 0..m {
                prop_assert_eq!(mats[0][(i, i)], 1.0);
            }
        }

        #[test]
        fn eval_is_symmetric(x in prop::collection::vec(-3.0f64..3.0, 3),
                             y in prop::collection::vec(-3.0f64..3.0, 3),
                             sigma in 0.01f64..5.0, degree in 1u32..5) {
            for k in [KernelSpec::Gaussian { sigma }, KernelSpec::HomogeneousPolynomial { degree }] {
                prop_assert_eq!(k.eval(&x, &y).unwrap(), k.eval(&y, &x).unwrap());
            }
        }

        #[test]
        fn quad_form_inv_inverts_the_rkhs_norm(seed in 0u64..500, m in 1usize..10) {
            let bank = KernelBank::new(vec![KernelSpec::gaussian(0.6).unwrap()]).unwrap();
            let pts = random_points(m, 2, seed);
            let g = build_gram_stack(&bank, &pts, 0.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let w = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
            let kw = g.matrix(0) * &w;
            let direct = w.dot(&kw);
            let via_inverse = g.quad_form_inv(0, &kw);
            prop_assert!((via_inverse - direct).abs() <= 1e-8 * direct.abs().max(1e-12),
                "{} vs {}", via_inverse, direct);
        }
    }
}
