//! k-fold cross-validated grid search over `(C, ρ)` with `ρ1 = ρ2 = ρ3 = ρ`.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::admm::{train_on_gram, Coupling, Hyperparams};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{build_gram_stack, GramStack, KernelBank};
use crate::model::TrainedModel;
use crate::textio;

/// Grid and fold protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub c_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    /// Keep the class ratio of every fold close to that of the whole set.
    pub stratify: bool,
}

impl Default for GridSpec {
    /// `C ∈ {2⁻², …, 2⁷}`, `ρ ∈ {a⁻², …, a⁷}` with `a = √2`, 10 stratified folds.
    fn default() -> Self {
        GridSpec {
            c_grid: (-2..=7).map(|k| 2f64.powi(k)).collect(),
            rho_grid: (-2..=7).map(|k| std::f64::consts::SQRT_2.powi(k)).collect(),
            folds: 10,
            seed: 0,
            stratify: true,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidArgument("at least 2 folds are required".into()));
        }
        if self.c_grid.is_empty() || self.rho_grid.is_empty() {
            return Err(Error::InvalidArgument("grids must be non-empty".into()));
        }
        if let Some(v) = self.c_grid.iter().chain(&self.rho_grid).find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("grid values must be positive, got {v}")));
        }
        Ok(())
    }
}

/// Training and validation indices of one fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

/// Shuffled partition of `0..m` into `folds` validation sets whose sizes
/// differ by at most one.
pub fn kfold_split(m: usize, folds: usize, seed: u64) -> Result<Vec<Fold>> {
    check_folds(m, folds)?;
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(deal(&idx, m, folds))
}

/// Like [`kfold_split`], dealing each class separately so folds keep the
/// label ratio.
pub fn kfold_split_stratified(labels: &[f64], folds: usize, seed: u64) -> Result<Vec<Fold>> {
    let m = labels.len();
    check_folds(m, folds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<usize> = (0..m).filter(|&i| labels[i] > 0.0).collect();
    let mut neg: Vec<usize> = (0..m).filter(|&i| labels[i] <= 0.0).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    // consecutive dealing over the concatenation keeps sizes within one
    pos.extend(neg);
    Ok(deal(&pos, m, folds))
}

fn check_folds(m: usize, folds: usize) -> Result<()> {
    if folds < 2 {
        return Err(Error::InvalidArgument("at least 2 folds are required".into()));
    }
    if folds > m {
        return Err(Error::InvalidArgument(format!("{folds} folds requested for {m} samples")));
    }
    Ok(())
}

fn deal(order: &[usize], m: usize, folds: usize) -> Vec<Fold> {
    let mut val: Vec<Vec<usize>> = vec![Vec::new(); folds];
    for (pos, &i) in order.iter().enumerate() {
        val[pos % folds].push(i);
    }
    val.into_iter()
        .map(|mut v| {
            v.sort_unstable();
            let mut in_val = vec![false; m];
            for &i in &v {
                in_val[i] = true;
            }
            let train = (0..m).filter(|&i| !in_val[i]).collect();
            Fold { train, val: v }
        })
        .collect()
}

/// Cross-validation outcome of one `(C, ρ)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CvCell {
    pub c: f64,
    pub rho: f64,
    pub mean_tacc: f64,
    pub std_tacc: f64,
    /// Folds whose training failed; each was scored 0.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub best_c: f64,
    pub best_rho: f64,
    /// Rows in grid order: `C` outer, `ρ` inner.
    pub table: Vec<CvCell>,
}

impl CvResult {
    pub fn best(&self) -> &CvCell {
        self.table
            .iter()
            .find(|c| c.c == self.best_c && c.rho == self.best_rho)
            .expect("best pair comes from the table")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("C,rho,mean_tacc,std_tacc,failures\n");
        for c in &self.table {
            writeln!(out, "{},{},{},{},{}", c.c, c.rho, c.mean_tacc, c.std_tacc, c.failures).unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        textio::write_atomic(path, &self.to_csv())
    }
}

/// Scores every `(C, ρ)` by mean validation TACC and returns the best pair;
/// ties go to the smaller `C`, then the smaller `ρ`.
///
/// `base` supplies `tol` and `max_iter`; its `C` and `ρ` are ignored.
/// Failed trainings count as a fold accuracy of 0 and never abort the search.
pub fn grid_search_cv(
    dataset: &Dataset,
    bank: &KernelBank,
    grid: &GridSpec,
    base: &Hyperparams,
    jitter: f64,
) -> Result<CvResult> {
    grid.validate()?;
    let folds = if grid.stratify {
        kfold_split_stratified(&dataset.labels, grid.folds, grid.seed)?
    } else {
        kfold_split(dataset.len(), grid.folds, grid.seed)?
    };

    struct Prepared {
        train: Dataset,
        val: Dataset,
        gram: Option<GramStack>,
    }
    let prepared: Vec<Prepared> = folds
        .par_iter()
        .map(|f| {
            let train = dataset.subset(&f.train);
            let gram = build_gram_stack(bank, &train.points, jitter).ok();
            Prepared {
                val: dataset.subset(&f.val),
                train,
                gram,
            }
        })
        .collect();

    let pairs: Vec<(f64, f64)> = grid
        .c_grid
        .iter()
        .flat_map(|&c| grid.rho_grid.iter().map(move |&rho| (c, rho)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..pairs.len())
        .flat_map(|p| (0..prepared.len()).map(move |f| (p, f)))
        .collect();

    let scores: Vec<Option<f64>> = jobs
        .par_iter()
        .map(|&(p, f)| {
            let (c, rho) = pairs[p];
            let fold = &prepared[f];
            let gram = fold.gram.as_ref()?;
            let hp = Hyperparams {
                c,
                rho1: rho,
                rho2: rho,
                rho3: rho,
                tol: base.tol,
                max_iter: base.max_iter,
            };
            let (_, state) = train_on_gram(gram, &fold.train.labels, &hp, Coupling::default()).ok()?;
            let model = TrainedModel::from_state(&fold.train, bank, &state, &hp);
            let acc = model.evaluate(&fold.val.points, &fold.val.labels).ok()?.tacc;
            acc.is_finite().then_some(acc)
        })
        .collect();

    let k = prepared.len();
    let table: Vec<CvCell> = pairs
        .iter()
        .enumerate()
        .map(|(p, &(c, rho))| {
            let cell = &scores[p * k..(p + 1) * k];
            let accs: Vec<f64> = cell.iter().map(|s| s.unwrap_or(0.0)).collect();
            let mean = accs.iter().sum::<f64>() / k as f64;
            let var = accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (k - 1) as f64;
            CvCell {
                c,
                rho,
                mean_tacc: mean,
                std_tacc: var.sqrt(),
                failures: cell.iter().filter(|s| s.is_none()).count(),
            }
        })
        .collect();

    let best = table
        .iter()
        .fold(None::<&CvCell>, |best, cell| match best {
            None => Some(cell),
            Some(b) => {
                let better = cell.mean_tacc > b.mean_tacc
                    || (cell.mean_tacc == b.mean_tacc && (cell.c, cell.rho) < (b.c, b.rho));
                Some(if better { cell } else { b })
            }
        })
        .expect("grid is non-empty");
    Ok(CvResult {
        best_c: best.c,
        best_rho: best.rho,
        table,
    })
}
