//! Command-line interface.
//!
//! Exit codes: 0 success, 1 quantitative failure, 2 usage or validation
//! error, 3 runtime or numerical error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::admm::{train_with_options, Coupling, Hyperparams, StateFile, TrainOptions, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::data::{gen_quadrant_data, read_csv, split, write_csv};
use crate::error::{Error, Result};
use crate::kernel::{build_gram_stack, KernelBank};
use crate::model::TrainedModel;
use crate::stationarity::{check_pstationary, Certificate};
use crate::tuning::{grid_search_cv, GridSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_QUANTITATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mkl01", version, about = "Multiple-kernel SVM with the (0,1)-loss, trained by ADMM")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate four-quadrant data and split it into train and test CSVs
    GenData(GenDataArgs),
    /// Train a model
    Train(TrainArgs),
    /// Report TACC and NSV of a model on a labelled CSV
    Eval(EvalArgs),
    /// Write decision values and predicted labels for a CSV
    Predict(PredictArgs),
    /// Grid search over (C, rho) by k-fold cross-validation
    Cv(CvArgs),
    /// Check P-stationarity of a saved solver state
    Check(CheckArgs),
    /// Export decision values on a regular grid (2-D models only)
    Boundary(BoundaryArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct GenDataArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 0.05)]
    pub margin: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub train_out: PathBuf,
    #[arg(long)]
    pub test_out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub train_frac: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Kernel bank file, one `gaussian <sigma>` or `poly <degree>` per line;
    /// defaults to the built-in ten-Gaussian quadrant bank
    #[arg(long)]
    pub kernels: Option<PathBuf>,
    #[arg(long)]
    pub c: f64,
    /// Sets rho1 = rho2 = rho3
    #[arg(long)]
    pub rho: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long)]
    pub model_out: PathBuf,
    /// Also save the final solver state (needed by `check`)
    #[arg(long)]
    pub state_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    /// Update the f blocks simultaneously from the previous iterate instead
    /// of sequentially
    #[arg(long)]
    pub jacobi: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV with feature columns; a trailing label column is accepted and ignored
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CvArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub kernels: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Plain shuffled folds instead of class-stratified ones
    #[arg(long)]
    pub no_stratify: bool,
    /// Comma-separated C values (default 2^-2..2^7)
    #[arg(long, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,
    /// Comma-separated rho values (default sqrt(2)^-2..sqrt(2)^7)
    #[arg(long, value_delimiter = ',')]
    pub rho_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    #[arg(long)]
    pub table_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CheckArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, default_value_t = 1e-2)]
    pub threshold: f64,
    /// Prox step; defaults to 1/rho1 of the saved run
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct BoundaryArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,
    #[arg(long, default_value_t = -1.0)]
    pub x_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub x_max: f64,
    #[arg(long, default_value_t = -1.0)]
    pub y_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub y_max: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `std::env::args` and runs the command.
pub fn main() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::GenData(a) => cmd_gen_data(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Cv(a) => cmd_cv(&a),
        Command::Check(a) => cmd_check(&a),
        Command::Boundary(a) => cmd_boundary(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                EXIT_USAGE
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn load_bank(path: &Option<PathBuf>) -> Result<KernelBank> {
    match path {
        Some(p) => KernelBank::read_file(p),
        None => Ok(KernelBank::quadrant_bank()),
    }
}

fn check_jitter(jitter: f64) -> Result<()> {
    if !(jitter >= 0.0 && jitter.is_finite()) {
        return Err(Error::InvalidArgument(format!("jitter must be nonnegative, got {jitter}")));
    }
    Ok(())
}

pub fn cmd_gen_data(a: &GenDataArgs) -> Result<i32> {
    let data = gen_quadrant_data(a.m, a.margin, a.seed)?;
    let (train, test) = split(&data, a.train_frac, a.seed)?;
    write_csv(&train, &a.train_out)?;
    write_csv(&test, &a.test_out)?;
    println!("train {} rows -> {}", train.len(), a.train_out.display());
    println!("test {} rows -> {}", test.len(), a.test_out.display());
    Ok(EXIT_OK)
}

pub fn cmd_train(a: &TrainArgs) -> Result<i32> {
    let hp = Hyperparams::with_rho(a.c, a.rho)?.tol(a.tol)?.max_iter(a.max_iter)?;
    check_jitter(a.jitter)?;
    let data = read_csv(&a.train)?;
    let bank = load_bank(&a.kernels)?;
    let opts = TrainOptions {
        jitter: a.jitter,
        coupling: if a.jacobi {
            Coupling::Jacobi
        } else {
            Coupling::GaussSeidel
        },
    };
    let out = train_with_options(&data, &bank, &hp, &opts)?;
    out.model.write_file(&a.model_out)?;
    if let Some(path) = &a.state_out {
        StateFile {
            hp,
            jitter: a.jitter,
            converged: out.report.converged,
            state: out.state.clone(),
        }
        .write_file(path)?;
    }
    println!("iterations {}", out.report.iterations);
    println!("converged {}", out.report.converged);
    println!("max_beta {:e}", out.report.max_beta());
    println!("nsv {}", out.model.nsv());
    println!("b {}", out.model.b_star);
    for (ell, d) in out.model.active_kernels() {
        println!("d{} {:.4} ({})", ell + 1, d, bank.specs()[ell]);
    }
    let train_acc = out.model.evaluate(&data.points, &data.labels)?.tacc;
    println!("train_tacc {train_acc:.4}");
    Ok(EXIT_OK)
}

pub fn cmd_eval(a: &EvalArgs) -> Result<i32> {
    let model = TrainedModel::read_file(&a.model)?;
    let data = read_csv(&a.data)?;
    let m = model.evaluate(&data.points, &data.labels)?;
    println!("tacc {:.4}", m.tacc);
    println!("nsv {}", m.nsv);
    Ok(EXIT_OK)
}

pub fn cmd_predict(a: &PredictArgs) -> Result<i32> {
    let model = TrainedModel::read_file(&a.model)?;
    let text = std::fs::read_to_string(&a.data).map_err(|e| Error::io(&a.data, e))?;
    let mut out = String::from("decision_value,prediction\n");
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (no == 0 && line.starts_with(|c: char| c.is_ascii_alphabetic())) {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::parse(&a.data, no + 1, format!("not a number: {field:?}")))?;
            row.push(v);
        }
        if row.len() == model.dim() + 1 {
            row.pop();
        }
        if row.len() != model.dim() {
            return Err(Error::parse(
                &a.data,
                no + 1,
                format!("expected {} features, got {}", model.dim(), row.len()),
            ));
        }
        let v = model.decision_value(&row)?;
        out.push_str(&format!("{},{}\n", v, if v >= 0.0 { 1 } else { -1 }));
    }
    crate::textio::write_atomic(&a.out, &out)?;
    Ok(EXIT_OK)
}

pub fn cmd_cv(a: &CvArgs) -> Result<i32> {
    check_jitter(a.jitter)?;
    let data = read_csv(&a.train)?;
    let bank = load_bank(&a.kernels)?;
    let mut grid = GridSpec {
        folds: a.folds,
        seed: a.seed,
        stratify: !a.no_stratify,
        ..GridSpec::default()
    };
    if let Some(c) = &a.c_grid {
        grid.c_grid = c.clone();
    }
    if let Some(r) = &a.rho_grid {
        grid.rho_grid = r.clone();
    }
    let base = Hyperparams::with_rho(1.0, 1.0)?.tol(a.tol)?.max_iter(a.max_iter)?;
    let res = grid_search_cv(&data, &bank, &grid, &base, a.jitter)?;
    if let Some(path) = &a.table_out {
        res.write_csv(path)?;
    }
    let best = res.best();
    println!("best_c {}", res.best_c);
    println!("best_rho {}", res.best_rho);
    println!("cv_tacc {:.4} ± {:.4}", best.mean_tacc, best.std_tacc);
    let failures: usize = res.table.iter().map(|c| c.failures).sum();
    if failures > 0 {
        eprintln!("warning: {failures} fold trainings failed and were scored 0");
    }
    Ok(EXIT_OK)
}

pub fn cmd_check(a: &CheckArgs) -> Result<i32> {
    if !(a.threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {}", a.threshold)));
    }
    let model = TrainedModel::read_file(&a.model)?;
    let saved = StateFile::read_file(&a.state)?;
    let gram = build_gram_stack(&model.bank, &model.anchors, saved.jitter)?;
    let gamma = a.gamma.unwrap_or_else(|| saved.hp.gamma());
    let report = check_pstationary(&saved.state, &gram, &model.labels, &saved.hp, gamma)?;
    println!("{report}");
    println!("converged {}", saved.converged);
    match report.certify(a.threshold) {
        Certificate::LocalMinimizer => {
            println!("certificate local_minimizer");
            Ok(EXIT_OK)
        }
        Certificate::NotCertified => {
            println!("certificate none");
            Ok(EXIT_QUANTITATIVE)
        }
    }
}

pub fn cmd_boundary(a: &BoundaryArgs) -> Result<i32> {
    let model = TrainedModel::read_file(&a.model)?;
    let grid = model.boundary_grid((a.x_min, a.x_max), (a.y_min, a.y_max), a.resolution)?;
    grid.write_csv(&a.out)?;
    println!("{} rows -> {}", grid.values.len(), a.out.display());
    Ok(EXIT_OK)
}
