use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mkl01::KernelBank;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mkl01"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Writes `x1,x2,y` rows and returns the file path.
fn write_data(dir: &TempDir, name: &str, rows: &[(f64, f64, i32)]) -> PathBuf {
    let mut text = String::from("x1,x2,y\n");
    for (a, b, y) in rows {
        text.push_str(&format!("{a},{b},{y}\n"));
    }
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const TOY: [(f64, f64, i32); 4] = [(0.5, 0.5, 1), (-0.5, -0.5, 1), (0.5, -0.5, -1), (-0.5, 0.5, -1)];

fn toy_model(dir: &TempDir) -> (PathBuf, PathBuf, PathBuf) {
    let data = write_data(dir, "toy.csv", &TOY);
    let kernels = dir.path().join("k.txt");
    std::fs::write(&kernels, "gaussian 0.14\n").unwrap();
    let model = dir.path().join("toy.model");
    let state = dir.path().join("toy.state");
    let o = run(&[
        "train", "--train", path_str(&data), "--kernels", path_str(&kernels), "--c", "16", "--rho", "4",
        "--model-out", path_str(&model), "--state-out", path_str(&state),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    (data, model, state)
}

fn gen(dir: &TempDir, m: &str, seed: &str) -> (PathBuf, PathBuf) {
    let tr = dir.path().join(format!("tr{seed}.csv"));
    let te = dir.path().join(format!("te{seed}.csv"));
    let o = run(&[
        "gen-data", "--m", m, "--seed", seed, "--train-out", path_str(&tr), "--test-out", path_str(&te),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    (tr, te)
}

fn data_rows(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn fixture_bank_matches_builtin() {
    let bank = KernelBank::read_file(&fixture("quadrant_bank.txt")).unwrap();
    assert_eq!(bank, KernelBank::quadrant_bank());
}

#[test]
fn gen_data_writes_two_halves() {
    let dir = TempDir::new().unwrap();
    let (tr, te) = gen(&dir, "200", "1");
    assert_eq!(data_rows(&tr), 100);
    assert_eq!(data_rows(&te), 100);
}

#[test]
fn gen_data_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let (tra, _) = gen(&a, "50", "9");
    let (trb, _) = gen(&b, "50", "9");
    assert_eq!(std::fs::read(tra).unwrap(), std::fs::read(trb).unwrap());
}

#[test]
fn gen_data_usage_errors() {
    let dir = TempDir::new().unwrap();
    let te = dir.path().join("te.csv");
    let o = run(&["gen-data", "--m", "10", "--test-out", path_str(&te)]);
    assert_eq!(o.status.code(), Some(2));

    let tr = dir.path().join("tr.csv");
    let o = run(&["gen-data", "--m", "0", "--train-out", path_str(&tr), "--test-out", path_str(&te)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!tr.exists());
}

#[test]
fn train_eval_on_separable_toy() {
    let dir = TempDir::new().unwrap();
    let (data, model, _) = toy_model(&dir);
    let o = run(&["eval", "--model", path_str(&model), "--data", path_str(&data)]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("tacc 1.0000"), "{out}");
    assert!(out.contains("nsv 4"), "{out}");
}

#[test]
fn train_report_lists_iterations_and_weights() {
    let dir = TempDir::new().unwrap();
    let data = write_data(&dir, "toy.csv", &TOY);
    let kernels = dir.path().join("k.txt");
    std::fs::write(&kernels, "gaussian 0.14\n").unwrap();
    let model = dir.path().join("m");
    let o = run(&[
        "train", "--train", path_str(&data), "--kernels", path_str(&kernels), "--c", "16", "--rho", "4",
        "--model-out", path_str(&model),
    ]);
    let out = stdout(&o);
    assert!(out.contains("converged true"), "{out}");
    assert!(out.lines().any(|l| l.starts_with("iterations ")));
    assert!(out.contains("d1 1.0000"), "{out}");
}

#[test]
fn train_rejects_negative_c() {
    let dir = TempDir::new().unwrap();
    let data = write_data(&dir, "toy.csv", &TOY);
    let model = dir.path().join("m");
    let o = run(&["train", "--train", path_str(&data), "--c", "-1", "--rho", "4", "--model-out", path_str(&model)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!model.exists());
}

#[test]
fn duplicate_rows_name_the_failing_kernel() {
    let dir = TempDir::new().unwrap();
    let data = write_data(&dir, "dup.csv", &[(0.5, 0.5, 1), (0.5, 0.5, 1), (-0.5, 0.5, -1)]);
    let kernels = dir.path().join("k.txt");
    std::fs::write(&kernels, "gaussian 0.3\ngaussian 0.5\n").unwrap();
    let model = dir.path().join("m");
    let o = run(&[
        "train", "--train", path_str(&data), "--kernels", path_str(&kernels), "--c", "1", "--rho", "1",
        "--model-out", path_str(&model),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("kernel matrix 0"), "{err}");
    assert!(err.contains("jitter"), "{err}");

    let o = run(&[
        "train", "--train", path_str(&data), "--kernels", path_str(&kernels), "--c", "1", "--rho", "1",
        "--model-out", path_str(&model), "--jitter", "1e-6",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn eval_rejects_wrong_dimension() {
    let dir = TempDir::new().unwrap();
    let (_, model, _) = toy_model(&dir);
    let bad = dir.path().join("3d.csv");
    std::fs::write(&bad, "x1,x2,x3,y\n0.1,0.2,0.3,1\n").unwrap();
    let o = run(&["eval", "--model", path_str(&model), "--data", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn predict_writes_one_row_per_point() {
    let dir = TempDir::new().unwrap();
    let (data, model, _) = toy_model(&dir);
    let out = dir.path().join("pred.csv");
    let o = run(&["predict", "--model", path_str(&model), "--data", path_str(&data), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let preds: Vec<i32> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(preds, vec![1, 1, -1, -1]);
}

#[test]
fn check_certifies_converged_toy() {
    let dir = TempDir::new().unwrap();
    let (_, model, state) = toy_model(&dir);
    let o = run(&["check", "--model", path_str(&model), "--state", path_str(&state)]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    let max: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("max_residual "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(max <= 1e-2);
    assert!(out.contains("certificate local_minimizer"));
}

#[test]
fn check_rejects_unconverged_state() {
    let dir = TempDir::new().unwrap();
    let data = write_data(&dir, "toy.csv", &TOY);
    let kernels = dir.path().join("k.txt");
    std::fs::write(&kernels, "gaussian 0.14\n").unwrap();
    let model = dir.path().join("m");
    let state = dir.path().join("s");
    let o = run(&[
        "train", "--train", path_str(&data), "--kernels", path_str(&kernels), "--c", "16", "--rho", "4",
        "--max-iter", "1", "--model-out", path_str(&model), "--state-out", path_str(&state),
    ]);
    assert!(stdout(&o).contains("converged false"));
    let o = run(&["check", "--model", path_str(&model), "--state", path_str(&state)]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("certificate none"));
}

#[test]
fn check_requires_state_file() {
    let dir = TempDir::new().unwrap();
    let (_, model, _) = toy_model(&dir);
    let missing = dir.path().join("nope.state");
    let o = run(&["check", "--model", path_str(&model), "--state", path_str(&missing)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("nope.state"));
}

#[test]
fn boundary_grid_size() {
    let dir = TempDir::new().unwrap();
    let (_, model, _) = toy_model(&dir);
    let out = dir.path().join("grid.csv");
    let o = run(&["boundary", "--model", path_str(&model), "--resolution", "200", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(data_rows(&out), 40_000);
}

#[test]
fn boundary_accepts_negative_ranges() {
    let dir = TempDir::new().unwrap();
    let (_, model, _) = toy_model(&dir);
    let out = dir.path().join("grid.csv");
    let o = run(&[
        "boundary", "--model", path_str(&model), "--resolution", "3", "--x-min", "-2", "--x-max", "-1",
        "--out", path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let first = std::fs::read_to_string(&out).unwrap().lines().nth(1).unwrap().to_string();
    assert!(first.starts_with("-2,"), "{first}");
}

#[test]
fn boundary_rejects_3d_model() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("3d.csv");
    std::fs::write(&data, "x1,x2,x3,y\n0.5,0.5,0.1,1\n-0.5,-0.5,0.2,-1\n0.3,-0.6,0.9,1\n").unwrap();
    let kernels = dir.path().join("k.txt");
    std::fs::write(&kernels, "gaussian 0.5\n").unwrap();
    let model = dir.path().join("m");
    let o = run(&[
        "train", "--train", path_str(&data), "--kernels", path_str(&kernels), "--c", "4", "--rho", "2",
        "--model-out", path_str(&model),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("g.csv");
    let o = run(&["boundary", "--model", path_str(&model), "--out", path_str(&out)]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("boundary export requires n=2"), "{}", stderr(&o));
}

#[test]
fn cv_rejects_too_many_folds() {
    let dir = TempDir::new().unwrap();
    let (tr, _) = gen(&dir, "200", "2");
    let o = run(&["cv", "--train", path_str(&tr), "--folds", "101"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn cv_table_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (tr, _) = gen(&dir, "60", "3");
    let t1 = dir.path().join("t1.csv");
    let t2 = dir.path().join("t2.csv");
    for t in [&t1, &t2] {
        let o = run(&[
            "cv", "--train", path_str(&tr), "--folds", "3", "--seed", "5", "--c-grid", "4,16", "--rho-grid", "1,4",
            "--table-out", path_str(t),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("best_c "));
    }
    let a = std::fs::read_to_string(&t1).unwrap();
    assert_eq!(a, std::fs::read_to_string(&t2).unwrap());
    assert_eq!(a.lines().count(), 5);
}

#[test]
fn quadrant_scale_run_through_cli() {
    let dir = TempDir::new().unwrap();
    let (tr, te) = gen(&dir, "200", "4");
    let model = dir.path().join("m");
    let o = run(&[
        "train", "--train", path_str(&tr), "--kernels", path_str(&fixture("quadrant_bank.txt")), "--c", "16",
        "--rho", "4", "--model-out", path_str(&model),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let active = stdout(&o).lines().filter(|l| l.starts_with('d') && l.contains("gaussian")).count();
    assert!((1..=5).contains(&active), "{}", stdout(&o));
    let o = run(&["eval", "--model", path_str(&model), "--data", path_str(&te)]);
    let tacc: f64 = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("tacc "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(tacc >= 0.85, "tacc {tacc}");
}
