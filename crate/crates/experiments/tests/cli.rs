use std::path::Path;
use std::process::{Command, Output};

use deimkit::io;
use deimkit::linalg::Matrix;
use deimkit::WeightOperator;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn deimkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deimkit"))
        .args(args)
        .env_remove("DEIMKIT_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` in:\n{text}"))
        .trim()
        .parse()
        .unwrap()
}

fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix {
    Matrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
}

fn low_rank_snapshots(dir: &Path, m: usize, rank: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let y = random_matrix(&mut rng, m, rank) * random_matrix(&mut rng, rank, 12);
    let path = dir.join("snapshots.txt");
    io::write_matrix(&path, &y).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(code(&deimkit(&["--help"])), 0);
    assert_eq!(code(&deimkit(&["--version"])), 0);
    assert_eq!(code(&deimkit(&["example", "--help"])), 0);
}

#[test]
fn usage_errors_exit_with_two() {
    let unknown = deimkit(&["example", "1", "--no-such-flag"]);
    assert_eq!(code(&unknown), 2);
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Usage"));
    assert_eq!(code(&deimkit(&["example", "9"])), 2);
    assert_eq!(code(&deimkit(&["--strategy", "greedy", "example", "1"])), 2);
    assert_eq!(code(&deimkit(&[])), 2);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let snaps = low_rank_snapshots(dir.path(), 30, 4);
    let out = dir.path().to_str().unwrap();
    // 30 is not a perfect square, so there is no grid for the mass matrix.
    let r = deimkit(&["--weight", "mass", "--out", out, "pod", "--snapshots", &snaps, "--rank", "2"]);
    assert_eq!(code(&r), 2);
    let r = deimkit(&["--out", out, "pod", "--snapshots", "/nonexistent/y.txt", "--rank", "2"]);
    assert_eq!(code(&r), 2);
    let r = deimkit(&["--eta", "0.5", "--out", out, "example", "1"]);
    assert_eq!(code(&r), 2);
}

#[test]
fn numerical_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let snaps = low_rank_snapshots(dir.path(), 30, 3);
    let out = dir.path().to_str().unwrap();
    let r = deimkit(&["--out", out, "pod", "--snapshots", &snaps, "--rank", "6"]);
    assert_eq!(code(&r), 3, "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn example1_writes_the_documented_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let r = deimkit(&[
        "--strategy", "srrqr", "--eta", "2", "--seed", "7", "--out", out.to_str().unwrap(),
        "example", "1", "--points", "600", "--train", "10", "--test", "7", "--ranks", "4,8",
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let csv = std::fs::read_to_string(out.join("example1_errors.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "mu,relerr_deim,relerr_qdeim,relerr_srrqr,kappa_deim,kappa_qdeim,kappa_srrqr"
    );
    assert_eq!(csv.lines().count(), 8);
    assert!(!csv.contains('\r'));
    assert!(out.join("example1_meta.txt").exists());
}

#[test]
fn weighted_pipeline_from_snapshots_to_projection() {
    let dir = tempfile::tempdir().unwrap();
    let m = 40;
    let snaps = low_rank_snapshots(dir.path(), m, 8);
    let weight = dir.path().join("w.txt");
    let diag: Vec<f64> = (0..m).map(|i| 1.0 + (i % 7) as f64).collect();
    io::write_weight(&weight, &WeightOperator::diagonal(diag).unwrap()).unwrap();
    let out = dir.path().join("out");
    let (w, o) = (weight.to_str().unwrap(), out.to_str().unwrap());

    let r = deimkit(&["--weight", w, "--out", o, "pod", "--snapshots", &snaps, "--rank", "5"]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(value(&stdout(&r), "rank"), 5.0);
    let basis = out.join("pod_basis.txt");
    let b = basis.to_str().unwrap();

    let r = deimkit(&["--weight", w, "--out", o, "select", "--basis", b]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let (dim, idx) = io::read_selection(out.join("selection.txt")).unwrap();
    assert_eq!((dim, idx.len()), (m, 5));
    let sel = out.join("selection.txt");
    let s = sel.to_str().unwrap();

    let r = deimkit(&["--weight", w, "--out", o, "bounds", "--basis", b, "--selection", s]);
    assert_eq!(code(&r), 0);
    let text = stdout(&r);
    let kappa = value(&text, "kappa");
    assert!(kappa >= 1.0 - 1e-12);
    assert!(kappa <= value(&text, "lemma_bound"));
    assert!((value(&text, "error_constant") - kappa).abs() <= 1e-10 * kappa);

    let r = deimkit(&["--weight", w, "--out", o, "project", "--basis", b, "--selection", s, "--input", &snaps]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let projected = io::read_matrix(out.join("projected.txt")).unwrap();
    assert_eq!(projected.shape(), (m, 12));
    let errors = std::fs::read_to_string(out.join("project_errors.csv")).unwrap();
    let mut lines = errors.lines();
    assert_eq!(lines.next().unwrap(), "column,relerr_w,orth_relerr_w,error_constant");
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[1] <= f[3] * f[2] * (1.0 + 1e-8) + 1e-12, "{line}");
    }
    assert!(out.join("projector.txt").exists());
    assert!(out.join("diagnostics.csv").exists());
}

#[test]
fn identity_bounds_on_a_provided_basis() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let q = random_matrix(&mut rng, 25, 4).qr().q();
    let basis = dir.path().join("u.txt");
    io::write_matrix(&basis, &q).unwrap();
    let r = deimkit(&["--weight", "identity", "bounds", "--basis", basis.to_str().unwrap()]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let text = stdout(&r);
    assert!(value(&text, "kappa") <= value(&text, "lemma_bound"));
    assert!((value(&text, "lemma_bound") - (1.0f64 + 4.0 * 4.0 * 21.0).sqrt()).abs() < 1e-12);
}

#[test]
fn same_seed_gives_identical_files_for_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let r = deimkit(&[
            "--seed", "5", "--threads", threads, "--out", out.to_str().unwrap(),
            "example", "5", "--points", "11", "--train", "30", "--test", "3", "--ranks", "2,4", "--deim-rank", "6",
        ]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
        out
    };
    let a = run("a", "1");
    let b = run("b", "4");
    let c = run("c", "1");
    for f in ["example5_source.csv", "example5_solution.csv", "example5_meta.txt"] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f} depends on the thread count");
        assert_eq!(x, std::fs::read(c.join(f)).unwrap(), "{f} differs between runs");
    }
}
