use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use deflatron::linalg::mm::{write_coordinate_file, MmSymmetry};
use deflatron::linalg::CsrMatrix;
use deflatron::problems::{laplace_bilinear, random_unit_solution_rhs};
use deflatron::projection::DeflatedOperator;
use deflatron::solvers::{CgConfig, CoarsePolicy, DeflatedCg, StopRule};
use deflatron::subspaces::{direct_interpolation, full_coarsening};
use serde_json::Value;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deflatron"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn identity_with_eigen_subspace_needs_at_most_one_iteration() {
    let dir = tempfile::tempdir().unwrap();
    write_coordinate_file(
        dir.path().join("i.mtx"),
        &CsrMatrix::identity(3),
        MmSymmetry::Symmetric,
        &[],
    )
    .unwrap();
    let out = run(
        &["solve", "--matrix", "i.mtx", "--subspace", "eigen:2", "--seed", "4"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = &json(&out)["results"];
    assert_eq!(r["m"], 1);
    assert!(r["iterations"].as_u64().unwrap() <= 1);
    assert!(r["error"].as_f64().unwrap() < 1e-12);
}

#[test]
fn exported_grid_solves_like_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "export",
            "--problem",
            "grid",
            "--n-grid",
            "7",
            "--out",
            "g.mtx",
            "--rhs-out",
            "b.mtx",
            "--seed",
            "3",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(
        &[
            "solve",
            "--matrix",
            "g.mtx",
            "--rhs",
            "b.mtx",
            "--subspace",
            "interpolation:full_coarsening:7",
            "--solution",
            "x.mtx",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = &json(&out)["results"];

    let a = laplace_bilinear(7).unwrap().matrix;
    let basis = direct_interpolation(&a, &full_coarsening(7).unwrap()).unwrap();
    let op = DeflatedOperator::new(&a, &basis, CoarsePolicy::Direct).unwrap();
    let b = random_unit_solution_rhs(&a, 3).unwrap().b;
    let cfg = CgConfig::with_rule(1e-6, StopRule::Relative, 1000).unwrap();
    let lib = DeflatedCg::new(&op).solve(&b, None, &cfg).unwrap();

    assert_eq!(r["iterations"].as_u64().unwrap() as usize, lib.iterations);
    assert_eq!(r["m"], 16);
    let rel = |x: f64, y: f64| (x - y).abs() <= 1e-12 * y.abs().max(1e-300);
    assert!(rel(r["final_residual"].as_f64().unwrap(), lib.final_residual));
    let hist: Vec<f64> = serde_json::from_value(r["residual_history"].clone()).unwrap();
    assert_eq!(hist.len(), lib.residual_history.len());
    assert!(hist.iter().zip(&lib.residual_history).all(|(&x, &y)| rel(x, y)));
    assert!(fs::metadata(dir.path().join("x.mtx")).unwrap().len() > 0);
}

#[test]
fn malformed_matrix_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.mtx"),
        "%%MatrixMarket matrix coordinate real general\n3 3 2\n1 1 x\n",
    )
    .unwrap();
    let out = run(&["solve", "--matrix", "bad.mtx", "--subspace", "eigen:1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.mtx"), "{err}");
}

#[test]
fn indefinite_matrix_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]).unwrap();
    write_coordinate_file(dir.path().join("a.mtx"), &a, MmSymmetry::Symmetric, &[]).unwrap();
    let out = run(&["solve", "--matrix", "a.mtx", "--subspace", "eigen:1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["table1", "--p-min", "6", "--p-max", "4"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["table1", "--p-min", "13"], dir.path()).status.code(), Some(2));
    assert_eq!(
        run(&["solve", "--matrix", "a.mtx", "--subspace", "wavelets:2"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn table2_beyond_the_dense_limit_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["table2", "--n-grid", "127"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("limit"));
}

#[test]
fn table2_csv_and_json_agree() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run(&["table2", "--n-grid", "7"], dir.path());
    assert!(csv.status.success());
    let text = String::from_utf8(csv.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# deflatron"));
    let header: Vec<_> = lines.next().unwrap().split(',').collect();
    let values: Vec<_> = lines.next().unwrap().split(',').collect();
    let gamma_csv: f64 = values[header.iter().position(|&h| h == "gamma").unwrap()]
        .parse()
        .unwrap();

    let js = json(&run(&["table2", "--n-grid", "7", "--format", "json"], dir.path()));
    assert_eq!(js["config"]["n_grid"], 7);
    let gamma = js["results"]["gamma"].as_f64().unwrap();
    assert!((gamma_csv - gamma).abs() <= 5e-6 * gamma);
}

#[test]
fn figure1_marks_undefined_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["figure1", "--magnitudes", "0,0.001,1", "--out", "f.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("f.csv")).unwrap();
    let rows: Vec<_> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    assert!(!rows[1].contains("NA"));
    assert!(rows[2].contains("NA"));
}
