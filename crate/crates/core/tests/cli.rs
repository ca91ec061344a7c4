use std::path::Path;
use std::process::{Command, Output};

use rqip::experiments::{ConcentrationCell, MomentCell, StudyGrid, TestVector};
use rqip::geometry::EpsilonNet;
use rqip::rqip::RqipReport;

fn rqip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rqip")).args(args).env_remove("RQIP_THREADS").output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn complexity_example() {
    let o = rqip(&[
        "complexity", "--alpha", "0.5", "--p", "0.25", "--delta", "0.5", "--eta", "0.5", "--N", "4", "--k", "1",
        "--c0", "0.25", "--Ccon", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = text(&o.stdout);
    let line = out.lines().find(|l| l.starts_with("log10_M = ")).unwrap();
    let v: f64 = line.trim_start_matches("log10_M = ").parse().unwrap();
    assert!((v - 23.004).abs() < 1e-3, "{out}");
}

#[test]
fn bounds_threshold_example() {
    let o = rqip(&[
        "bounds", "--alpha", "0.5", "--p", "0.25", "--gamma", "1", "--c0", "0.25", "--Cprime", "1", "--eps", "1",
        "--M", "16", "--show", "T",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(text(&o.stdout).contains("T = 2"), "{}", text(&o.stdout));
}

#[test]
fn delta_out_of_range_is_a_domain_error() {
    let o = rqip(&["rqip-check", "--alpha", "0.5", "--p", "0.25", "--delta", "1.5", "--k", "1", "--N", "4", "--M", "100", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("δ ∈ (0, 1)"), "{}", text(&o.stderr));
}

#[test]
fn p_above_alpha_names_the_constraint() {
    let o = rqip(&["bounds", "--alpha", "0.5", "--p", "0.6", "--eps", "1", "--M", "16"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("p ∈ (0, α)"), "{}", text(&o.stderr));
}

#[test]
fn help_lists_flags_for_every_subcommand() {
    let o = rqip(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let cases: &[(&str, &[&str])] = &[
        ("sample", &["--alpha", "--gamma", "--M", "--seed", "--out"]),
        ("moments", &["--alpha", "--p", "--M", "--seed"]),
        ("bounds", &["--alpha", "--p", "--c0", "--Cprime", "--Ccon", "--eps", "--M", "--show"]),
        ("net", &["--alpha", "--eps", "--k", "--N", "--target", "--budget", "--verify", "--seed"]),
        ("rqip-check", &["--alpha", "--p", "--delta", "--k", "--N", "--M", "--strategy", "--seed"]),
        ("complexity", &["--alpha", "--p", "--delta", "--eta", "--N", "--k", "--c0", "--Ccon", "--mode"]),
        ("study", &["--name", "--seed", "--out", "--grid"]),
    ];
    for (sub, flags) in cases {
        assert!(text(&o.stdout).contains(sub), "top-level help lacks {sub}");
        let o = rqip(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub} --help");
        let help = text(&o.stdout);
        for f in *flags {
            assert!(help.contains(f), "{sub} --help lacks {f}");
        }
    }
}

#[test]
fn usage_errors_exit_one() {
    let o = rqip(&["bounds", "--alpha", "0.5", "--p", "0.25", "--eps", "1", "--M", "16", "--bogus", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).to_lowercase().contains("usage"));
    assert_eq!(rqip(&["sample", "--alpha", "0.5", "--M", "10"]).status.code(), Some(1));
    assert_eq!(rqip(&["net", "--alpha", "0.5", "--eps", "0.5", "--k", "1", "--N", "3"]).status.code(), Some(1));
    assert_eq!(rqip(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn json_artifacts_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/net");
    let o = rqip(&[
        "net", "--alpha", "0.5", "--eps", "0.5", "--k", "2", "--N", "4", "--seed", "3", "--verify", "200", "--format",
        "json", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let net = EpsilonNet::from_json(&std::fs::read_to_string(out.join("net.json")).unwrap()).unwrap();
    assert_eq!((net.k, net.dim), (2, 4));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("net_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["size"].as_u64().unwrap() as usize, net.len());

    let out = dir.path().join("check");
    let o = rqip(&[
        "rqip-check", "--alpha", "0.5", "--p", "0.2", "--delta", "0.5", "--k", "1", "--N", "6", "--M", "20000",
        "--seed", "4", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let report = RqipReport::from_json(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!((report.rows, report.cols, report.master_seed), (20000, 6, 4));
}

fn write_grid(dir: &Path, grid: &StudyGrid) -> String {
    let path = dir.join("grid.json");
    std::fs::write(&path, serde_json::to_string(grid).unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn small_concentration_grid() -> StudyGrid {
    StudyGrid::Concentration(vec![ConcentrationCell::relative(0.5, 0.25, 1.0, 0.2, vec![64, 128, 256], 200).unwrap()])
}

#[test]
fn study_writes_csv_manifest_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_grid(dir.path(), &small_concentration_grid());
    let out = dir.path().join("a/b");
    let o = rqip(&["study", "--name", "concentration", "--seed", "5", "--grid", &grid, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let csv = std::fs::read_to_string(out.join("concentration.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4, "{csv}");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("concentration_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["environment"]["master_seed"], 5);
    let svg = std::fs::read_to_string(out.join("concentration_cell0.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.contains("polyline"));
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_grid(
        dir.path(),
        &StudyGrid::Moments(vec![MomentCell {
            alpha: 0.5,
            p: 0.2,
            gamma: 1.0,
            rows: 50_000,
            dim: 5,
            vector: TestVector::RandomSparse { k: 3 },
            scale: 1.0,
        }]),
    );
    let mut csvs = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = Command::new(env!("CARGO_BIN_EXE_rqip"))
            .args(["study", "--name", "moments", "--seed", "6", "--grid", &grid, "--out", out.to_str().unwrap()])
            .env("RQIP_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
        csvs.push(std::fs::read_to_string(out.join("moments.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);

    let o = Command::new(env!("CARGO_BIN_EXE_rqip"))
        .args(["study", "--name", "moments", "--seed", "6", "--grid", &grid, "--out", dir.path().join("bad").to_str().unwrap()])
        .env("RQIP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn grid_of_the_wrong_kind_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_grid(dir.path(), &small_concentration_grid());
    let o = rqip(&["study", "--name", "moments", "--seed", "1", "--grid", &grid, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
