use std::path::Path;
use std::process::{Command, Output};

fn quadcurl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadcurl")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["eigs", "--nev", "0"][..],
        &["eigs", "--k", "3"],
        &["eigs", "--levels", "0"],
        &["rates", "--levels", "4,8"],
        &["rates", "--levels", "4,12,24"],
        &["check-element", "--k", "3"],
        &["adapt", "--theta", "1.5"],
        &["estimate", "--eigen-index", "6"],
        &["eigs", "--no-such-flag"],
        &["mesh", "--domain", "lshape", "--n", "3"],
    ] {
        let o = quadcurl(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = quadcurl(&["rates", "--levels", "4,8"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least 3 levels"));
}

#[test]
fn eigs_table_with_provenance() {
    let o = quadcurl(&["eigs", "--domain", "square", "--k", "4", "--levels", "4", "--nev", "5"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# quadcurl "));
    assert!(text.contains("# config: "));
    assert!(text.contains("# error-proxy: "));
    let lines = data_lines(&text);
    assert!(lines[0].starts_with("h,lambda_1,lambda_2,lambda_3,lambda_4,lambda_5"));
    assert!(lines[1].starts_with("1/4,708.44"));
}

#[test]
fn json_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.json");
    let o = quadcurl(&["eigs", "--levels", "4", "--nev", "2", "--format", "json", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["meta"]["version"].as_str().unwrap().starts_with("0."));
    assert_eq!(v["meta"]["config"]["problem"]["nev"], 2);
    assert!(v["meta"]["error_proxy"].is_string());
    assert_eq!(v["rows"][0]["lambdas"].as_array().unwrap().len(), 2);
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("series.csv");
    let prefix = dir.path().join("ent");
    let run = || {
        let o = quadcurl(&[
            "--deterministic",
            "estimate",
            "--domain",
            "lshape",
            "--levels",
            "2,4",
            "--nev",
            "1",
            "-o",
            path.to_str().unwrap(),
            "--entities",
            prefix.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let ent = std::fs::read(format!("{}-n4.csv", prefix.display())).unwrap();
        (std::fs::read(&path).unwrap(), ent)
    };
    let first = run();
    let second = run();
    assert_eq!(first, second);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# defaults\nnev = 2\nlevels = 2\n").unwrap();
    let o = quadcurl(&["--config", cfg.to_str().unwrap(), "eigs"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(data_lines(&text)[0].starts_with("h,lambda_1,lambda_2,ndof"));
    let o = quadcurl(&["--config", cfg.to_str().unwrap(), "eigs", "--nev", "3"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(data_lines(&text)[0].starts_with("h,lambda_1,lambda_2,lambda_3,ndof"));
    let o = quadcurl(&["--config", dir.path().join("missing").to_str().unwrap(), "eigs"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn estimate_writes_series_and_entities() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("ent");
    let o = quadcurl(&[
        "estimate",
        "--domain",
        "square",
        "--levels",
        "4,8,16",
        "--nev",
        "3",
        "--eigen-index",
        "3",
        "--entities",
        prefix.to_str().unwrap(),
        "--check-slope",
        "0.25",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "h,ndof,lambda,eta0,eta1,eta2,eta3,estimator,bound,proxy");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].ends_with(",-"));
    for n in [4, 8, 16] {
        assert!(Path::new(&format!("{}-n{n}.csv", prefix.display())).exists());
    }
}

#[test]
fn failed_slope_check_exits_with_one() {
    let o = quadcurl(&["estimate", "--domain", "lshape", "--levels", "2,4,8", "--nev", "1", "--check-slope", "1e-6"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("slopes"));
}

#[test]
fn adapt_with_zero_iterations_echoes_the_initial_solve() {
    let o = quadcurl(&["adapt", "--domain", "lshape", "--iterations", "0", "--nev", "1"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0,24,"));
}

#[test]
fn check_element_passes_for_degree_four() {
    let o = quadcurl(&["check-element", "--k", "4"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS ")).count(), 4);
}

#[test]
fn mesh_export_and_import() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("l.mesh");
    let o = quadcurl(&["mesh", "--domain", "lshape", "--n", "4", "-o", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let o = quadcurl(&["mesh", "--domain", "lshape", "--input", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("triangles,24\n"));
    let o = quadcurl(&["eigs", "--domain", "lshape", "--mesh", path.to_str().unwrap(), "--nev", "1"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    // an imported mesh reports its largest triangle diameter as h
    assert!(data_lines(&text)[1].starts_with("3.535534e-1,"));
}
