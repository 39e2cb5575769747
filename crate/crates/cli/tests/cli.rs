use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn logconc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logconc")).args(args).output().expect("binary runs")
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "runtimes.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn list_names_every_experiment() {
    let out = logconc(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["sample", "shell", "moments", "cov-approx", "clt", "isoperimetry", "volume", "proof-check"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing from list");
    }
}

#[test]
fn shell_rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &Path, workers: &str| {
        let out = logconc(&[
            "--seed", "7", "--workers", workers, "--out", dir.to_str().unwrap(),
            "-s", "spec.family=gaussian", "-s", "dims=64", "-s", "samples=20000", "shell",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run(&a, "1");
    run(&b, "3");
    let fa = files(&a);
    assert!(fa.iter().any(|(n, _)| n == "records.jsonl"));
    assert!(fa.iter().any(|(n, _)| n == "shell.csv"));
    assert_eq!(fa, files(&b));
    assert!(a.join("runtimes.json").exists());
}

#[test]
fn summary_carries_seed_and_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = logconc(&[
        "--seed", "11", "--out", tmp.path().to_str().unwrap(),
        "-s", "spec.family=uniform-cube", "-s", "dims=3", "-s", "samples=2000", "sample",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["seed"], "11");
    assert_eq!(summary["config"]["spec.family"], "uniform-cube");
    assert_eq!(summary["exit_code"], 0);
}

#[test]
fn isotropic_sconcave_without_covariance_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let out = logconc(&[
        "--seed", "1", "--out", tmp.path().to_str().unwrap(),
        "-s", "spec.family=sconcave", "-s", "spec.r=2", "-s", "spec.gauge=l2", "-s", "dims=4", "shell",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("moments of order p exist only for p < r"), "{err}");
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let no_seed = logconc(&["--out", dir, "-s", "spec.family=gaussian", "-s", "dims=4", "shell"]);
    assert_eq!(no_seed.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&no_seed.stderr).contains("seed"));
    let unknown = logconc(&["--seed", "1", "--out", dir, "-s", "colour=red", "shell"]);
    assert_eq!(unknown.status.code(), Some(2));
    let few_replicas = logconc(&["--seed", "1", "--replicas", "4", "--out", dir, "-s", "spec.family=gaussian", "-s", "dims=4", "shell"]);
    assert_eq!(few_replicas.status.code(), Some(2));
}

#[test]
fn config_file_and_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# thin shell\nseed = 5\nspec.family = product-exponential\ndims = 8\nsamples = 5000\n").unwrap();
    let out_dir = tmp.path().join("out");
    let out = logconc(&["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "-s", "dims=4", "shell"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("shell.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("4,"), "{csv}");
}

#[test]
fn echoed_config_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let out = logconc(&[
        "--seed", "3", "--out", first.to_str().unwrap(),
        "-s", "spec.family=uniform-simplex", "-s", "dims=3,5", "-s", "samples=4000", "moments",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(first.join("summary.json")).unwrap()).unwrap();
    let echoed: String = summary["config"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| format!("{k} = {}\n", v.as_str().unwrap()))
        .collect();
    let cfg = tmp.path().join("echo.cfg");
    fs::write(&cfg, echoed).unwrap();
    let second = tmp.path().join("second");
    let out = logconc(&["--config", cfg.to_str().unwrap(), "--out", second.to_str().unwrap(), "moments"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(files(&first), files(&second));
}
