use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rydqca::compare::compare_runs;
use rydqca::io::Table;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rydqca"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "rydqca {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_config(config: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args);
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

const NOISY_SMALL: &str = r#"
experiment = "pxp_orbit"
engine = "physical"
seed = 21
shots = 40

[chain]
n_sites = 4

[schedule]
n_pulses = 3

[noise]
preset = "standard"
n_trajectories = 8
"#;

#[test]
fn identical_config_and_seed_give_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("quasiparticle_ideal.toml");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_config(&cfg, &a, &[]);
    run_config(&cfg, &b, &[]);
    let (ta, tb) = (tree(&a), tree(&b));
    assert!(ta.iter().any(|(n, _)| n.ends_with(".shots")));
    assert!(ta.iter().any(|(n, _)| n == "histogram.csv"));
    assert_eq!(ta, tb);
}

#[test]
fn thread_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "noisy.toml", NOISY_SMALL);
    let mut trees = Vec::new();
    for threads in ["1", "3"] {
        let out = tmp.path().join(format!("t{threads}"));
        let res = bin()
            .env("RYDQCA_THREADS", threads)
            .args(["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(res.status.success());
        trees.push(tree(&out));
    }
    assert_eq!(trees[0], trees[1]);
}

#[test]
fn seed_override_is_recorded_and_changes_shots() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "noisy.toml", NOISY_SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_config(&cfg, &a, &[]);
    run_config(&cfg, &b, &["--seed", "22"]);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 22);
    assert_eq!(manifest["tool"], "rydqca");
    assert_ne!(fs::read(a.join("populations.csv")).unwrap(), fs::read(b.join("populations.csv")).unwrap());
}

#[test]
fn manifest_hashes_match_files() {
    use sha2::{Digest, Sha256};
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    run_config(&configs().join("ghz_growth.toml"), &out, &[]);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert!(files.len() >= 3);
    for f in files {
        let bytes = fs::read(out.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
    let config = fs::read(out.join("config.toml")).unwrap();
    assert_eq!(manifest["config_sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&config)));
}

#[test]
fn run_compared_with_itself_has_zero_deviation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    run_config(&configs().join("quasiparticle_ideal.toml"), &out, &[]);
    let cmp = compare_runs(&out, &out).unwrap();
    assert!(!cmp.files.is_empty());
    assert_eq!(cmp.max_abs(), 0.0);
    let text = run(&["compare", out.to_str().unwrap(), out.to_str().unwrap(), "--tolerance", "0"]);
    assert!(String::from_utf8_lossy(&text.stdout).contains("max\t0e0"));
}

#[test]
fn strong_blockade_physical_pxp_matches_ideal() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("ideal"), tmp.path().join("physical"));
    run_config(&configs().join("pxp_orbit_ideal_5.toml"), &a, &[]);
    run_config(&configs().join("pxp_orbit_physical.toml"), &b, &[]);
    let cmp = compare_runs(&a, &b).unwrap();
    let pops = cmp.file("populations.csv").unwrap();
    assert!(pops.max_abs() < 0.01, "deviation {}", pops.max_abs());
}

#[test]
fn state_vector_and_clifford_graph_expectations_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("ideal"), tmp.path().join("clifford"));
    run_config(&configs().join("graph_qca_ideal.toml"), &a, &[]);
    run_config(&configs().join("graph_qca_clifford.toml"), &b, &[]);
    let cmp = compare_runs(&a, &b).unwrap();
    let e = cmp.file("expectations.csv").unwrap();
    assert_eq!(e.rows, 6 * 105);
    assert!(e.max_abs() < 1e-9, "deviation {}", e.max_abs());
}

#[test]
fn different_experiments_are_incompatible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("ghz"), tmp.path().join("bell"));
    run_config(&configs().join("ghz_growth.toml"), &a, &[]);
    run_config(&configs().join("bell_ideal.toml"), &b, &[]);
    let out = bin().args(["compare", a.to_str().unwrap(), b.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiments differ"));
}

fn expect_config_error(text: &str, line: usize, needle: &str) {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", text);
    let out = bin().args(["run", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&format!("bad.toml:{line}:")), "{err}");
    assert!(err.contains(needle), "{err}");
}

#[test]
fn invalid_configs_report_the_offending_line() {
    expect_config_error("experiment = \"pxp_orbit\"\nengine = \"ideal\"\nseed = 1\n\n[chain]\nn_sites = 5\nbogus = 2\n", 7, "bogus");
    expect_config_error("experiment = \"ghz_growth\"\nengine = \"physical\"\nseed = 1\n", 2, "does not support");
    expect_config_error("experiment = \"pxp_orbit\"\nengine = \"ideal\"\n\n[chain]\nn_sites = 5\n", 1, "seed");
    expect_config_error(
        "experiment = \"spam_demo\"\nengine = \"ideal\"\nseed = 1\nshots = 0\n[chain]\nn_sites = 4\n",
        4,
        "shots",
    );
    expect_config_error(
        "experiment = \"pxp_orbit\"\nengine = \"ideal\"\nseed = 1\n[chain]\nn_sites = 5\nspacing_um = -1.0\n[schedule]\nn_pulses = 2\n",
        6,
        "spacing",
    );
}

#[test]
fn shot_file_operations() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("spam");
    run_config(&configs().join("spam_demo.toml"), &out, &[]);
    let measured = out.join("shots/measured.shots");
    let text = run(&["spam-correct", measured.to_str().unwrap()]).stdout;
    let path = tmp.path().join("spam.csv");
    fs::write(&path, &text).unwrap();
    let table = Table::read(&path).unwrap();
    let demo = Table::read(&out.join("spam.csv")).unwrap();
    // the stand-alone correction reproduces the pipeline's
    let (x, y) = (table.floats("joint_corrected_p1").unwrap(), demo.floats("corrected_p1").unwrap());
    for (a, b) in x.iter().zip(&y) {
        assert!((a - b).abs() < 1e-12);
    }
    let params = write_config(tmp.path(), "params.toml", "[spam]\npreset = \"perfect\"\n");
    let text = run(&["spam-correct", measured.to_str().unwrap(), params.to_str().unwrap()]).stdout;
    fs::write(&path, &text).unwrap();
    let t = Table::read(&path).unwrap();
    assert_eq!(t.floats("raw_p1").unwrap(), t.floats("corrected_p1").unwrap());

    let qp = tmp.path().join("qp");
    run_config(&configs().join("quasiparticle_ideal.toml"), &qp, &[]);
    let shots = qp.join("shots/step_004.shots");
    let text = String::from_utf8(run(&["detect-qp", shots.to_str().unwrap()]).stdout).unwrap();
    assert!(text.starts_with("shot,q,positions\n"));
    assert_eq!(text.lines().count(), 2001);
    let hist = String::from_utf8(run(&["detect-qp", shots.to_str().unwrap(), "--histogram", "1"]).stdout).unwrap();
    let counts: Vec<u64> = hist.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    // after four pulses the wall has moved one site left of its start
    let peak = counts.iter().enumerate().max_by_key(|(_, c)| **c).unwrap().0 + 1;
    let exact = Table::read(&qp.join("exact_histogram.csv")).unwrap();
    let step4: Vec<(usize, f64)> = exact
        .rows
        .iter()
        .filter(|r| r[0] == "4")
        .map(|r| (r[1].parse().unwrap(), r[2].parse().unwrap()))
        .collect();
    let exact_peak = step4.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
    assert_eq!(peak, exact_peak);
}
