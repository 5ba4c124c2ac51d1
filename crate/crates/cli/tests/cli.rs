use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use nbundle_cli::output::{sha256_hex, OUT_DIR_ENV};
use nbundle_core::config::{preset, RunConfig, PRESET_NAMES};

const SMALL: &str = r#"
[model]
auto_lambda_N = 2
kappa = 0.01
gamma = 0.01
n_max = 6
bundle_N = 2

[pulses]
amp = 0.12
sigma = 40.0
t1 = 250.0
t2 = 190.0
period = 1000.0
count = 1

[solver]
t_end = 600.0
dt = 10.0

[run]
pipeline = "both"
trajectories = 6
seed = 5
"#;

fn nbundle(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nbundle"));
    cmd.args(args).env_remove(OUT_DIR_ENV);
    if let Some(dir) = env_out {
        cmd.env(OUT_DIR_ENV, dir);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

/// Every file except the manifest, which records wall time.
fn contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        if p.is_file() && name != "manifest.json" {
            out.insert(name, std::fs::read(&p).unwrap());
        }
    }
    out
}

/// Sidecars echo the command line, which names the output directory.
fn without_command(files: &BTreeMap<String, Vec<u8>>) -> BTreeMap<String, Vec<u8>> {
    files
        .iter()
        .map(|(k, v)| {
            let mut v = v.clone();
            if k.ends_with(".json") {
                let mut j: serde_json::Value = serde_json::from_slice(&v).unwrap();
                if let Some(obj) = j.as_object_mut() {
                    obj.remove("command");
                }
                v = serde_json::to_vec(&j).unwrap();
            }
            (k.clone(), v)
        })
        .collect()
}

#[test]
fn lambda_prints_six_decimals() {
    let o = nbundle(&["lambda", "2"], None);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "0.765367");
    let o = nbundle(&["lambda", "0"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_config_lists_every_missing_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "empty.toml", "");
    let o = nbundle(&["run", "--config", &cfg, "--out", &dir.path().join("o").to_string_lossy()], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    for field in ["model.kappa", "model.n_max", "pulses.sigma", "pulses.count", "solver.t_end"] {
        assert!(err.contains(field), "{field} missing from: {err}");
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_string_lossy();
    let missing = dir.path().join("nope.toml");
    assert_eq!(nbundle(&["run", "--config", &missing.to_string_lossy(), "--out", &out], None).status.code(), Some(2));
    assert_eq!(nbundle(&["run", "--preset", "fig9", "--out", &out], None).status.code(), Some(2));
    assert_eq!(nbundle(&["reproduce", "7", "--out", &out], None).status.code(), Some(2));
    let typo = write_config(dir.path(), "typo.toml", &SMALL.replace("kappa", "kapa"));
    let o = nbundle(&["run", "--config", &typo, "--out", &out], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kapa"));
}

#[test]
fn invariant_failure_exits_3_and_cleans_up() {
    let dir = tempfile::tempdir().unwrap();
    let sloppy = SMALL.replace("dt = 10.0", "dt = 10.0\nrel_tol = 0.5\nabs_tol = 0.5\nmax_step = 200.0");
    let cfg = write_config(dir.path(), "sloppy.toml", &sloppy);
    let out = dir.path().join("o");
    let o = nbundle(&["run", "--config", &cfg, "--out", &out.to_string_lossy()], None);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(contents(&out).is_empty());
}

#[test]
fn failed_reproduce_check_exits_4_and_keeps_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = nbundle(&["reproduce", "1d", "--out", &dir.path().to_string_lossy()], None);
    assert_eq!(o.status.code(), Some(4));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("FAIL transfer.ground_chain")));
    assert!(stdout.lines().any(|l| l.starts_with("PASS transfer.final")));
    assert!(dir.path().join("fig1d/fig1d/populations.csv").exists());
    assert!(dir.path().join("fig1d/manifest.json").exists());
}

#[test]
fn reruns_reproduce_outputs_and_manifest_matches() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = nbundle(&["run", "--config", &cfg, "--out", &out.to_string_lossy()], None);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ca, cb) = (contents(&a), contents(&b));
    assert!(ca.contains_key("populations.csv") && ca.contains_key("trajectories.jsonl"));
    assert!(ca.contains_key("populations.svg") && ca.contains_key("populations.json"));
    assert_eq!(without_command(&ca), without_command(&cb));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    let listed = manifest["outputs"].as_array().unwrap();
    assert_eq!(listed.len(), ca.len());
    for entry in listed {
        let bytes = &ca[entry["path"].as_str().unwrap()];
        assert_eq!(entry["sha256"].as_str().unwrap(), sha256_hex(bytes));
    }
}

#[test]
fn seed_and_threads_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let run = |out: &str, extra: &[&str]| {
        let path = dir.path().join(out);
        let mut args = vec!["run", "--config", &cfg, "--out"];
        let p = path.to_string_lossy().into_owned();
        args.push(&p);
        args.extend_from_slice(extra);
        let o = nbundle(&args, None);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        contents(&path)
    };
    let one = run("one", &["--threads", "1"]);
    let three = run("three", &["--threads", "3"]);
    assert_eq!(without_command(&one), without_command(&three));
    let other = run("other", &["--seed", "6", "--traj", "3"]);
    assert_ne!(one["trajectories.jsonl"], other["trajectories.jsonl"]);
    assert_eq!(other["trajectories.jsonl"].iter().filter(|&&b| b == b'\n').count(), 3);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let env_dir = dir.path().join("from-env");
    let o = nbundle(&["run", "--config", &cfg, "--traj", "1"], Some(&env_dir));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(env_dir.join("manifest.json").exists());
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "small.toml",
        &SMALL.replace("pipeline = \"both\"", "pipeline = \"master\""),
    );
    let out = dir.path().join("sweep");
    let o = nbundle(
        &["sweep", "--config", &cfg, "--param", "model.kappa", "--values", "0.005,0.02", "--out", &out.to_string_lossy()],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("model.kappa,max_P_gN"));
    let max = |r: &str| r.split(',').nth(1).unwrap().parse::<f64>().unwrap();
    assert!(max(rows[1]) > max(rows[2]));

    let o = nbundle(
        &["sweep", "--config", &cfg, "--param", "model.colour", "--values", "1", "--out", &out.to_string_lossy()],
        None,
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_preset_files_match_builtins() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets");
    for name in PRESET_NAMES {
        let text = std::fs::read_to_string(dir.join(format!("{name}.toml"))).unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), preset(name).unwrap(), "{name}");
    }
}
