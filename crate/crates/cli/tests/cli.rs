use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn superharm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superharm"))
        .args(args)
        .current_dir(dir)
        .env_remove("SUPERHARM_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn density_at_one_matches_levy_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let o = superharm(&["density", "--alpha", "1", "--s", "1", "--out", "d"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("0.2196956447"), "{}", stdout(&o));
    let csv = fs::read_to_string(tmp.path().join("d/density.csv")).unwrap();
    assert!(csv.starts_with("# superharm "));
    assert!(csv.lines().nth(1).unwrap().starts_with("t,s,f_t,"));
}

#[test]
fn coeffs_tables_and_exact_identity() {
    let tmp = tempfile::tempdir().unwrap();
    let o = superharm(&["coeffs", "--m", "4", "--q", "5", "--out", "c"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let id = json(&tmp.path().join("c/power_rule.json"));
    let rows = id["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[5][4], "120");
    assert!(rows.iter().all(|r| r[5] == true));
    let ledger = fs::read_to_string(tmp.path().join("c/sign_ledger.csv")).unwrap();
    assert_eq!(ledger.lines().filter(|l| l.ends_with("negative")).count(), 3);
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["eig"],
        &["eig", "--alpha", "1", "--m", "2"],
        &["verify", "--m", "2"],
        &["verify", "--alpha", "0.7"],
        &["eig", "--alpha", "1", "--n", "4"],
        &["mc", "--alpha", "1", "--dt", "0.5"],
        &["kernel", "--alpha", "1.5"],
        &["nonsense"],
    ];
    for args in cases {
        let o = superharm(args, tmp.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    // Rejected before anything is written.
    assert!(!tmp.path().join("superharm-out/config.json").exists());
}

#[test]
fn tolerance_failure_exits_one() {
    // Below the certified boundary the alternating series cancels badly.
    let tmp = tempfile::tempdir().unwrap();
    let o = superharm(&["density", "--alpha", "1", "--s", "0.01"], tmp.path());
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
}

#[test]
fn kernel_agrees_with_fourier() {
    let tmp = tempfile::tempdir().unwrap();
    let o = superharm(&["kernel", "--m", "3", "--t", "1", "--r", "0,1", "--format", "json"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let k = json(&tmp.path().join("superharm-out/kernel.json"));
    assert_eq!(k["columns"][4], "abs_diff");
    assert!(k["rows"].as_array().unwrap().iter().all(|r| r[4].as_f64().unwrap() <= 1e-6));
    assert!(!tmp.path().join("superharm-out/kernel.csv").exists());
}

#[test]
fn eig_classical_anchor() {
    let tmp = tempfile::tempdir().unwrap();
    let o = superharm(&["eig", "--alpha", "2", "--n", "511", "--out", "e"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let e = json(&tmp.path().join("e/eig.json"));
    let lambda = e["lambda_extrapolated"].as_f64().unwrap();
    assert!((lambda / (std::f64::consts::PI.powi(2) / 4.0) - 1.0).abs() < 1e-4);
    assert_eq!(e["n_sequence"], serde_json::json!([127, 255, 511]));
    let phi = fs::read_to_string(tmp.path().join("e/eigenfunction.csv")).unwrap();
    assert_eq!(phi.lines().count(), 2 + 513);
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.toml"), "m = 3\nn = 255\nout = \"from-file\"\nM = 20.0\n").unwrap();
    let o = superharm(&["eig", "--config", "run.toml", "--n", "127"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let c = json(&tmp.path().join("from-file/config.json"));
    assert_eq!(c["config"]["n"], 127);
    assert_eq!(c["config"]["m"], 3);
    assert_eq!(c["config"]["quad"]["split_multiplier"], 20.0);
    // --alpha on the command line replaces the file's m.
    let o = superharm(&["eig", "--config", "run.toml", "--alpha", "1"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let c = json(&tmp.path().join("from-file/config.json"));
    assert_eq!(c["config"]["alpha"], 1.0);

    fs::write(tmp.path().join("bad.toml"), "m = 3\nbogus = 1\n").unwrap();
    let o = superharm(&["eig", "--config", "bad.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn environment_sets_default_output() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_superharm"))
            .args(["coeffs", "--m", "3", "--q", "2"])
            .args(extra)
            .current_dir(tmp.path())
            .env("SUPERHARM_OUT", "env-dir")
            .output()
            .unwrap()
    };
    assert!(run(&[]).status.success());
    assert!(tmp.path().join("env-dir/config.json").exists());
    assert!(run(&["--out", "flag-dir"]).status.success());
    assert!(tmp.path().join("flag-dir/config.json").exists());
}

#[test]
fn verify_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = superharm(&["verify", "--m", "3", "--n", "255", "--out", out], tmp.path());
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    for f in ["report.json", "report.txt"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap());
    }
    let r = json(&tmp.path().join("a/report.json"));
    assert_eq!(r["passed"], true);
    assert_eq!(r["config_hash"], json(&tmp.path().join("a/config.json"))["config_hash"]);
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["anchor"].is_string()));
}

#[test]
fn verify_concavity_path_for_cauchy() {
    let tmp = tempfile::tempdir().unwrap();
    let o = superharm(&["verify", "--alpha", "1", "--n", "255"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("concavity"));
}

#[test]
fn mc_is_seed_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &'static str| ["mc", "--alpha", "1", "--paths", "3000", "--dt", "0.005", "--seed", "4", "--out", out];
    for out in ["a", "b"] {
        let o = superharm(&args(out), tmp.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["survival.csv", "mc.json"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap());
    }
    let mc = json(&tmp.path().join("a/mc.json"));
    assert!(mc["lambda_hat"].as_f64().unwrap() > 0.9 && mc["lambda_hat"].as_f64().unwrap() < 1.3);
}
