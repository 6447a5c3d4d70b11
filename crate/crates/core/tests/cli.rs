//! End-to-end runs of the `ews` binary.

use std::path::Path;
use std::process::{Command, Output};

fn ews(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ews"))
        .args(args)
        .env("EWS_WORKERS", "1")
        .output()
        .expect("spawn ews")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 1\ntrain_per_class = 0\n").unwrap();
    let out = dir.path().join("out");
    let o = ews(&["experiment", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("train_per_class"), "{}", stderr(&o));
    assert!(!out.exists(), "nothing should be written for a rejected config");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 1\nout = \"x\"\nlearning_rate = 3\n").unwrap();
    let o = ews(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("learning_rate"), "{}", stderr(&o));
}

#[test]
fn missing_seed_and_out_are_errors() {
    let o = ews(&["experiment", "--out", "/nonexistent/never"]);
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
    let o = ews(&["experiment", "--seed", "1"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("out"), "{}", stderr(&o));
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let cfg = dir.join("small.toml");
    std::fs::write(
        &cfg,
        "seed = 11\nnoise = [\"White\"]\nfeatures = [\"5\"]\nmodels = [\"LRM\"]\n\
         train_per_class = 40\ntest_per_class = 20\nhorizon = 900\n",
    )
    .unwrap();
    cfg
}

#[test]
fn restricted_experiment_writes_one_report_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = ews(&["experiment", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let exp = out.join("experiment");
    let csv = std::fs::read_to_string(exp.join("reports.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2, "{csv}");
    assert!(lines[1].contains("W5L"));
    assert!(exp.join("models/W5L.json").exists());
    assert!(exp.join("features/W5_train.csv").exists());
    assert!(!exp.join("INCOMPLETE").exists());

    let manifest = std::fs::read_to_string(exp.join("manifest.json")).unwrap();
    assert!(!manifest.contains(dir.path().to_str().unwrap()), "manifest leaks absolute paths");

    let reports = ews_core::pipeline::load_reports(&exp.join("reports.json")).unwrap();
    assert_eq!(reports.len(), 1);

    // The feature matrices it wrote feed the MWU command.
    let o = ews(&["mwu-features", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mwu = std::fs::read_to_string(out.join("mwu/W5_train.csv")).unwrap();
    assert_eq!(mwu.lines().count(), 6);

    // Waves of incidence, ending on a decline, give both window labels.
    let series = dir.path().join("waves.csv");
    let mut text = String::from("date,count\n");
    let start = chrono::NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
    for d in 0..330u64 {
        let v = 200.0 * (0.8 * (2.0 * std::f64::consts::PI * d as f64 / 90.0).sin()).exp();
        text.push_str(&format!("{},{}\n", start + chrono::Days::new(d), v.round()));
    }
    std::fs::write(&series, text).unwrap();
    let emp = dir.path().join("emp.toml");
    std::fs::write(
        &emp,
        format!(
            "{}\n[[empirical.sources]]\nname = \"waves\"\npath = \"{}\"\nlabel = \"both\"\nsi_mean = 6.3\nsi_sd = 4.2\n",
            std::fs::read_to_string(&cfg).unwrap(),
            series.display()
        ),
    )
    .unwrap();
    let o = ews(&["classify-empirical", "--config", emp.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let acc = std::fs::read_to_string(out.join("empirical/accuracy.csv")).unwrap();
    for needle in [",T,base,", ",N,base,", ",T,truncated,", ",T,scaled,", ",N,scaled,"] {
        assert!(acc.contains(needle), "missing {needle} in\n{acc}");
    }
    assert!(out.join("empirical/re_waves.csv").exists());
}

#[test]
fn simulate_writes_trajectories_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = ews(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("simulate/trajectories_W.csv")).unwrap();
    assert!(csv.starts_with("replicate_id,t,I"));
    assert!(out.join("simulate/trajectories_W.json").exists());
}

#[test]
fn classify_empirical_without_sources_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let o = ews(&[
        "classify-empirical",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("empirical.sources"), "{}", stderr(&o));
}

#[test]
fn mwu_without_matrices_points_at_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fresh");
    let o = ews(&["mwu-features", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("features"), "{}", stderr(&o));
}

#[test]
fn flags_reject_unknown_values() {
    let o = ews(&["experiment", "--seed", "1", "--out", "x", "--models", "G,Q"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("models"), "{}", stderr(&o));
}
