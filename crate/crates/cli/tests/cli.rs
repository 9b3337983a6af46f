use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn scal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scal"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn toy_run_prints_metrics() {
    let out = scal(&[
        "--dataset",
        "two_moons",
        "--n",
        "200",
        "--landmarks",
        "30",
        "--arch",
        "64-32-2-32-64",
        "--epochs",
        "2",
    ]);
    let v = json(&out);
    assert_eq!(v["dataset"], "two_moons");
    assert_eq!(v["method"], "scal_r");
    assert_eq!(v["n"], 200);
    assert_eq!(v["p"], 30);
    assert_eq!(v["loss_history"].as_array().unwrap().len(), 2);
}

#[test]
fn rings_default_to_three_clusters() {
    let v = json(&scal(&[
        "--dataset",
        "rings",
        "--n",
        "150",
        "--method",
        "kmeans",
    ]));
    assert_eq!(v["k"], 3);
    assert!(v["wall_times"]["train"].is_null());
}

#[test]
fn out_dir_receives_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = scal(&[
        "--dataset",
        "two_circles",
        "--n",
        "120",
        "--landmarks",
        "20",
        "--epochs",
        "1",
        "--method",
        "scal_k",
        "--out-dir",
        d,
        "--dump-matrices",
    ]);
    json(&out);
    for name in [
        "labels.csv",
        "metrics.json",
        "points.csv",
        "w.lspc",
        "s.lspc",
        "model.laen",
    ] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let labels = fs::read_to_string(dir.path().join("labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 121);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"dataset": {"kind": "synthetic", "shape": "moon_circle", "n": 100}, "method": "exact", "landmarks": 10, "seed": 4}"#,
    )
    .unwrap();
    let base = json(&scal(&["--config", cfg.to_str().unwrap()]));
    assert_eq!(base["method"], "exact");
    assert_eq!(base["seed"], 4);
    assert_eq!(base["n"], 100);

    let v = json(&scal(&[
        "--config",
        cfg.to_str().unwrap(),
        "--method",
        "kmeans",
        "--seed",
        "9",
        "--n",
        "80",
    ]));
    assert_eq!(v["method"], "kmeans");
    assert_eq!(v["seed"], 9);
    assert_eq!(v["n"], 80);
    assert_eq!(v["dataset"], "moon_circle");
}

#[test]
fn csv_input_is_clustered() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pts.csv");
    let mut text = String::from("x,y,label\n");
    for i in 0..40 {
        let off = if i < 20 { 0.0 } else { 10.0 };
        text.push_str(&format!(
            "{},{},{}\n",
            off + (i % 5) as f64 * 0.1,
            (i % 7) as f64 * 0.1,
            i / 20
        ));
    }
    fs::write(&path, text).unwrap();
    let v = json(&scal(&[
        "--dataset",
        "csv",
        "--csv-path",
        path.to_str().unwrap(),
        "--label-column",
        "2",
        "--method",
        "kmeans",
    ]));
    assert_eq!(v["purity"], 1.0);
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let out = scal(&[
        "--dataset",
        "two_moons",
        "--n",
        "150",
        "--sweep",
        "10,20",
        "--repeats",
        "2",
        "--epochs",
        "1",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().skip(1).all(|l| l.contains(",ok,")));
}

#[test]
fn scaling_reports_each_size() {
    let out = scal(&[
        "--scaling",
        "300,600",
        "--landmarks",
        "20",
        "--repeats",
        "1",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("n,p,repeat,degree,scale,epoch,total")
    );
    assert_eq!(text.lines().count(), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("r^2"));
}

#[test]
fn bad_input_fails_cleanly() {
    let out = scal(&["--dataset", "two_moons", "--n", "50", "--landmarks", "60"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("landmarks"));

    let out = scal(&["--dataset", "csv"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--csv-path"));

    let out = scal(&[
        "--dataset",
        "two_moons",
        "--n",
        "50",
        "--method",
        "exact",
        "--clusters",
        "2",
        "--config",
        "/nonexistent.json",
    ]);
    assert!(!out.status.success());

    assert!(!scal(&["--dataset", "spiral"]).status.success());
}
