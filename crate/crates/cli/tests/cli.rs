use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn hbcsense(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hbcsense"))
        .args(args)
        .env("HBCSENSE_OUT_DIR", out)
        .output()
        .expect("run hbcsense")
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn cfg(name: &str) -> String {
    configs().join(name).display().to_string()
}

#[test]
fn leg_louo_has_one_fold_per_user_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = cfg("leg_louo.json");
    ok(&hbcsense(a.path(), &["evaluate", "--config", &c]));
    ok(&hbcsense(b.path(), &["evaluate", "--config", &c]));
    let r = json(&a.path().join("eval_report.json"));
    assert_eq!(r["folds"].as_array().unwrap().len(), 5);
    assert_eq!(r["classes"].as_array().unwrap().len(), 7);
    assert!(r["macro_f"].as_f64().unwrap() > 0.5);
    assert_eq!(
        std::fs::read(a.path().join("eval_report.json")).unwrap(),
        std::fs::read(b.path().join("eval_report.json")).unwrap()
    );
    let prov = json(&a.path().join("provenance/evaluate.json"));
    assert_eq!(prov["seed"], 7);
    assert_eq!(prov["config_hash"], r["config_hash"]);
    assert!(prov["timestamp"].as_u64().unwrap() > 0);
}

#[test]
fn count_reports_sources_and_fusions() {
    let out = tempfile::tempdir().unwrap();
    ok(&hbcsense(out.path(), &["count", "--config", &cfg("gym_count.json")]));
    let r = json(&out.path().join("count_report.json"));
    let names: Vec<&str> = r["summary"].as_array().unwrap().iter().map(|s| s["source"].as_str().unwrap()).collect();
    for want in ["acc_mag", "gyro_mag", "cap", "imu_mean", "closest_two_mean"] {
        assert!(names.contains(&want), "{names:?}");
    }
    assert_eq!(r["segments"].as_array().unwrap().len(), 3 * 12 - 3);
    ok(&hbcsense(out.path(), &["report", "--config", &cfg("gym_count.json")]));
    let svg = std::fs::read_to_string(out.path().join("count_report_accuracy.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn malformed_config_exits_2_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(
        &p,
        r#"{"seed": 1, "label_set": "LEG7", "data": {"dir": "."}, "windowing": {"window_seconds": 4, "step_secs": 2}}"#,
    )
    .unwrap();
    let o = hbcsense(dir.path(), &["evaluate", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["category"], "config");
    assert!(err["error"]["key"].as_str().unwrap().starts_with("windowing"), "{err}");
    assert!(err["error"]["message"].as_str().unwrap().contains("step_secs"));

    std::fs::write(&p, "{ not json").unwrap();
    assert_eq!(hbcsense(dir.path(), &["count", "--config", p.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn missing_data_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    std::fs::write(&p, r#"{"seed": 1, "label_set": "LEG7", "data": {"dir": "nowhere"}}"#).unwrap();
    let o = hbcsense(dir.path(), &["count", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn simulate_then_featurize_and_train_from_disk() {
    let out = tempfile::tempdir().unwrap();
    ok(&hbcsense(out.path(), &["simulate", "--config", &cfg("leg_scripts.json"), "--seed", "3"]));
    let csv = out.path().join("sessions/demo-s00.csv");
    assert!(csv.exists());
    let sidecar = json(&out.path().join("sessions/demo-s00.json"));
    assert_eq!(sidecar["repetitions"].as_array().unwrap().len(), 2);

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("disk.json");
    let sessions = out.path().join("sessions");
    std::fs::write(
        &p,
        format!(
            r#"{{"seed": 2, "label_set": "LEG7", "data": {{"dir": {:?}}}, "features": {{"modality": "hbc"}}}}"#,
            sessions.display().to_string()
        ),
    )
    .unwrap();
    let feats = tempfile::tempdir().unwrap();
    ok(&hbcsense(feats.path(), &["featurize", "--config", p.to_str().unwrap()]));
    let table = std::fs::read_to_string(feats.path().join("features.csv")).unwrap();
    let header = table.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 4 + 18);
    ok(&hbcsense(feats.path(), &["train", "--config", p.to_str().unwrap()]));
    let model = json(&feats.path().join("model.json"));
    assert_eq!(model["model"]["classes"].as_array().unwrap().len(), 7);
    assert_eq!(model["feature_names"].as_array().unwrap().len(), 18);

    ok(&hbcsense(feats.path(), &["count", "--config", p.to_str().unwrap()]));
    let r = json(&feats.path().join("count_report.json"));
    let seg = &r["segments"][0];
    assert_eq!(seg["real"], 10);
    assert_eq!(seg["sources"].as_array().unwrap().iter().find(|s| s["source"] == "cap").unwrap()["count"], 10);
}

#[test]
fn pair_eval_writes_pairs_and_report() {
    let out = tempfile::tempdir().unwrap();
    let c = cfg("collab_pair.json");
    ok(&hbcsense(out.path(), &["pair-eval", "--config", &c]));
    let pairs = json(&out.path().join("pairs.json"));
    assert_eq!(pairs.as_array().unwrap().len(), 1 + 1 + 3);
    let r = json(&out.path().join("pair_report.json"));
    assert_eq!(r["classes"].as_array().unwrap().len(), 4);
    assert_eq!(r["folds"].as_array().unwrap().len(), 3);
    ok(&hbcsense(out.path(), &["evaluate", "--config", &c]));
    let single = json(&out.path().join("eval_report.json"));
    assert_eq!(single["classes"].as_array().unwrap().len(), 6);
    ok(&hbcsense(out.path(), &["report", "--config", &c]));
    assert!(out.path().join("pair_report_confusion.svg").exists());
    assert!(out.path().join("eval_report_confusion.svg").exists());
}

#[test]
fn grid_search_and_random_split_flag_optimism() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.json");
    std::fs::write(
        &p,
        r#"{"seed": 4, "label_set": "LEG7",
            "data": {"simulate": {"label_set": "LEG7", "n_users": 2, "sessions_per_user": 1, "reps_min": 10, "reps_max": 12}},
            "balance": {"k_neighbors": 3},
            "eval": {"scheme": {"kind": "random_split"}, "grid": {"n_trees": [5, 10], "max_depth": [3, 8]}}}"#,
    )
    .unwrap();
    ok(&hbcsense(dir.path(), &["grid-search", "--config", p.to_str().unwrap()]));
    let g = json(&dir.path().join("grid.json"));
    assert_eq!(g["entries"].as_array().unwrap().len(), 4);
    ok(&hbcsense(dir.path(), &["evaluate", "--config", p.to_str().unwrap()]));
    let r = json(&dir.path().join("eval_report.json"));
    assert_eq!(r["optimistic"], true);
    assert_eq!(r["folds"].as_array().unwrap().len(), 3);
}

#[test]
fn simulate_requires_seed_flag() {
    let out = tempfile::tempdir().unwrap();
    let o = hbcsense(out.path(), &["simulate", "--config", &cfg("leg_scripts.json")]);
    assert_eq!(o.status.code(), Some(2));
}
