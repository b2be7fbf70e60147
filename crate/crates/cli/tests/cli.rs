mod common;

use common::{geomnet, ok, run_session, snapshot};
use serde_json::Value;
use tempfile::TempDir;

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("valid json")
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let out_a = run_session(a.path());
    let out_b = run_session(b.path());
    assert_eq!(out_a, out_b);
    let (snap_a, snap_b) = (snapshot(a.path()), snapshot(b.path()));
    assert_eq!(snap_a.keys().collect::<Vec<_>>(), snap_b.keys().collect::<Vec<_>>());
    for (path, bytes) in &snap_a {
        assert!(bytes == &snap_b[path], "{path} differs");
    }
    // Rerunning in place rewrites the same bytes.
    run_session(a.path());
    assert_eq!(snapshot(a.path()), snap_a);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        d,
        &["gen-data", "--problem", "gravity", "--train", "5", "--val", "2", "--test", "1", "--N", "8", "--out", "data"],
    );
    ok(d, &["--threads", "1", "train", "--data", "data", "--max-epochs", "4", "--out", "one"]);
    ok(d, &["--threads", "3", "train", "--data", "data", "--max-epochs", "4", "--out", "three"]);
    for file in ["model.json", "history.csv", "report.json"] {
        assert_eq!(
            std::fs::read(d.join("one").join(file)).unwrap(),
            std::fs::read(d.join("three").join(file)).unwrap()
        );
    }
}

#[test]
fn manifests_record_digests_and_seeds() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "gen-data",
            "--problem",
            "gravity",
            "--seed",
            "11",
            "--train",
            "2",
            "--val",
            "1",
            "--test",
            "1",
            "--N",
            "6",
            "--out",
            "data",
        ],
    );
    let m = json(&std::fs::read(d.join("data/run_manifest.json")).unwrap());
    assert_eq!(m["command"], "gen-data");
    assert_eq!(m["seeds"], serde_json::json!([11]));
    let outputs = m["outputs"].as_object().unwrap();
    assert_eq!(outputs.len(), 4);
    for digest in outputs.values() {
        assert_eq!(digest.as_str().unwrap().len(), 64);
    }
    ok(d, &["filters", "--M", "3", "--out", "bank.json"]);
    let side = json(&std::fs::read(d.join("bank.json.run.json")).unwrap());
    assert_eq!(side["flags"]["command"]["command"], "filters");
    assert_eq!(side["flags"]["command"]["M"], 3);
}

#[test]
fn filters_and_counts() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let bank = json(&ok(d, &["--json", "filters", "--M", "3", "--k", "0", "--parity", "-1"]));
    assert_eq!(bank["count"], 0);
    let bank = json(&ok(d, &["--json", "filters", "--M", "5", "--k", "0", "--parity", "-1"]));
    assert_eq!(bank["count"], 1);
    let count = json(&ok(d, &["--json", "count", "--N", "3", "--degree", "1"]));
    assert_eq!(count["closed_form"], "5");
    assert_eq!(count["molien"], "5");
    assert_eq!(count["empirical"]["found"], 5);
    assert_eq!(count["consistent"], true);
    let big = json(&ok(d, &["--json", "count", "--N", "7", "--degree", "3", "--mode", "closed"]));
    assert_eq!(big["closed_form"], "40450");
}

#[test]
fn train_then_eval_agree() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        d,
        &["gen-data", "--problem", "gravity", "--train", "3", "--val", "2", "--test", "2", "--N", "8", "--out", "data"],
    );
    ok(d, &["train", "--data", "data", "--max-epochs", "5", "--out", "run"]);
    let report = json(&std::fs::read(d.join("run/report.json")).unwrap());
    let eval =
        json(&ok(d, &["--json", "eval", "--model-file", "run/model.json", "--data", "data", "--split", "train"]));
    let (a, b) = (report["train_rmse"].as_f64().unwrap(), eval["pooled_rmse"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{a} vs {b}");
    let history = std::fs::read_to_string(d.join("run/history.csv")).unwrap();
    assert!(history.starts_with("epoch,"));
    assert!(history.lines().count() >= 2);
}

#[test]
fn equivariance_check_exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let good = geomnet(d, &["check-equivariance", "--preset", "fig6", "--N", "3", "--trials", "2"]);
    assert_eq!(good.status.code(), Some(0));
    let bad = geomnet(d, &["check-equivariance", "--preset", "gravity-baseline", "--N", "3", "--trials", "2"]);
    assert_eq!(bad.status.code(), Some(1));
    ok(d, &["preset", "--name", "fig6", "--out", "net.json"]);
    assert_eq!(
        geomnet(d, &["check-equivariance", "--net", "net.json", "--N", "3", "--trials", "1"]).status.code(),
        Some(0)
    );
}

#[test]
fn invalid_usage_exits_two() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    for args in [
        &["filters", "--M", "4"][..],
        &["filters", "--parity", "0"],
        &["count", "--N", "4", "--degree", "1"],
        &["bogus"],
        &["gen-data", "--problem", "charge", "--dt", "0", "--out", "x"],
        &["preset", "--name", "nope"],
        &["--threads", "0", "preset", "--name", "fig6"],
        &["check-equivariance", "--preset", "gravity", "--N", "4"],
    ] {
        let out = geomnet(d, args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(geomnet(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn unreadable_inputs_exit_three() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(geomnet(d, &["train", "--data", "missing", "--out", "run"]).status.code(), Some(3));
    std::fs::create_dir(d.join("junk")).unwrap();
    std::fs::write(d.join("junk/manifest.json"), "{not json").unwrap();
    assert_eq!(geomnet(d, &["train", "--data", "junk", "--out", "run"]).status.code(), Some(3));

    // A model whose parameter list does not fit its architecture.
    ok(
        d,
        &["gen-data", "--problem", "gravity", "--train", "1", "--val", "1", "--test", "1", "--N", "5", "--out", "data"],
    );
    let spec: Value = json(&std::fs::read(d.join("data/manifest.json")).unwrap());
    assert_eq!(spec["seed"], 0);
    ok(d, &["preset", "--name", "gravity", "--out", "net.json"]);
    let mut net = json(&std::fs::read(d.join("net.json")).unwrap());
    net["params"] = serde_json::json!([1.0, 2.0]);
    std::fs::write(d.join("model.json"), serde_json::to_string(&net).unwrap()).unwrap();
    let out = geomnet(d, &["eval", "--model-file", "model.json", "--data", "data"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sweep_writes_one_row_per_run() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "sweep",
            "--problem",
            "gravity",
            "--sizes",
            "2,3",
            "--val",
            "2",
            "--test",
            "2",
            "--N",
            "6",
            "--max-epochs",
            "2",
            "--train-seeds",
            "0,1",
            "--out",
            "sw",
        ],
    );
    let csv = std::fs::read_to_string(d.join("sw/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 2);
}
