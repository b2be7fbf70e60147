//! Helpers for driving the `geomnet` binary from tests.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

pub fn geomnet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geomnet"))
        .args(args)
        .current_dir(dir)
        .env_remove("GEOMNET_THREADS")
        .output()
        .expect("spawn geomnet")
}

/// Runs and insists on exit code 0, returning stdout.
pub fn ok(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = geomnet(dir, args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("read dir") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).expect("prefix").to_string_lossy().into_owned();
                files.insert(rel, std::fs::read(&path).expect("read"));
            }
        }
    }
    files
}

/// One invocation of every subcommand, using paths relative to the working
/// directory so two directories produce identical manifests.
pub const SESSION: &[&[&str]] = &[
    &["filters", "--d", "2", "--M", "5", "--k", "1", "--parity", "-1", "--out", "bank.json"],
    &["count", "--N", "3", "--degree", "2", "--out", "count.json"],
    &["check-equivariance", "--preset", "gravity", "--N", "3", "--trials", "2", "--out", "check.json"],
    &["gen-data", "--problem", "gravity", "--train", "4", "--val", "2", "--test", "2", "--N", "8", "--out", "data"],
    &["gen-data", "--problem", "charge", "--train", "2", "--val", "1", "--test", "1", "--N", "8", "--out", "cdata"],
    &["train", "--data", "data", "--max-epochs", "3", "--out", "run"],
    &["train", "--data", "data", "--model", "baseline", "--max-epochs", "3", "--out", "base"],
    &["eval", "--model-file", "run/model.json", "--data", "data", "--out", "eval.json"],
    &["preset", "--name", "charge", "--out", "charge.json"],
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
        "8",
        "--max-epochs",
        "2",
        "--out",
        "sweep",
    ],
];

/// Runs [`SESSION`] in `dir` with `--json`, returning every stdout.
pub fn run_session(dir: &Path) -> Vec<Vec<u8>> {
    SESSION
        .iter()
        .map(|args| {
            let mut full = vec!["--json"];
            full.extend_from_slice(args);
            ok(dir, &full)
        })
        .collect()
}
