#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

/// The binary with any `SEMSIM_*` overrides from the calling shell removed.
pub fn semsim(dir: &Path) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_semsim"));
    cmd.current_dir(dir);
    for (key, _) in std::env::vars() {
        if key.starts_with("SEMSIM_") {
            cmd.env_remove(key);
        }
    }
    cmd
}

pub fn run(dir: &Path, args: &[&str]) -> Output {
    semsim(dir).args(args).output().expect("binary runs")
}

pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "semsim {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Ingests a fixture CSV into `<dir>/<stem>.jsonl`.
pub fn ingest(dir: &Path, csv: &str, stem: &str) -> PathBuf {
    let out = dir.join(format!("{stem}.jsonl"));
    ok(
        dir,
        &[
            "ingest",
            "--input",
            fixture(csv).to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
        ],
    );
    out
}
