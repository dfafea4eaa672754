//! Runs every subcommand twice in separate directories and compares outputs.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cfchanpred")
}

fn run(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(bin()).current_dir(dir).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).replace(&dir.display().to_string(), "<dir>"))
}

/// Every command of a small end-to-end session; returns the stdout of each.
fn session(dir: &Path) -> Result<Vec<String>, String> {
    let steps: [&[&str]; 9] = [
        &["generate", "--m", "3", "--l", "4", "--t-total", "60", "--seed", "7", "--out", "data.csif"],
        &["analyze", "--data", "data.csif", "--max-lag", "10", "--out", "analysis"],
        &["train", "--data", "data.csif", "--model", "proposed", "--epochs", "2", "--batch", "16", "--t", "4", "--k", "2", "--d-model", "8", "--heads", "2", "--seed", "3", "--out", "model.ckpt"],
        &["evaluate", "--data", "data.csif", "--checkpoint", "model.ckpt", "--out", "eval"],
        &["predict", "--data", "data.csif", "--checkpoint", "model.ckpt", "--start", "5", "--out", "pred.csv"],
        &["complexity", "--m", "4", "--l", "4", "--t", "4", "--k", "2", "--d-model", "8", "--heads", "2", "--out", "complexity.csv"],
        &["generate", "--m", "1", "--l", "16", "--t-total", "20", "--seed", "2", "--out", "mixed.csif"],
        &["partition", "--data", "mixed.csif", "--tau-th", "8", "--sources", "2", "--out", "separated.csif"],
        &["info", "--data", "data.csif", "--checkpoint", "model.ckpt"],
    ];
    steps.iter().map(|s| run(dir, s)).collect()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

/// `Ok(n_files)` when two sessions produce identical files and stdout.
pub fn determinism_check() -> Result<usize, String> {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (sa, sb) = (session(a.path())?, session(b.path())?);
    for (i, (x, y)) in sa.iter().zip(&sb).enumerate() {
        if x != y {
            return Err(format!("stdout of step {i} differs"));
        }
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    if fa != fb {
        return Err(format!("file sets differ: {fa:?} vs {fb:?}"));
    }
    for f in &fa {
        if std::fs::read(a.path().join(f)).unwrap() != std::fs::read(b.path().join(f)).unwrap() {
            return Err(format!("{} differs", f.display()));
        }
    }
    Ok(fa.len())
}

/// Exit status of one invocation in a scratch directory.
pub fn exit_code(args: &[&str]) -> Option<i32> {
    let dir = tempfile::tempdir().unwrap();
    Command::new(bin()).current_dir(dir.path()).args(args).output().unwrap().status.code()
}
