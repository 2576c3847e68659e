#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use peergroup_core::preprocess::FeatureTable;
use peergroup_core::synth::{drifting_panel, separated_clusters};

pub fn peergroup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peergroup"))
        .args(args)
        .env_remove("PEERGROUP_RUN_DIR")
        .output()
        .expect("binary runs")
}

pub fn ok(args: &[&str]) -> String {
    let out = peergroup(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Runs a command expected to fail; returns (exit code, stderr).
pub fn fails(args: &[&str]) -> (i32, String) {
    let out = peergroup(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    (out.status.code().unwrap(), String::from_utf8(out.stderr).unwrap())
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn write_table(path: &Path, table: &FeatureTable) {
    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    fs::write(path, buf).unwrap();
}

pub fn write_kinds(path: &Path, names: &[String]) {
    let text: String = names.iter().map(|n| format!("{n}=continuous\n")).collect();
    fs::write(path, text).unwrap();
}

/// Raw data and kinds file for a separated-cluster design; returns their paths.
pub fn dataset(dir: &Path, sizes: &[usize], d: usize, separation: f64, seed: u64) -> (PathBuf, PathBuf) {
    let (raw, _) = separated_clusters(sizes, d, separation, 1.0, seed).unwrap();
    let (data, kinds) = (dir.join("data.csv"), dir.join("kinds.txt"));
    write_table(&data, &raw);
    write_kinds(&kinds, &raw.names());
    (data, kinds)
}

/// Two periods of raw data with 12 members of the first cluster drifting.
pub fn panel(dir: &Path, seed: u64) -> [(PathBuf, PathBuf); 2] {
    let (a, b, _) = drifting_panel(&[40, 40, 40], 3, 5.0, 1.0, 12, seed).unwrap();
    [("period1", a), ("period2", b)].map(|(name, t)| {
        let (data, kinds) = (dir.join(format!("{name}.csv")), dir.join("kinds.txt"));
        write_table(&data, &t);
        write_kinds(&kinds, &t.names());
        (data, kinds)
    })
}

pub fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Cluster labels from an `id,cluster` file, in file order.
pub fn labels(path: &Path) -> Vec<String> {
    read(path).lines().skip(1).map(|l| l.split(',').nth(1).unwrap().to_string()).collect()
}
