//! Readers for the files the commands exchange.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use peergroup_core::error::{Error, Result};
use peergroup_core::matrix::DissimilarityMatrix;
use peergroup_core::partition::Partition;
use peergroup_core::preprocess::{FeatureTable, PercentileTable, VariableKind};

use crate::manifest::cannot_read;

fn bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| cannot_read(path, e))
}

fn in_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// A numeric table whose every column is read as continuous.
pub fn read_table(path: &Path) -> Result<FeatureTable> {
    let raw = bytes(path)?;
    let mut r = csv::Reader::from_reader(raw.as_slice());
    let kinds: HashMap<String, VariableKind> = r
        .headers()?
        .iter()
        .skip(1)
        .map(|h| (h.trim().to_string(), VariableKind::Continuous))
        .collect();
    in_file(path, FeatureTable::read_csv(raw.as_slice(), &kinds))
}

/// A table written by `preprocess`, checked to be standardized.
pub fn read_standardized(path: &Path) -> Result<FeatureTable> {
    read_table(path)?.assume_standardized(1e-6).map_err(|_| {
        Error::InvalidInput(format!(
            "`{}` is not standardized; pass the table written by `preprocess`",
            path.display()
        ))
    })
}

pub fn read_dissimilarity(path: &Path) -> Result<DissimilarityMatrix> {
    in_file(path, DissimilarityMatrix::read_csv(bytes(path)?.as_slice()))
}

pub fn read_partition(path: &Path) -> Result<Partition> {
    in_file(path, Partition::read_csv(bytes(path)?.as_slice()))
}

pub fn read_percentiles(path: &Path) -> Result<PercentileTable> {
    in_file(path, PercentileTable::read_csv(bytes(path)?.as_slice()))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| cannot_read(path, e))
}

/// Same grouping over `ids`, which must be exactly the partition's ids.
pub fn align(partition: &Partition, ids: &[String], what: &str) -> Result<Partition> {
    partition
        .reindexed(ids)
        .map_err(|e| Error::IdMismatch(format!("the partition does not match the {what}: {e}")))
}

pub fn csv_bytes(rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Invariant(e.to_string()))
}

pub fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}
