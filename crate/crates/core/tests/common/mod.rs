#![allow(dead_code)]

use nalgebra::DMatrix;
use peergroup_core::matrix::{DissimilarityKind, DissimilarityMatrix};
use peergroup_core::partition::Partition;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("o{i:03}")).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Integer-valued entries, so sums of any subset are exact in f64.
pub fn integer_matrix(n: usize, seed: u64) -> DissimilarityMatrix {
    let mut r = rng(seed);
    DissimilarityMatrix::from_fn(ids(n), DissimilarityKind::Metric, |_, _| r.random_range(1..=1000) as f64).unwrap()
}

pub fn uniform_matrix(n: usize, seed: u64) -> DissimilarityMatrix {
    let mut r = rng(seed);
    DissimilarityMatrix::from_fn(ids(n), DissimilarityKind::Metric, |_, _| r.random::<f64>() + 1e-3).unwrap()
}

pub fn random_points(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    DMatrix::from_fn(n, d, |_, _| r.random_range(-5.0..5.0))
}

/// Applies `order` to the rows and columns: entry `(a, b)` of the result is
/// entry `(order[a], order[b])` of `d`, ids included.
pub fn permuted(d: &DissimilarityMatrix, order: &[usize]) -> DissimilarityMatrix {
    let ids = order.iter().map(|&i| d.ids()[i].clone()).collect();
    DissimilarityMatrix::from_fn(ids, d.kind(), |a, b| d.get(order[a], order[b])).unwrap()
}

pub fn random_partition(n: usize, k: usize, seed: u64) -> Partition {
    let mut r = rng(seed);
    let raw: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
    Partition::from_labels(ids(n), &raw).unwrap()
}
