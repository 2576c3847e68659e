//! Seeded synthetic data for demonstrations and tests: Gaussian mixtures,
//! shell-structured pairs and drifting two-period panels.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::partition::Partition;
use crate::preprocess::{FeatureTable, VariableKind, VariableSpec};

/// One spherical Gaussian component.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub mean: Vec<f64>,
    pub sd: f64,
    pub size: usize,
}

pub fn ids(n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len().max(3);
    (0..n).map(|i| format!("org{i:0width$}")).collect()
}

pub fn variable_specs(d: usize) -> Vec<VariableSpec> {
    (1..=d)
        .map(|j| VariableSpec {
            name: format!("x{j}"),
            kind: VariableKind::Continuous,
        })
        .collect()
}

/// Draws the components in order and returns the raw (unstandardized) table
/// with the generating labels.
pub fn gaussian_mixture(components: &[Component], seed: u64) -> Result<(FeatureTable, Partition)> {
    let d = components[0].mean.len();
    let n: usize = components.iter().map(|c| c.size).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = DMatrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (c, comp) in components.iter().enumerate() {
        for _ in 0..comp.size {
            for j in 0..d {
                let z: f64 = StandardNormal.sample(&mut rng);
                values[(row, j)] = comp.mean[j] + comp.sd * z;
            }
            labels.push(c);
            row += 1;
        }
    }
    let ids = ids(n);
    let truth = Partition::from_labels(ids.clone(), &labels)?;
    Ok((FeatureTable::new(ids, variable_specs(d), values)?, truth))
}

/// Two clusters sharing a centre: a dense core (sd 1) inside a sparse shell (sd `spread`).
pub fn shell_pair(n_each: usize, d: usize, spread: f64, seed: u64) -> Result<(FeatureTable, Partition)> {
    gaussian_mixture(
        &[
            Component { mean: vec![0.0; d], sd: 1.0, size: n_each },
            Component { mean: vec![0.0; d], sd: spread, size: n_each },
        ],
        seed,
    )
}

fn axis_mean(c: usize, d: usize, separation: f64) -> Vec<f64> {
    let mut mean = vec![0.0; d];
    if c > 0 {
        mean[(c - 1) % d] = separation * (1 + (c - 1) / d) as f64;
    }
    mean
}

/// Spherical clusters centred at the origin and at `separation` along successive axes.
pub fn separated_clusters(sizes: &[usize], d: usize, separation: f64, sd: f64, seed: u64) -> Result<(FeatureTable, Partition)> {
    let components: Vec<Component> = sizes
        .iter()
        .enumerate()
        .map(|(c, &size)| Component {
            mean: axis_mean(c, d, separation),
            sd,
            size,
        })
        .collect();
    gaussian_mixture(&components, seed)
}

/// Two periods of the same organisations laid out as in [`separated_clusters`].
/// In the second period the first `moved` members of cluster 1 are drawn
/// from cluster 2's generator; everyone else gets fresh noise around their
/// own cluster's mean.
pub fn drifting_panel(
    sizes: &[usize],
    d: usize,
    separation: f64,
    sd: f64,
    moved: usize,
    seed: u64,
) -> Result<(FeatureTable, FeatureTable, Partition)> {
    let (before, truth) = separated_clusters(sizes, d, separation, sd, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_D21F_7000_0001);
    let mut values = DMatrix::zeros(before.n(), d);
    for i in 0..before.n() {
        let c = truth.label(i) - 1;
        let source = if c == 0 && i < moved { 1 } else { c };
        let mean = axis_mean(source, d, separation);
        for j in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            values[(i, j)] = mean[j] + sd * z;
        }
    }
    let after = FeatureTable::new(before.ids().to_vec(), variable_specs(d), values)?;
    Ok((before, after, truth))
}
