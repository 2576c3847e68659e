use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::preprocess::FeatureTable;
use crate::stats::spearman;

/// Forest size schedule and randomisation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub initial_trees: usize,
    pub max_trees: usize,
    /// Half-forest rank correlation at which growth stops.
    pub stability: f64,
    pub seed: u64,
    /// Candidate variables per split; `floor(sqrt(d))` when `None`.
    pub mtry: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            initial_trees: 100,
            max_trees: 6_400,
            stability: 0.9,
            seed: 1,
            mtry: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    /// Variables in table order with their mean decrease in Gini impurity.
    pub variables: Vec<String>,
    pub importance: Vec<f64>,
    pub trees: usize,
    /// Spearman correlation between the two half-forests' importances.
    pub stability: Option<f64>,
    /// False when the tree ceiling was reached before the threshold.
    pub stable: bool,
}

impl ImportanceReport {
    pub const MEASURE: &'static str = "mean decrease in Gini impurity";

    /// Variables by decreasing importance; ties keep table order.
    pub fn ranking(&self) -> Vec<(String, f64)> {
        let mut order: Vec<usize> = (0..self.variables.len()).collect();
        order.sort_by(|&a, &b| self.importance[b].total_cmp(&self.importance[a]).then(a.cmp(&b)));
        order
            .into_iter()
            .map(|i| (self.variables[i].clone(), self.importance[i]))
            .collect()
    }

    /// 1-based rank of `variable`.
    pub fn rank_of(&self, variable: &str) -> Option<usize> {
        self.ranking().iter().position(|(v, _)| v == variable).map(|r| r + 1)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "importance: {}\ntrees: {}\nhalf-forest spearman: {}\nstable: {}\n",
            Self::MEASURE,
            self.trees,
            self.stability.map(|v| format!("{v:.4}")).unwrap_or_else(|| "undefined".into()),
            self.stable
        );
        for (r, (v, imp)) in self.ranking().iter().enumerate() {
            s.push_str(&format!("{:>3}  {v}  {imp:.6}\n", r + 1));
        }
        s
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Poisson(1) bootstrap multiplicity for one observation in one tree.
/// Keyed on the id rather than the row, so row order does not matter.
fn bootstrap_weight(tree_seed: u64, id: &str) -> u32 {
    let u = (splitmix(tree_seed ^ fnv1a(id)) >> 11) as f64 / (1u64 << 53) as f64;
    let mut k = 0;
    let mut p = (-1.0f64).exp();
    let mut cdf = p;
    while u > cdf && k < 20 {
        k += 1;
        p /= k as f64;
        cdf += p;
    }
    k
}

struct TreeData<'a> {
    x: &'a nalgebra::DMatrix<f64>,
    y: &'a [usize],
    w: Vec<u32>,
    classes: usize,
    mtry: usize,
}

fn gini_mass(counts: &[f64]) -> (f64, f64) {
    let total: f64 = counts.iter().sum();
    if total == 0.0 {
        return (0.0, 0.0);
    }
    let sq: f64 = counts.iter().map(|c| c * c).sum();
    (total, total - sq / total)
}

/// Grows one unpruned tree and returns its per-variable impurity decrease,
/// normalised by the tree's bootstrap size.
fn grow_tree(data: &TreeData, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = data.x.ncols();
    let mut importance = vec![0.0; d];
    let root: Vec<usize> = (0..data.y.len()).filter(|&i| data.w[i] > 0).collect();
    let total: f64 = root.iter().map(|&i| data.w[i] as f64).sum();
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        let mut counts = vec![0.0; data.classes];
        for &i in &node {
            counts[data.y[i]] += data.w[i] as f64;
        }
        let (mass, impurity) = gini_mass(&counts);
        if impurity <= 1e-12 || mass < 2.0 {
            continue;
        }
        let mut best: Option<(f64, usize, f64)> = None;
        for var in sample(rng, d, data.mtry.min(d)).into_iter() {
            let mut sorted = node.clone();
            sorted.sort_by(|&a, &b| data.x[(a, var)].total_cmp(&data.x[(b, var)]));
            let mut left = vec![0.0; data.classes];
            for pos in 0..sorted.len() - 1 {
                let i = sorted[pos];
                left[data.y[i]] += data.w[i] as f64;
                let (here, next) = (data.x[(i, var)], data.x[(sorted[pos + 1], var)]);
                if here == next {
                    continue;
                }
                let right: Vec<f64> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
                let gain = impurity - gini_mass(&left).1 - gini_mass(&right).1;
                let threshold = 0.5 * (here + next);
                if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, var, threshold));
                }
            }
        }
        let Some((gain, var, threshold)) = best else { continue };
        importance[var] += gain;
        let (l, r): (Vec<usize>, Vec<usize>) = node.iter().partition(|&&i| data.x[(i, var)] <= threshold);
        stack.push(r);
        stack.push(l);
    }
    if total > 0.0 {
        for v in &mut importance {
            *v /= total;
        }
    }
    importance
}

fn average(trees: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for t in trees {
        for (o, v) in out.iter_mut().zip(t) {
            *o += v;
        }
    }
    let m = trees.len().max(1) as f64;
    out.iter_mut().for_each(|v| *v /= m);
    out
}

/// Random-forest importance of each variable for predicting cluster labels.
/// The forest doubles in size until two halves agree on the ranking.
pub fn rf_importance(table: &FeatureTable, labels: &Partition, config: &ForestConfig) -> Result<ImportanceReport> {
    let labels = labels.reindexed(table.ids())?;
    if labels.k() < 2 {
        return Err(Error::InvalidInput("importance needs at least 2 clusters".into()));
    }
    if labels.sizes().iter().any(|&s| s < 2) {
        return Err(Error::InvalidInput("every cluster needs at least 2 members for importance".into()));
    }
    if config.initial_trees < 2 || config.max_trees < config.initial_trees {
        return Err(Error::Config("forest sizes must satisfy 2 <= initial <= max".into()));
    }
    let d = table.d();
    let mtry = config.mtry.unwrap_or(((d as f64).sqrt().floor() as usize).max(1));
    let y: Vec<usize> = labels.labels().iter().map(|l| l - 1).collect();
    let grow = |t: usize| {
        let tree_seed = splitmix(config.seed ^ splitmix(t as u64));
        let data = TreeData {
            x: table.values(),
            y: &y,
            w: table.ids().iter().map(|id| bootstrap_weight(tree_seed, id)).collect(),
            classes: labels.k(),
            mtry,
        };
        grow_tree(&data, &mut ChaCha8Rng::seed_from_u64(tree_seed))
    };

    let mut trees: Vec<Vec<f64>> = Vec::new();
    let mut target = config.initial_trees;
    loop {
        let extra: Vec<Vec<f64>> = (trees.len()..target).into_par_iter().map(grow).collect();
        trees.extend(extra);
        let half = trees.len() / 2;
        let stability = spearman(&average(&trees[..half], d), &average(&trees[half..], d));
        let stable = stability.is_some_and(|s| s >= config.stability);
        if stable || target >= config.max_trees {
            return Ok(ImportanceReport {
                variables: table.names(),
                importance: average(&trees, d),
                trees: trees.len(),
                stability,
                stable,
            });
        }
        target = (target * 2).min(config.max_trees);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairImportance {
    pub first: usize,
    pub second: usize,
    pub report: ImportanceReport,
}

/// [`rf_importance`] on each unordered pair of clusters, restricted to that pair's rows.
pub fn pairwise_importance(table: &FeatureTable, partition: &Partition, config: &ForestConfig) -> Result<Vec<PairImportance>> {
    let partition = partition.reindexed(table.ids())?;
    let k = partition.k();
    let mut out = Vec::new();
    for a in 1..=k {
        for b in (a + 1)..=k {
            let rows: Vec<usize> = (0..partition.n())
                .filter(|&i| partition.label(i) == a || partition.label(i) == b)
                .collect();
            let sub = table.select_rows(&rows);
            let labels = partition.subset(&rows)?;
            out.push(PairImportance {
                first: a,
                second: b,
                report: rf_importance(&sub, &labels, config)?,
            });
        }
    }
    Ok(out)
}
