//! Conjugate Gaussian Dirichlet process mixture fitted by collapsed Gibbs
//! sampling, pooled into a posterior dissimilarity matrix.
//!
//! Each dimension carries an independent Normal-Inverse-Gamma prior
//! `mu | s2 ~ N(m0, s2 / k0)`, `s2 ~ IG(a0, b0)`, so cluster parameters
//! integrate out and a point's predictive density is a product of Student-t
//! densities. The concentration `alpha` has a Gamma prior and is resampled
//! each sweep with the auxiliary-variable scheme of Escobar and West.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma};
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::matrix::{DissimilarityKind, DissimilarityMatrix};
use crate::preprocess::FeatureTable;
use crate::stats::{autocorrelation, mean, pearson, sample_variance};

/// Normal-Inverse-Gamma hyperparameters applied to every dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NigPrior {
    pub m0: f64,
    pub k0: f64,
    pub a0: f64,
    pub b0: f64,
}

impl Default for NigPrior {
    fn default() -> Self {
        Self {
            m0: 0.0,
            k0: 0.01,
            a0: 2.0,
            b0: 1.0,
        }
    }
}

/// Gamma(shape, rate) prior on the concentration parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl Default for GammaPrior {
    fn default() -> Self {
        Self { shape: 2.0, rate: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpmmConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    pub seed: u64,
    pub alpha_prior: GammaPrior,
    pub base_measure: NigPrior,
}

impl Default for DpmmConfig {
    fn default() -> Self {
        Self {
            iterations: 5_000,
            burn_in: 1_000,
            thin: 5,
            chains: 4,
            seed: 1,
            alpha_prior: GammaPrior::default(),
            base_measure: NigPrior::default(),
        }
    }
}

impl DpmmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.iterations <= self.burn_in {
            return bad(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burn_in
            ));
        }
        if self.thin < 1 {
            return bad("thin must be at least 1".into());
        }
        if self.chains < 1 {
            return bad("at least one chain is required".into());
        }
        let b = &self.base_measure;
        if !(b.k0 > 0.0 && b.a0 > 0.0 && b.b0 > 0.0 && b.m0.is_finite()) {
            return bad(format!("base measure needs k0, a0, b0 > 0 (got {b:?})"));
        }
        let a = &self.alpha_prior;
        if !(a.shape > 0.0 && a.rate > 0.0) {
            return bad(format!("alpha prior needs shape, rate > 0 (got {a:?})"));
        }
        Ok(())
    }

    /// Seed for chain `c`, derived from the master seed.
    pub fn chain_seed(&self, c: usize) -> u64 {
        self.seed
            .wrapping_add((c as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

/// Output of one Gibbs chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainResult {
    pub ids: Vec<String>,
    /// Row-major `n x n` counts of kept sweeps in which each pair shared a cluster.
    pub coassignment_counts: Vec<u32>,
    pub samples_used: u32,
    /// Concentration at every kept sweep.
    pub alpha_trace: Vec<f64>,
    /// Unnormalised log posterior at every kept sweep.
    pub log_posterior_trace: Vec<f64>,
    /// Number of clusters at every kept sweep.
    pub cluster_count_trace: Vec<usize>,
}

impl ChainResult {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    /// Fraction of kept sweeps in which `i` and `j` shared a cluster.
    pub fn coassignment(&self, i: usize, j: usize) -> f64 {
        self.coassignment_counts[i * self.n() + j] as f64 / self.samples_used as f64
    }

    /// Dissimilarity matrix from this chain alone.
    pub fn dissimilarity(&self) -> Result<DissimilarityMatrix> {
        posterior_dissimilarity(std::slice::from_ref(self))
    }
}

/// Sufficient statistics plus cached predictive constants for one cluster.
#[derive(Debug, Clone)]
struct Cluster {
    n: usize,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    // Student-t predictive per dimension: location, nu * scale^2.
    loc: Vec<f64>,
    nu_scale2: Vec<f64>,
    // Sum over dimensions of the log normalising constants.
    log_norm: f64,
    half_nu_plus_one: f64,
}

impl Cluster {
    fn empty(d: usize, prior: &NigPrior) -> Self {
        let mut c = Self {
            n: 0,
            sum: vec![0.0; d],
            sumsq: vec![0.0; d],
            loc: vec![0.0; d],
            nu_scale2: vec![0.0; d],
            log_norm: 0.0,
            half_nu_plus_one: 0.0,
        };
        c.refresh(prior);
        c
    }

    fn posterior(&self, dim: usize, p: &NigPrior) -> (f64, f64, f64, f64) {
        let n = self.n as f64;
        let kn = p.k0 + n;
        let mn = (p.k0 * p.m0 + self.sum[dim]) / kn;
        let an = p.a0 + 0.5 * n;
        let bn = p.b0 + 0.5 * (self.sumsq[dim] + p.k0 * p.m0 * p.m0 - kn * mn * mn);
        (kn, mn, an, bn.max(p.b0 * 1e-12))
    }

    fn refresh(&mut self, p: &NigPrior) {
        let d = self.sum.len();
        let an = p.a0 + 0.5 * self.n as f64;
        let nu = 2.0 * an;
        let lg = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu);
        let mut log_norm = 0.0;
        for dim in 0..d {
            let (kn, mn, an, bn) = self.posterior(dim, p);
            let scale2 = bn * (kn + 1.0) / (an * kn);
            self.loc[dim] = mn;
            self.nu_scale2[dim] = nu * scale2;
            log_norm += lg - 0.5 * (nu * PI * scale2).ln();
        }
        self.log_norm = log_norm;
        self.half_nu_plus_one = 0.5 * (nu + 1.0);
    }

    fn log_predictive(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (dim, &v) in x.iter().enumerate() {
            let z = v - self.loc[dim];
            acc += (z * z / self.nu_scale2[dim]).ln_1p();
        }
        self.log_norm - self.half_nu_plus_one * acc
    }

    fn add(&mut self, x: &[f64], p: &NigPrior) {
        self.n += 1;
        for (dim, &v) in x.iter().enumerate() {
            self.sum[dim] += v;
            self.sumsq[dim] += v * v;
        }
        self.refresh(p);
    }

    fn remove(&mut self, x: &[f64], p: &NigPrior) {
        self.n -= 1;
        if self.n == 0 {
            self.sum.iter_mut().for_each(|s| *s = 0.0);
            self.sumsq.iter_mut().for_each(|s| *s = 0.0);
        } else {
            for (dim, &v) in x.iter().enumerate() {
                self.sum[dim] -= v;
                self.sumsq[dim] -= v * v;
            }
        }
        self.refresh(p);
    }

    /// Log marginal likelihood of the cluster's members.
    fn log_marginal(&self, p: &NigPrior) -> f64 {
        let n = self.n as f64;
        (0..self.sum.len())
            .map(|dim| {
                let (kn, _, an, bn) = self.posterior(dim, p);
                ln_gamma(an) - ln_gamma(p.a0) + p.a0 * p.b0.ln() - an * bn.ln()
                    + 0.5 * (p.k0.ln() - kn.ln())
                    - 0.5 * n * (2.0 * PI).ln()
            })
            .sum()
    }
}

fn log_posterior(clusters: &[Cluster], alpha: f64, n: usize, config: &DpmmConfig) -> f64 {
    let p = &config.base_measure;
    let k = clusters.len() as f64;
    let likelihood: f64 = clusters.iter().map(|c| c.log_marginal(p)).sum();
    let crp = k * alpha.ln() + clusters.iter().map(|c| ln_gamma(c.n as f64)).sum::<f64>()
        + ln_gamma(alpha)
        - ln_gamma(alpha + n as f64);
    let g = &config.alpha_prior;
    let prior = g.shape * g.rate.ln() - ln_gamma(g.shape) + (g.shape - 1.0) * alpha.ln() - g.rate * alpha;
    likelihood + crp + prior
}

/// Escobar-West update of the concentration given `k` clusters over `n` points.
fn resample_alpha<R: Rng>(rng: &mut R, alpha: f64, k: usize, n: usize, prior: &GammaPrior) -> f64 {
    let eta = Beta::new(alpha + 1.0, n as f64)
        .expect("valid beta parameters")
        .sample(rng)
        .max(f64::MIN_POSITIVE);
    let rate = prior.rate - eta.ln();
    let k = k as f64;
    let odds = (prior.shape + k - 1.0) / (n as f64 * rate);
    let weight = odds / (1.0 + odds);
    let shape = if rng.random::<f64>() < weight {
        prior.shape + k
    } else {
        prior.shape + k - 1.0
    };
    Gamma::new(shape, 1.0 / rate)
        .expect("valid gamma parameters")
        .sample(rng)
        .max(1e-12)
}

/// Runs one collapsed Gibbs chain, deterministic given `chain_seed`.
///
/// All observations start in one cluster. After `burn_in` sweeps, every
/// `thin`-th sweep adds one to the co-assignment count of each pair sharing
/// a cluster.
pub fn run_chain(data: &FeatureTable, config: &DpmmConfig, chain_seed: u64) -> Result<ChainResult> {
    config.validate()?;
    if !data.is_standardized() {
        return Err(Error::NotStandardized);
    }
    let n = data.n();
    let d = data.d();
    let prior = config.base_measure;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| data.values().row(i).iter().copied().collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(chain_seed);
    let empty = Cluster::empty(d, &prior);
    let mut clusters = vec![empty.clone()];
    for x in &rows {
        clusters[0].add(x, &prior);
    }
    let mut assign = vec![0usize; n];
    let mut alpha = config.alpha_prior.shape / config.alpha_prior.rate;

    let mut counts = vec![0u32; n * n];
    let mut samples = 0u32;
    let mut alpha_trace = Vec::new();
    let mut log_post_trace = Vec::new();
    let mut k_trace = Vec::new();
    let mut weights = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();

    for iter in 0..config.iterations {
        for i in 0..n {
            let x = &rows[i];
            let c = assign[i];
            clusters[c].remove(x, &prior);
            if clusters[c].n == 0 {
                let last = clusters.len() - 1;
                clusters.swap_remove(c);
                if c != last {
                    for a in assign.iter_mut() {
                        if *a == last {
                            *a = c;
                        }
                    }
                }
            }

            weights.clear();
            weights.extend(
                clusters
                    .iter()
                    .map(|cl| (cl.n as f64).ln() + cl.log_predictive(x)),
            );
            weights.push(alpha.ln() + empty.log_predictive(x));
            let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for w in weights.iter_mut() {
                *w = (*w - max).exp();
                total += *w;
            }
            let mut target = rng.random::<f64>() * total;
            let mut choice = weights.len() - 1;
            for (idx, w) in weights.iter().enumerate() {
                if target < *w {
                    choice = idx;
                    break;
                }
                target -= w;
            }
            if choice == clusters.len() {
                clusters.push(empty.clone());
            }
            clusters[choice].add(x, &prior);
            assign[i] = choice;
        }

        alpha = resample_alpha(&mut rng, alpha, clusters.len(), n, &config.alpha_prior);

        if iter >= config.burn_in && (iter - config.burn_in).is_multiple_of(config.thin) {
            samples += 1;
            members.clear();
            members.resize(clusters.len(), Vec::new());
            for (i, &c) in assign.iter().enumerate() {
                members[c].push(i);
            }
            for group in &members {
                for (a, &i) in group.iter().enumerate() {
                    counts[i * n + i] += 1;
                    for &j in &group[a + 1..] {
                        counts[i * n + j] += 1;
                        counts[j * n + i] += 1;
                    }
                }
            }
            alpha_trace.push(alpha);
            log_post_trace.push(log_posterior(&clusters, alpha, n, config));
            k_trace.push(clusters.len());
        }
    }

    Ok(ChainResult {
        ids: data.ids().to_vec(),
        coassignment_counts: counts,
        samples_used: samples,
        alpha_trace,
        log_posterior_trace: log_post_trace,
        cluster_count_trace: k_trace,
    })
}

/// Runs `config.chains` chains in parallel with seeds from [`DpmmConfig::chain_seed`].
pub fn run_chains(data: &FeatureTable, config: &DpmmConfig) -> Result<Vec<ChainResult>> {
    config.validate()?;
    (0..config.chains)
        .into_par_iter()
        .map(|c| run_chain(data, config, config.chain_seed(c)))
        .collect()
}

/// Pools chains: `d_ij = 1 - (total co-assignments) / (total samples)`.
pub fn posterior_dissimilarity(results: &[ChainResult]) -> Result<DissimilarityMatrix> {
    let first = results
        .first()
        .ok_or_else(|| Error::InvalidInput("no chains to pool".into()))?;
    let n = first.n();
    let mut total = vec![0u64; n * n];
    let mut samples = 0u64;
    for r in results {
        if r.ids != first.ids {
            return Err(Error::IdMismatch("chains were run over different ids".into()));
        }
        if r.coassignment_counts.len() != n * n {
            return Err(Error::InvalidInput("co-assignment matrix has the wrong size".into()));
        }
        for (t, &c) in total.iter_mut().zip(&r.coassignment_counts) {
            *t += c as u64;
        }
        samples += r.samples_used as u64;
    }
    if samples == 0 {
        return Err(Error::InvalidInput("chains retained no samples".into()));
    }
    DissimilarityMatrix::from_fn(first.ids.clone(), DissimilarityKind::Posterior, |i, j| {
        1.0 - total[i * n + j] as f64 / samples as f64
    })
}

/// Agreement between two chains' individual PDMs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairAgreement {
    pub chain_a: usize,
    pub chain_b: usize,
    pub max_abs_diff: f64,
    /// Pearson correlation of off-diagonal entries; `NaN` when either is constant.
    pub correlation: f64,
}

/// Convergence summary for a scalar trace across chains.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    pub per_chain_mean: Vec<f64>,
    pub per_chain_lag1: Vec<f64>,
    /// Between-chain variance `B` over mean within-chain variance `W`.
    pub between_within_ratio: f64,
    /// Potential scale reduction factor built from the same `B` and `W`.
    pub psrf: f64,
}

/// Plot series emitted alongside the diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticSeries {
    /// Per chain pair, the matched off-diagonal PDM entries.
    pub scatter: Vec<(usize, usize, Vec<(f64, f64)>)>,
    /// Per chain, a 20-bin histogram of off-diagonal PDM entries over `[0, 1]`.
    pub density: Vec<Vec<f64>>,
    /// Per chain, the alpha trace with its cumulative mean.
    pub alpha_cumulative_mean: Vec<Vec<f64>>,
    pub log_posterior_cumulative_mean: Vec<Vec<f64>>,
    /// Per chain, alpha autocorrelation at lags `0..=max_lag`.
    pub alpha_autocorrelation: Vec<Vec<f64>>,
    pub log_posterior_autocorrelation: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementOptions {
    /// Largest tolerated absolute PDM difference between two chains.
    pub pdm_tolerance: f64,
    /// PSRF above this is flagged.
    pub psrf_threshold: f64,
    /// Chains keeping fewer samples are flagged.
    pub min_samples: u32,
    pub max_lag: usize,
}

impl Default for AgreementOptions {
    fn default() -> Self {
        Self {
            pdm_tolerance: 0.05,
            psrf_threshold: 1.1,
            min_samples: 100,
            max_lag: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainDiagnostics {
    pub pairs: Vec<PairAgreement>,
    pub alpha: TraceSummary,
    pub log_posterior: TraceSummary,
    pub flags: Vec<String>,
    pub series: DiagnosticSeries,
}

impl ChainDiagnostics {
    pub fn max_abs_diff(&self) -> f64 {
        self.pairs.iter().map(|p| p.max_abs_diff).fold(0.0, f64::max)
    }

    pub fn min_correlation(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.correlation)
            .fold(f64::INFINITY, f64::min)
    }

    /// Plain-text report.
    pub fn report(&self) -> String {
        let mut s = String::from("chain agreement\n");
        for p in &self.pairs {
            s += &format!(
                "  chains {} vs {}: max |dPDM| = {:.6}, correlation = {:.6}\n",
                p.chain_a, p.chain_b, p.max_abs_diff, p.correlation
            );
        }
        for (name, t) in [("alpha", &self.alpha), ("log posterior", &self.log_posterior)] {
            s += &format!("{name}\n");
            for (c, (m, r)) in t.per_chain_mean.iter().zip(&t.per_chain_lag1).enumerate() {
                s += &format!("  chain {c}: mean = {m:.6}, lag-1 autocorrelation = {r:.6}\n");
            }
            s += &format!(
                "  between/within variance ratio = {:.6}, psrf = {:.6}\n",
                t.between_within_ratio, t.psrf
            );
        }
        if self.flags.is_empty() {
            s += "flags: none\n";
        } else {
            s += "flags:\n";
            for f in &self.flags {
                s += &format!("  {f}\n");
            }
        }
        s
    }
}

fn summarize_trace(traces: &[&[f64]]) -> TraceSummary {
    let per_chain_mean: Vec<f64> = traces.iter().map(|t| mean(t)).collect();
    let per_chain_lag1 = traces.iter().map(|t| autocorrelation(t, 1)).collect();
    let len = traces.iter().map(|t| t.len()).min().unwrap_or(0) as f64;
    let w = mean(&traces.iter().map(|t| sample_variance(t)).collect::<Vec<_>>());
    let b = len * sample_variance(&per_chain_mean);
    let ratio = b / w;
    let psrf = (((len - 1.0) / len * w + b / len) / w).sqrt();
    TraceSummary {
        per_chain_mean,
        per_chain_lag1,
        between_within_ratio: ratio,
        psrf,
    }
}

fn cumulative_mean(xs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    xs.iter()
        .enumerate()
        .map(|(i, x)| {
            acc += x;
            acc / (i + 1) as f64
        })
        .collect()
}

/// Compares chains pairwise (PDM scatter agreement) and summarises the
/// alpha and log-posterior traces.
pub fn chain_agreement(results: &[ChainResult], options: &AgreementOptions) -> Result<ChainDiagnostics> {
    if results.len() < 2 {
        return Err(Error::InvalidInput(
            "chain diagnostics need at least two chains".into(),
        ));
    }
    let pdms: Vec<Vec<f64>> = results
        .iter()
        .map(|r| Ok(r.dissimilarity()?.upper_triangle()))
        .collect::<Result<_>>()?;
    // pooling checks id agreement
    posterior_dissimilarity(results)?;

    let mut pairs = Vec::new();
    let mut scatter = Vec::new();
    let mut flags = Vec::new();
    for a in 0..results.len() {
        for b in (a + 1)..results.len() {
            let max_abs_diff = pdms[a]
                .iter()
                .zip(&pdms[b])
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            let correlation = if pdms[a] == pdms[b] {
                1.0
            } else {
                pearson(&pdms[a], &pdms[b]).unwrap_or(f64::NAN)
            };
            if max_abs_diff > options.pdm_tolerance {
                flags.push(format!(
                    "chains {a} and {b} disagree: max |dPDM| = {max_abs_diff:.4} > {}",
                    options.pdm_tolerance
                ));
            }
            pairs.push(PairAgreement {
                chain_a: a,
                chain_b: b,
                max_abs_diff,
                correlation,
            });
            scatter.push((
                a,
                b,
                pdms[a].iter().copied().zip(pdms[b].iter().copied()).collect(),
            ));
        }
    }
    for (c, r) in results.iter().enumerate() {
        if r.samples_used < options.min_samples {
            flags.push(format!(
                "chain {c} kept only {} samples (< {})",
                r.samples_used, options.min_samples
            ));
        }
    }

    let alpha_traces: Vec<&[f64]> = results.iter().map(|r| r.alpha_trace.as_slice()).collect();
    let lp_traces: Vec<&[f64]> = results
        .iter()
        .map(|r| r.log_posterior_trace.as_slice())
        .collect();
    let alpha = summarize_trace(&alpha_traces);
    let log_posterior = summarize_trace(&lp_traces);
    for (name, t) in [("alpha", &alpha), ("log posterior", &log_posterior)] {
        if t.psrf > options.psrf_threshold {
            flags.push(format!(
                "{name} psrf {:.4} exceeds {}",
                t.psrf, options.psrf_threshold
            ));
        }
    }

    let density = pdms
        .iter()
        .map(|p| {
            let mut h = [0.0; 20];
            for &v in p {
                h[((v * 20.0) as usize).min(19)] += 1.0;
            }
            let total = p.len().max(1) as f64;
            h.iter().map(|c| c / total).collect()
        })
        .collect();
    let acf = |t: &[f64]| {
        (0..=options.max_lag.min(t.len().saturating_sub(1)))
            .map(|lag| autocorrelation(t, lag))
            .collect::<Vec<_>>()
    };
    let series = DiagnosticSeries {
        scatter,
        density,
        alpha_cumulative_mean: alpha_traces.iter().map(|t| cumulative_mean(t)).collect(),
        log_posterior_cumulative_mean: lp_traces.iter().map(|t| cumulative_mean(t)).collect(),
        alpha_autocorrelation: alpha_traces.iter().map(|t| acf(t)).collect(),
        log_posterior_autocorrelation: lp_traces.iter().map(|t| acf(t)).collect(),
    };

    Ok(ChainDiagnostics {
        pairs,
        alpha,
        log_posterior,
        flags,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(counts: Vec<u32>, samples: u32) -> ChainResult {
        ChainResult {
            ids: vec!["a".into(), "b".into()],
            coassignment_counts: counts,
            samples_used: samples,
            alpha_trace: vec![1.0, 1.2, 0.9],
            log_posterior_trace: vec![-10.0, -9.5, -10.2],
            cluster_count_trace: vec![1, 1, 2],
        }
    }

    #[test]
    fn pooling_examples() {
        let d = posterior_dissimilarity(&[chain(vec![100, 100, 100, 100], 100)]).unwrap();
        assert_eq!(d.get(0, 1), 0.0);
        let d = posterior_dissimilarity(&[chain(vec![100, 0, 0, 100], 100)]).unwrap();
        assert_eq!(d.get(0, 1), 1.0);
        let d = posterior_dissimilarity(&[
            chain(vec![100, 80, 80, 100], 100),
            chain(vec![100, 60, 60, 100], 100),
        ])
        .unwrap();
        assert!((d.get(0, 1) - 0.3).abs() < 1e-15);
        assert_eq!(d.kind(), DissimilarityKind::Posterior);
    }

    #[test]
    fn pooling_rejects_mismatched_ids() {
        let mut other = chain(vec![1, 1, 1, 1], 1);
        other.ids = vec!["a".into(), "c".into()];
        assert!(matches!(
            posterior_dissimilarity(&[chain(vec![1, 1, 1, 1], 1), other]),
            Err(Error::IdMismatch(_))
        ));
    }

    #[test]
    fn identical_chains_agree_exactly() {
        let c = chain(vec![100, 70, 70, 100], 100);
        let diag = chain_agreement(&[c.clone(), c], &AgreementOptions::default()).unwrap();
        assert_eq!(diag.pairs[0].max_abs_diff, 0.0);
        assert_eq!(diag.pairs[0].correlation, 1.0);
    }

    #[test]
    fn single_chain_diagnostics_error() {
        assert!(chain_agreement(&[chain(vec![1, 1, 1, 1], 1)], &AgreementOptions::default()).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = DpmmConfig::default();
        assert!(c.validate().is_ok());
        c.burn_in = c.iterations;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = DpmmConfig::default();
        c.base_measure.k0 = 0.0;
        assert!(c.validate().is_err());
        let c = DpmmConfig { thin: 0, ..DpmmConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn predictive_matches_direct_student_t() {
        let p = NigPrior::default();
        let mut c = Cluster::empty(1, &p);
        for x in [0.3, -0.1, 0.5] {
            c.add(&[x], &p);
        }
        // direct evaluation of the posterior predictive Student-t
        let n = 3.0;
        let (sum, sumsq) = (0.7f64, 0.09 + 0.01 + 0.25);
        let kn = p.k0 + n;
        let mn = sum / kn;
        let an = p.a0 + n / 2.0;
        let xbar = sum / n;
        let bn = p.b0 + 0.5 * (sumsq - n * xbar * xbar) + p.k0 * n * xbar * xbar / (2.0 * kn);
        let nu = 2.0 * an;
        let s2 = bn * (kn + 1.0) / (an * kn);
        let x = 1.1f64;
        let direct = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * PI * s2).ln()
            - (nu + 1.0) / 2.0 * (1.0 + (x - mn).powi(2) / (nu * s2)).ln();
        assert!((c.log_predictive(&[x]) - direct).abs() < 1e-12);
        // removing restores the previous state
        c.remove(&[0.5], &p);
        c.add(&[0.5], &p);
        assert!((c.log_predictive(&[x]) - direct).abs() < 1e-12);
    }
}
