use std::collections::BTreeMap;
use std::path::PathBuf;

use peergroup_core::dpmm::{
    chain_agreement, posterior_dissimilarity, run_chains, AgreementOptions, ChainDiagnostics, DpmmConfig, GammaPrior,
    NigPrior,
};
use peergroup_core::error::{Error, Result};
use peergroup_core::matrix::DissimilarityMatrix;
use peergroup_core::viz::{render_curves, CurvePlot, Series};
use serde::{Deserialize, Serialize};

use crate::io::{read_standardized, read_table};
use crate::manifest::{RunDir, Step};

/// Pairwise dissimilarities: posterior co-clustering from a Dirichlet process
/// mixture, or plain Euclidean distances.
#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct DissimArgs {
    /// Standardized table written by `preprocess`
    #[arg(long)]
    pub table: PathBuf,
    /// Euclidean distances instead of posterior sampling
    #[arg(long)]
    pub euclidean: bool,
    #[arg(long, default_value_t = 5_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 5)]
    pub thin: usize,
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Gamma prior on the concentration: shape
    #[arg(long, default_value_t = 2.0)]
    pub alpha_shape: f64,
    /// Gamma prior on the concentration: rate
    #[arg(long, default_value_t = 1.0)]
    pub alpha_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    pub m0: f64,
    #[arg(long, default_value_t = 0.01)]
    pub k0: f64,
    #[arg(long, default_value_t = 2.0)]
    pub a0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b0: f64,
    /// Write chain agreement and trace diagnostics (needs two or more chains)
    #[arg(long)]
    pub diagnostics: bool,
    /// Largest tolerated PDM difference between chains
    #[arg(long, default_value_t = 0.05)]
    pub pdm_tolerance: f64,
}

impl DissimArgs {
    fn config(&self) -> DpmmConfig {
        DpmmConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            chains: self.chains,
            seed: self.seed,
            alpha_prior: GammaPrior {
                shape: self.alpha_shape,
                rate: self.alpha_rate,
            },
            base_measure: NigPrior {
                m0: self.m0,
                k0: self.k0,
                a0: self.a0,
                b0: self.b0,
            },
        }
    }
}

impl Step for DissimArgs {
    const NAME: &'static str = "dissim";

    fn inputs(&mut self) -> Vec<&mut PathBuf> {
        vec![&mut self.table]
    }

    fn seeds(&self) -> BTreeMap<String, u64> {
        if self.euclidean {
            return BTreeMap::new();
        }
        let config = self.config();
        let mut seeds = BTreeMap::from([("dpmm".to_string(), self.seed)]);
        for c in 0..self.chains {
            seeds.insert(format!("chain{c}"), config.chain_seed(c));
        }
        seeds
    }

    fn execute(&self, run: &mut RunDir) -> Result<()> {
        if self.euclidean {
            if self.diagnostics {
                return Err(Error::Config("--diagnostics applies to posterior sampling, not --euclidean".into()));
            }
            let table = read_table(&self.table)?;
            let d = DissimilarityMatrix::euclidean(table.ids().to_vec(), table.values())?;
            run.write_with("dissimilarity.csv", |w| d.write_csv(w))?;
            println!("dissim: Euclidean distances between {} observations", d.n());
            return Ok(());
        }
        if self.diagnostics && self.chains < 2 {
            return Err(Error::Config(format!(
                "--diagnostics compares chains and needs --chains >= 2 (got {})",
                self.chains
            )));
        }
        let config = self.config();
        config.validate()?;
        let table = read_standardized(&self.table)?;
        let chains = run_chains(&table, &config)?;
        let d = posterior_dissimilarity(&chains)?;
        run.write_with("dissimilarity.csv", |w| d.write_csv(w))?;
        if self.diagnostics {
            let options = AgreementOptions {
                pdm_tolerance: self.pdm_tolerance,
                ..AgreementOptions::default()
            };
            let diag = chain_agreement(&chains, &options)?;
            write_diagnostics(run, &diag)?;
            for flag in &diag.flags {
                eprintln!("warning: {flag}");
            }
        }
        println!(
            "dissim: posterior dissimilarities from {} chains of {} sweeps",
            self.chains, self.iterations
        );
        Ok(())
    }
}

fn per_chain(title: &str, x_label: &str, y_label: &str, traces: &[Vec<f64>], x_of: impl Fn(usize) -> f64) -> CurvePlot {
    CurvePlot {
        title: title.into(),
        x_label: x_label.into(),
        y_label: y_label.into(),
        series: traces
            .iter()
            .enumerate()
            .map(|(c, t)| Series {
                name: format!("chain {c}"),
                points: t.iter().enumerate().map(|(i, &v)| (x_of(i), v)).collect(),
            })
            .collect(),
        guides: vec![],
    }
}

fn write_diagnostics(run: &mut RunDir, diag: &ChainDiagnostics) -> Result<()> {
    run.write("diagnostics.txt", diag.report())?;
    let s = &diag.series;
    let bins = s.density.first().map_or(1, Vec::len) as f64;
    let plots = [
        ("alpha_mean", per_chain("Cumulative mean of alpha", "kept sample", "alpha", &s.alpha_cumulative_mean, |i| (i + 1) as f64)),
        (
            "log_posterior_mean",
            per_chain("Cumulative mean of the log posterior", "kept sample", "log posterior", &s.log_posterior_cumulative_mean, |i| (i + 1) as f64),
        ),
        ("alpha_acf", per_chain("Autocorrelation of alpha", "lag", "autocorrelation", &s.alpha_autocorrelation, |i| i as f64)),
        (
            "log_posterior_acf",
            per_chain("Autocorrelation of the log posterior", "lag", "autocorrelation", &s.log_posterior_autocorrelation, |i| i as f64),
        ),
        ("pdm_density", per_chain("Density of posterior dissimilarities", "dissimilarity", "density", &s.density, |i| (i as f64 + 0.5) / bins)),
    ];
    for (name, plot) in plots {
        run.write_with(&format!("diagnostics/{name}.csv"), |w| plot.write_csv(w))?;
        run.write(&format!("diagnostics/{name}.svg"), render_curves(&plot)?)?;
    }
    let mut rows = vec![vec!["chain_a".to_string(), "chain_b".into(), "pdm_a".into(), "pdm_b".into()]];
    for (a, b, pairs) in &s.scatter {
        rows.extend(pairs.iter().map(|(x, y)| vec![a.to_string(), b.to_string(), format!("{x:.6}"), format!("{y:.6}")]));
    }
    run.write("diagnostics/pdm_pairs.csv", crate::io::csv_bytes(rows)?)
}
