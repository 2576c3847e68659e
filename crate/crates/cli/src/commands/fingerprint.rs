use std::fs;
use std::path::PathBuf;

use peergroup_core::error::{Error, Result};
use peergroup_core::viz::{fingerprint_table, render_fingerprint};
use serde::{Deserialize, Serialize};

use crate::io::{read_partition, read_percentiles};
use crate::manifest::{cannot_read, RunDir, Step};

/// Quintile fingerprint of each cluster over selected variables.
#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct FingerprintArgs {
    /// Percentile table written by `preprocess`
    #[arg(long)]
    pub percentiles: PathBuf,
    #[arg(long)]
    pub partition: PathBuf,
    /// Comma-separated variables to plot (default: all)
    #[arg(long, value_delimiter = ',', conflicts_with = "top_k")]
    pub variables: Vec<String>,
    /// Plot the k most important variables from `--importance`
    #[arg(long, requires = "importance")]
    pub top_k: Option<usize>,
    /// `importance.csv` written by `explain`
    #[arg(long)]
    pub importance: Option<PathBuf>,
    /// Observation to mark on its cluster's panel
    #[arg(long)]
    pub highlight: Option<String>,
}

/// Variables of the `all` scope in rank order.
fn ranked_variables(path: &PathBuf) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(|e| cannot_read(path, e))?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let mut ranked: Vec<(usize, String)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() < 4 {
            return Err(Error::Parse {
                line: rec.position().map_or(0, |p| p.line() as usize),
                message: format!("{}: expected scope,variable,importance,rank", path.display()),
            });
        }
        if &rec[0] == "all" {
            let rank = rec[3].parse().map_err(|_| Error::Parse {
                line: rec.position().map_or(0, |p| p.line() as usize),
                message: format!("bad rank `{}`", &rec[3]),
            })?;
            ranked.push((rank, rec[1].to_string()));
        }
    }
    ranked.sort();
    Ok(ranked.into_iter().map(|(_, v)| v).collect())
}

impl Step for FingerprintArgs {
    const NAME: &'static str = "fingerprint";

    fn inputs(&mut self) -> Vec<&mut PathBuf> {
        let mut v = vec![&mut self.percentiles, &mut self.partition];
        v.extend(self.importance.as_mut());
        v
    }

    fn execute(&self, run: &mut RunDir) -> Result<()> {
        let percentiles = read_percentiles(&self.percentiles)?;
        let partition = read_partition(&self.partition)?;
        let variables = match (self.top_k, &self.importance) {
            (Some(k), Some(path)) => {
                let ranked = ranked_variables(path)?;
                if k == 0 || k > ranked.len() {
                    return Err(Error::Config(format!(
                        "--top-k must be between 1 and {} (the ranked variables)",
                        ranked.len()
                    )));
                }
                ranked[..k].to_vec()
            }
            _ if !self.variables.is_empty() => self.variables.clone(),
            _ => percentiles.names.clone(),
        };
        let table = fingerprint_table(&percentiles, &partition, &variables, self.highlight.as_deref())?;
        run.write_with("fingerprint.csv", |w| table.write_csv(w))?;
        run.write("fingerprint.svg", render_fingerprint(&table))?;
        println!(
            "fingerprint: {} clusters over {}",
            table.clusters.len(),
            variables.join(", ")
        );
        Ok(())
    }
}
