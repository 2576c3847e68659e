use std::fs;
use std::path::PathBuf;

use peergroup_core::error::Result;
use peergroup_core::preprocess::{parse_kinds, standardize, vif_prune, FeatureTable, PercentileTable};
use serde::{Deserialize, Serialize};

use crate::io::read_text;
use crate::manifest::{cannot_read, RunDir, Step};

/// Transform, standardize and VIF-prune a raw table; also write its percentiles.
#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct PreprocessArgs {
    /// CSV with an `id` column followed by numeric variables
    #[arg(long)]
    pub input: PathBuf,
    /// Text file of `name=kind` lines (continuous, proportion, skewed_positive)
    #[arg(long)]
    pub kinds: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    pub vif_threshold: f64,
    /// Keep every variable
    #[arg(long)]
    pub no_vif: bool,
}

impl Step for PreprocessArgs {
    const NAME: &'static str = "preprocess";

    fn inputs(&mut self) -> Vec<&mut PathBuf> {
        vec![&mut self.input, &mut self.kinds]
    }

    fn execute(&self, run: &mut RunDir) -> Result<()> {
        let kinds = parse_kinds(&read_text(&self.kinds)?)?;
        let raw = fs::read(&self.input).map_err(|e| cannot_read(&self.input, e))?;
        let table = FeatureTable::read_csv(raw.as_slice(), &kinds)?;
        let transformed = table.transformed()?;
        let standardized = standardize(&transformed)?;
        let (kept, trace) = if self.no_vif {
            (standardized, Vec::new())
        } else {
            vif_prune(&standardized, self.vif_threshold)?
        };

        let mut report = if self.no_vif {
            String::from("VIF pruning disabled\n")
        } else {
            format!("VIF threshold {}\n", self.vif_threshold)
        };
        if trace.is_empty() {
            report += "no variables removed\n";
        }
        for step in &trace {
            report += &format!("{step}\n");
        }
        report += &format!("retained ({}): {}\n", kept.d(), kept.names().join(", "));

        let cols: Vec<usize> = kept
            .names()
            .iter()
            .map(|n| transformed.column_index(n).expect("retained names come from the table"))
            .collect();
        let percentiles = PercentileTable::from_table(&transformed.select_columns(&cols));
        for name in &percentiles.degenerate {
            report += &format!("warning: `{name}` is fully tied; all observations placed in the middle quintile\n");
        }

        run.write_with("transformed.csv", |w| kept.write_csv(w))?;
        run.write("vif_trace.txt", &report)?;
        run.write_with("percentiles.csv", |w| percentiles.write_csv(w))?;
        println!(
            "preprocess: {} observations, {} of {} variables retained",
            kept.n(),
            kept.d(),
            table.d()
        );
        Ok(())
    }
}
