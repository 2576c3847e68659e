use std::path::PathBuf;

use peergroup_core::error::{Error, Result};
use peergroup_core::realloc::{select_stable, tradeoff_grid, ReallocConfig, TradeoffRow};
use peergroup_core::viz::render_tradeoff;
use serde::{Deserialize, Serialize};

use super::TreeOptions;
use crate::io::{align, opt, read_dissimilarity, read_partition};
use crate::manifest::{RunDir, Step};

/// Re-cluster a new period, trading fit against retained connections.
#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct ReallocateArgs {
    /// Dissimilarities for the new period
    #[arg(long)]
    pub dissim: PathBuf,
    /// Partition from the previous period
    #[arg(long)]
    pub previous: PathBuf,
    /// Smallest acceptable proportion of connections retained
    #[arg(long, default_value_t = 0.9)]
    pub pcr_min: f64,
    #[arg(long, default_value_t = 0.05)]
    pub grid_step: f64,
    /// Smallest reallocation proportion tried
    #[arg(long, default_value_t = 0.0)]
    pub grid_min: f64,
    /// Largest reallocation proportion tried (at most 0.95)
    #[arg(long, default_value_t = 0.95)]
    pub grid_max: f64,
    /// Maximum cluster size; defaults to the previous partition's largest cluster
    #[arg(long)]
    pub cap: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub tree: TreeOptions,
}

impl ReallocateArgs {
    fn grid(&self) -> Result<Vec<f64>> {
        if !(self.grid_step > 0.0) || !(0.0 <= self.grid_min && self.grid_min <= self.grid_max && self.grid_max <= 0.95) {
            return Err(Error::Config(format!(
                "grid needs step > 0 and 0 <= min <= max <= 0.95 (got step {}, min {}, max {})",
                self.grid_step, self.grid_min, self.grid_max
            )));
        }
        let first = (self.grid_min / self.grid_step - 1e-9).ceil() as usize;
        let last = (self.grid_max / self.grid_step + 1e-9).floor() as usize;
        Ok((first..=last).map(|i| i as f64 * self.grid_step).collect())
    }
}

fn row_file(row: &TradeoffRow) -> String {
    format!("tradeoff_partitions/p{:.2}.csv", row.p)
}

impl Step for ReallocateArgs {
    const NAME: &'static str = "reallocate";

    fn inputs(&mut self) -> Vec<&mut PathBuf> {
        vec![&mut self.dissim, &mut self.previous]
    }

    fn execute(&self, run: &mut RunDir) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pcr_min) {
            return Err(Error::Config(format!("--pcr-min must lie in [0, 1], got {}", self.pcr_min)));
        }
        let d = read_dissimilarity(&self.dissim)?;
        let previous = align(&read_partition(&self.previous)?, d.ids(), "new dissimilarity matrix")?;
        let config = ReallocConfig {
            p_grid: self.grid()?,
            pcr_min: self.pcr_min,
            cap: self.cap.unwrap_or(previous.max_size()),
            linkage: self.tree.linkage()?,
            criterion: self.tree.criterion()?,
        };
        let curve = tradeoff_grid(&d, &previous, &config)?;
        for row in &curve.rows {
            if let Some(p) = &row.partition {
                run.write_with(&row_file(row), |w| p.write_csv(w))?;
            }
        }
        run.write_with("tradeoff.csv", |w| curve.write_csv(w, |_, row| row_file(row)))?;

        let chosen = select_stable(&curve, self.pcr_min);
        if curve.rows.iter().any(TradeoffRow::is_usable) {
            run.write("tradeoff.svg", render_tradeoff(&curve, chosen.as_ref().ok().copied(), self.pcr_min)?)?;
        }
        let chosen = chosen?;
        let partition = chosen
            .partition
            .as_ref()
            .ok_or_else(|| Error::Invariant("selected row has no partition".into()))?;
        run.write_with("reallocated_partition.csv", |w| partition.write_csv(w))?;
        let summary = format!(
            "p,pcr,{},k,reallocated,cap\n{:.2},{},{},{},{},{}\n",
            config.criterion.index,
            chosen.p,
            opt(chosen.pcr),
            opt(chosen.index),
            partition.k(),
            chosen.reallocated.unwrap_or(0),
            config.cap
        );
        run.write("reallocation.csv", summary)?;
        println!(
            "reallocate: chose p = {:.2} with PCR {} and {} {} ({} observations reallocated)",
            chosen.p,
            opt(chosen.pcr),
            config.criterion.index,
            opt(chosen.index),
            chosen.reallocated.unwrap_or(0)
        );
        Ok(())
    }
}
