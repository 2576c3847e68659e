use std::path::PathBuf;

use peergroup_core::error::{Error, Result};
use peergroup_core::hier::{kirigami1, kirigami2};
use peergroup_core::viz::{render_curves, CurvePlot, Series};
use serde::{Deserialize, Serialize};

use super::TreeOptions;
use crate::io::{csv_bytes, opt, read_dissimilarity};
use crate::manifest::{RunDir, Step};

/// Both kirigami methods over a list of size caps.
#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub dissim: PathBuf,
    /// Comma-separated caps, e.g. 40,60,80
    #[arg(long, value_delimiter = ',', required = true)]
    pub caps: Vec<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub tree: TreeOptions,
}

impl Step for SweepArgs {
    const NAME: &'static str = "sweep";

    fn inputs(&mut self) -> Vec<&mut PathBuf> {
        vec![&mut self.dissim]
    }

    fn execute(&self, run: &mut RunDir) -> Result<()> {
        if self.caps.contains(&0) {
            return Err(Error::Config("caps must be at least 1".into()));
        }
        let d = read_dissimilarity(&self.dissim)?;
        let (linkage, criterion) = (self.tree.linkage()?, self.tree.criterion()?);
        let mut caps = self.caps.clone();
        caps.sort_unstable();
        caps.dedup();
        let mut rows = vec![["cap", "method", "k", "max_size", criterion.index.as_str()].map(String::from).to_vec()];
        let mut series = vec![
            Series { name: "kirigami-1".into(), points: vec![] },
            Series { name: "kirigami-2".into(), points: vec![] },
        ];
        for &cap in &caps {
            for (s, result) in [kirigami1(&d, linkage, criterion, cap)?, kirigami2(&d, linkage, criterion, cap)?].into_iter().enumerate() {
                let p = &result.partition;
                rows.push(vec![
                    cap.to_string(),
                    format!("kirigami{}", s + 1),
                    p.k().to_string(),
                    p.max_size().to_string(),
                    opt(result.index_value),
                ]);
                if let Some(v) = result.index_value {
                    series[s].points.push((cap as f64, v));
                }
            }
        }
        run.write("sweep.csv", csv_bytes(rows)?)?;
        let plot = CurvePlot {
            title: format!("{} against the size cap", criterion.index.as_str().to_uppercase()),
            x_label: "maximum cluster size".into(),
            y_label: criterion.index.as_str().to_uppercase(),
            series,
            guides: vec![],
        };
        if plot.series.iter().any(|s| !s.points.is_empty()) {
            run.write("sweep.svg", render_curves(&plot)?)?;
        }
        println!("sweep: {} caps, {linkage} linkage", caps.len());
        Ok(())
    }
}
