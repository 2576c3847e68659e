use std::collections::BTreeMap;
use std::path::PathBuf;

use peergroup_core::error::{Error, Result};
use peergroup_core::hier::{index_profile, kirigami1, kirigami2, pam, ConstrainedClustering};
use peergroup_core::indices::IndexReport;
use peergroup_core::matrix::DissimilarityMatrix;
use peergroup_core::viz::{render_curves, CurvePlot, Series};
use serde::{Deserialize, Serialize};

use super::TreeOptions;
use crate::io::{csv_bytes, opt, read_dissimilarity};
use crate::manifest::{RunDir, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Index-optimal cut, then split oversize clusters down the tree
    Kirigami1,
    /// Agglomeration with oversize merges blocked
    Kirigami2,
    /// Partitioning around medoids with a fixed k (no size cap)
    Pam,
}

impl Method {
    fn as_str(self) -> &'static str {
        match self {
            Method::Kirigami1 => "kirigami1",
            Method::Kirigami2 => "kirigami2",
            Method::Pam => "pam",
        }
    }
}

/// Cluster a dissimilarity matrix, optionally under a maximum cluster size.
#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct ClusterArgs {
    /// Dissimilarity matrix written by `dissim`
    #[arg(long)]
    pub dissim: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Kirigami2)]
    pub method: Method,
    /// Maximum cluster size (kirigami methods; defaults to no limit)
    #[arg(long)]
    pub cap: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub tree: TreeOptions,
    /// Number of clusters (pam only)
    #[arg(long)]
    pub k: Option<usize>,
    /// Candidate scan order for pam
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

impl Step for ClusterArgs {
    const NAME: &'static str = "cluster";

    fn inputs(&mut self) -> Vec<&mut PathBuf> {
        vec![&mut self.dissim]
    }

    fn seeds(&self) -> BTreeMap<String, u64> {
        match self.method {
            Method::Pam => BTreeMap::from([("pam".to_string(), self.seed)]),
            _ => BTreeMap::new(),
        }
    }

    fn execute(&self, run: &mut RunDir) -> Result<()> {
        let d = read_dissimilarity(&self.dissim)?;
        let criterion = self.tree.criterion()?;
        let (partition, cap) = match self.method {
            Method::Pam => {
                if self.cap.is_some() {
                    return Err(Error::Config("--cap is not supported by pam; use a kirigami method".into()));
                }
                let k = self.k.ok_or_else(|| Error::Config("pam needs --k".into()))?;
                let r = pam(&d, k, self.seed)?;
                let medoids: String = r.medoids.iter().enumerate().map(|(c, &m)| format!("{},{}\n", c + 1, d.ids()[m])).collect();
                run.write("medoids.csv", format!("cluster,id\n{medoids}"))?;
                (r.partition, None)
            }
            method => {
                if self.k.is_some() {
                    return Err(Error::Config("--k applies to pam only; kirigami methods choose k by the index".into()));
                }
                let cap = self.cap.unwrap_or(d.n());
                let linkage = self.tree.linkage()?;
                let result = if method == Method::Kirigami1 {
                    kirigami1(&d, linkage, criterion, cap)?
                } else {
                    kirigami2(&d, linkage, criterion, cap)?
                };
                write_tree(run, &d, &result, &self.tree)?;
                (result.partition, Some(cap))
            }
        };
        if let Some(cap) = cap {
            if partition.max_size() > cap {
                return Err(Error::Invariant(format!(
                    "a cluster of size {} exceeds the cap {cap}",
                    partition.max_size()
                )));
            }
        }
        let report = IndexReport::compute(&d, &partition);
        run.write_with("partition.csv", |w| partition.write_csv(w))?;
        run.write(
            "indices.csv",
            format!(
                "{}\n{}\n",
                IndexReport::CSV_HEADER,
                report.csv_row(self.method.as_str(), &self.tree.linkage, cap)
            ),
        )?;
        println!(
            "cluster: {} clusters, largest {}, {} = {}",
            partition.k(),
            partition.max_size(),
            criterion.index,
            opt(report.get(criterion.index))
        );
        Ok(())
    }
}

/// Tree file plus the index along its cuts.
fn write_tree(run: &mut RunDir, d: &DissimilarityMatrix, result: &ConstrainedClustering, tree: &TreeOptions) -> Result<()> {
    run.write_with("tree.txt", |w| result.tree.write_text(w))?;
    let index = tree.criterion()?.index;
    let profile = index_profile(d, &result.tree, index, tree.max_k.max(2))?;
    let mut rows = vec![vec!["k".to_string(), index.as_str().to_string()]];
    rows.extend(profile.iter().map(|(k, v)| vec![k.to_string(), opt(*v)]));
    run.write("index_profile.csv", csv_bytes(rows)?)?;
    let points: Vec<(f64, f64)> = profile.iter().filter_map(|&(k, v)| Some((k as f64, v?))).collect();
    if !points.is_empty() {
        let plot = CurvePlot {
            title: format!("{} along the tree", index.as_str().to_uppercase()),
            x_label: "number of clusters".into(),
            y_label: index.as_str().to_uppercase(),
            series: vec![Series {
                name: result.tree.linkage().to_string(),
                points,
            }],
            guides: vec![],
        };
        run.write("index_profile.svg", render_curves(&plot)?)?;
    }
    Ok(())
}
