use std::collections::BTreeMap;
use std::path::PathBuf;

use peergroup_core::error::Result;
use peergroup_core::explain::{discriminate, pca, rf_importance, DiscriminationReport, ForestConfig, ImportanceReport};
use peergroup_core::partition::Partition;
use peergroup_core::preprocess::FeatureTable;
use peergroup_core::viz::render_scatter;
use serde::{Deserialize, Serialize};

use crate::io::{align, csv_bytes, read_partition, read_standardized};
use crate::manifest::{RunDir, Step};

/// Variable importance, discriminant accuracy and principal components for a partition.
#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct ExplainArgs {
    /// Standardized table written by `preprocess`
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub partition: PathBuf,
    /// Also compare every pair of clusters
    #[arg(long)]
    pub pairs: bool,
    /// Initial forest size; doubled until the ranking is stable
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long, default_value_t = 6_400)]
    pub max_trees: usize,
    /// Half-forest Spearman correlation that stops the doubling
    #[arg(long, default_value_t = 0.9)]
    pub stability: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Variables tried per split (default: floor of the square root of the count)
    #[arg(long)]
    pub mtry: Option<usize>,
}

impl ExplainArgs {
    fn forest(&self) -> ForestConfig {
        ForestConfig {
            initial_trees: self.trees,
            max_trees: self.max_trees,
            stability: self.stability,
            seed: self.seed,
            mtry: self.mtry,
        }
    }
}

fn importance_rows(scope: &str, report: &ImportanceReport) -> Vec<Vec<String>> {
    report
        .ranking()
        .into_iter()
        .enumerate()
        .map(|(r, (v, imp))| vec![scope.to_string(), v, format!("{imp:.6}"), (r + 1).to_string()])
        .collect()
}

/// Report for clusters `a` and `b` of `partition`, named by their labels there.
fn pair_report(table: &FeatureTable, partition: &Partition, a: usize, b: usize) -> Result<(FeatureTable, Partition, DiscriminationReport)> {
    let rows: Vec<usize> = (0..partition.n())
        .filter(|&i| partition.label(i) == a || partition.label(i) == b)
        .collect();
    let sub = table.select_rows(&rows);
    let labels = partition.subset(&rows)?;
    let mut report = discriminate(&sub, &labels)?;
    report.clusters = [format!("cluster {a}"), format!("cluster {b}")];
    Ok((sub, labels, report))
}

impl Step for ExplainArgs {
    const NAME: &'static str = "explain";

    fn inputs(&mut self) -> Vec<&mut PathBuf> {
        vec![&mut self.table, &mut self.partition]
    }

    fn seeds(&self) -> BTreeMap<String, u64> {
        BTreeMap::from([("forest".to_string(), self.seed)])
    }

    fn execute(&self, run: &mut RunDir) -> Result<()> {
        let table = read_standardized(&self.table)?;
        let partition = align(&read_partition(&self.partition)?, table.ids(), "table")?;
        let forest = self.forest();
        // a forest cannot learn a class from a single member
        let sizes = partition.sizes();
        let tiny: Vec<String> = (1..=partition.k()).filter(|&c| sizes[c - 1] < 2).map(|c| c.to_string()).collect();
        let mut text = format!("all clusters (k = {})\n", partition.k());
        let overall = if tiny.is_empty() {
            rf_importance(&table, &partition, &forest)?
        } else {
            text += &format!("single-member clusters left out of the forest: {}\n", tiny.join(", "));
            let rows: Vec<usize> = (0..partition.n()).filter(|&i| sizes[partition.label(i) - 1] >= 2).collect();
            rf_importance(&table.select_rows(&rows), &partition.subset(&rows)?, &forest)?
        };
        let mut rows = vec![["scope", "variable", "importance", "rank"].map(String::from).to_vec()];
        rows.extend(importance_rows("all", &overall));
        text += &overall.to_text();

        let k = partition.k();
        if k == 2 {
            match discriminate(&table, &partition) {
                Ok(report) => run.write("discrimination.txt", report.to_text())?,
                Err(e) => text += &format!("\ndiscrimination skipped ({e})\n"),
            }
        } else if self.pairs {
            for a in 1..=k {
                for b in (a + 1)..=k {
                    let scope = format!("{a}-{b}");
                    let (sub, labels, report) = match pair_report(&table, &partition, a, b) {
                        Ok(r) => r,
                        Err(e) => {
                            text += &format!("\nclusters {scope}: skipped ({e})\n");
                            continue;
                        }
                    };
                    run.write(&format!("discrimination_{scope}.txt"), report.to_text())?;
                    match rf_importance(&sub, &labels, &forest) {
                        Ok(imp) => {
                            rows.extend(importance_rows(&scope, &imp));
                            text += &format!("\nclusters {scope}\n{}", imp.to_text());
                        }
                        Err(e) => text += &format!("\nclusters {scope}: importance skipped ({e})\n"),
                    }
                }
            }
        }
        run.write("importance.csv", csv_bytes(rows)?)?;
        run.write("importance.txt", text)?;

        let pc = pca(&table)?;
        let d = pc.names.len();
        let pcs: Vec<String> = (1..=d).map(|c| format!("PC{c}")).collect();
        let mut scores = vec![std::iter::once("id".to_string()).chain(pcs.iter().cloned()).collect::<Vec<_>>()];
        for (i, id) in table.ids().iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend((0..d).map(|c| format!("{:.6}", pc.scores[(i, c)])));
            scores.push(row);
        }
        run.write("pca_scores.csv", csv_bytes(scores)?)?;
        let mut loadings = vec![std::iter::once("variable".to_string()).chain(pcs.iter().cloned()).collect::<Vec<_>>()];
        for (j, name) in pc.names.iter().enumerate() {
            let mut row = vec![name.clone()];
            row.extend((0..d).map(|c| format!("{:.6}", pc.loadings[(j, c)])));
            loadings.push(row);
        }
        let mut variance = vec!["explained_ratio".to_string()];
        variance.extend(pc.explained_ratio().iter().map(|v| format!("{v:.6}")));
        loadings.push(variance);
        run.write("pca_loadings.csv", csv_bytes(loadings)?)?;
        if d >= 2 {
            let points: Vec<[f64; 2]> = (0..table.n()).map(|i| [pc.scores[(i, 0)], pc.scores[(i, 1)]]).collect();
            let ratio = pc.explained_ratio();
            let svg = render_scatter(
                &points,
                &partition,
                true,
                &format!("PC1 ({:.1}%)", 100.0 * ratio[0]),
                &format!("PC2 ({:.1}%)", 100.0 * ratio[1]),
            )?;
            run.write("pca.svg", svg)?;
        }
        let top: Vec<String> = overall.ranking().into_iter().take(5).map(|(v, _)| v).collect();
        println!(
            "explain: {} trees (stable: {}), top variables {}",
            overall.trees,
            overall.stable,
            top.join(", ")
        );
        Ok(())
    }
}
