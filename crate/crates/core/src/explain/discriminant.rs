use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::preprocess::FeatureTable;

/// Diagonal ridge added to a covariance that is singular or estimated from
/// no more rows than variables.
pub const RIDGE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierResult {
    /// Resubstitution accuracy.
    pub accuracy: f64,
    /// `confusion[true][predicted]`, indexed by cluster order in the report.
    pub confusion: [[usize; 2]; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminationReport {
    /// Names of the two clusters by canonical label.
    pub clusters: [String; 2],
    pub n: usize,
    /// Pooled covariance and class means.
    pub lda: ClassifierResult,
    /// Class means and class covariances.
    pub qda: ClassifierResult,
    /// Common (overall) mean and class covariances: separates by spread only.
    pub md: ClassifierResult,
    /// Covariances that needed the ridge: `"pooled"` or a cluster label.
    pub shrunk: Vec<String>,
}

impl DiscriminationReport {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "clusters: {} vs {} (n = {}, resubstitution, equal priors)\n",
            self.clusters[0], self.clusters[1], self.n
        );
        for (name, r) in [("LDA", &self.lda), ("MD", &self.md), ("QDA", &self.qda)] {
            s.push_str(&format!(
                "{name:<4} accuracy {:.4}  confusion [[{}, {}], [{}, {}]]\n",
                r.accuracy, r.confusion[0][0], r.confusion[0][1], r.confusion[1][0], r.confusion[1][1]
            ));
        }
        if !self.shrunk.is_empty() {
            s.push_str(&format!("ridge {RIDGE} applied to: {}\n", self.shrunk.join(", ")));
        }
        s
    }
}

/// Gaussian log-density up to a shared constant.
struct Model {
    mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl Model {
    fn score(&self, x: &DVector<f64>, with_log_det: bool) -> f64 {
        let r = x - &self.mean;
        let z = self.chol.l().solve_lower_triangular(&r).expect("triangular factor is nonsingular");
        let q = z.norm_squared();
        if with_log_det {
            -0.5 * q - 0.5 * self.log_det
        } else {
            -0.5 * q
        }
    }
}

fn covariance(x: &DMatrix<f64>, rows: &[usize], mean: &DVector<f64>) -> DMatrix<f64> {
    let d = x.ncols();
    let mut s = DMatrix::zeros(d, d);
    for &i in rows {
        let r = x.row(i).transpose() - mean;
        s += &r * r.transpose();
    }
    s / (rows.len() as f64 - 1.0)
}

fn factor(cov: DMatrix<f64>, force_ridge: bool, name: &str, shrunk: &mut Vec<String>, err: Error) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let d = cov.nrows();
    let attempt = |c: DMatrix<f64>| Cholesky::new(c).filter(|ch| ch.l().diagonal().iter().all(|v| *v > 1e-12));
    let chol = match (!force_ridge).then(|| attempt(cov.clone())).flatten() {
        Some(ch) => ch,
        None => {
            shrunk.push(name.to_string());
            attempt(cov + DMatrix::identity(d, d) * RIDGE).ok_or(err)?
        }
    };
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok((chol, log_det))
}

fn evaluate(x: &DMatrix<f64>, y: &[usize], predict: impl Fn(&DVector<f64>) -> usize) -> ClassifierResult {
    let mut confusion = [[0usize; 2]; 2];
    for (i, &truth) in y.iter().enumerate() {
        confusion[truth][predict(&x.row(i).transpose())] += 1;
    }
    ClassifierResult {
        accuracy: (confusion[0][0] + confusion[1][1]) as f64 / y.len() as f64,
        confusion,
    }
}

/// Fits LDA, QDA and the common-location classifier to a two-cluster
/// partition and reports resubstitution accuracy with equal priors.
///
/// The common-location classifier keeps the log-determinant term: without it
/// the more dispersed cluster has the smaller distance everywhere and would
/// absorb every point.
pub fn discriminate(table: &FeatureTable, labels: &Partition) -> Result<DiscriminationReport> {
    let labels = labels.reindexed(table.ids())?;
    if labels.k() != 2 {
        return Err(Error::InvalidInput(format!(
            "discrimination needs exactly 2 clusters, found {}",
            labels.k()
        )));
    }
    let x = table.values();
    let (n, d) = (table.n(), table.d());
    let y: Vec<usize> = labels.labels().iter().map(|l| l - 1).collect();
    let groups = labels.groups();
    if groups.iter().any(|g| g.len() < 2) {
        return Err(Error::InvalidInput("each cluster needs at least 2 members".into()));
    }
    let names = [format!("cluster {}", 1), format!("cluster {}", 2)];
    let mean_of = |rows: &[usize]| -> DVector<f64> {
        rows.iter().map(|&i| x.row(i).transpose()).fold(DVector::zeros(d), |a, r| a + r) / rows.len() as f64
    };
    let means = [mean_of(&groups[0]), mean_of(&groups[1])];
    let overall = mean_of(&(0..n).collect::<Vec<_>>());
    let covs = [covariance(x, &groups[0], &means[0]), covariance(x, &groups[1], &means[1])];
    let (n0, n1) = (groups[0].len() as f64, groups[1].len() as f64);
    let pooled = (&covs[0] * (n0 - 1.0) + &covs[1] * (n1 - 1.0)) / (n0 + n1 - 2.0);

    let mut shrunk = Vec::new();
    let (pooled_chol, pooled_ld) = factor(pooled, n <= d + 1, "pooled", &mut shrunk, Error::SingularCovariance(0))?;
    let mut class = Vec::new();
    for c in 0..2 {
        class.push(factor(
            covs[c].clone(),
            groups[c].len() <= d,
            &names[c],
            &mut shrunk,
            Error::SingularCovariance(c + 1),
        )?);
    }
    let pick = |s0: f64, s1: f64| usize::from(s1 > s0);

    let lda_models: Vec<Model> = (0..2)
        .map(|c| Model {
            mean: means[c].clone(),
            chol: pooled_chol.clone(),
            log_det: pooled_ld,
        })
        .collect();
    let qda_models: Vec<Model> = (0..2)
        .map(|c| Model {
            mean: means[c].clone(),
            chol: class[c].0.clone(),
            log_det: class[c].1,
        })
        .collect();
    let md_models: Vec<Model> = (0..2)
        .map(|c| Model {
            mean: overall.clone(),
            chol: class[c].0.clone(),
            log_det: class[c].1,
        })
        .collect();

    let lda = evaluate(x, &y, |v| pick(lda_models[0].score(v, false), lda_models[1].score(v, false)));
    let qda = evaluate(x, &y, |v| pick(qda_models[0].score(v, true), qda_models[1].score(v, true)));
    let md = evaluate(x, &y, |v| pick(md_models[0].score(v, true), md_models[1].score(v, true)));
    Ok(DiscriminationReport {
        clusters: names,
        n,
        lda,
        qda,
        md,
        shrunk,
    })
}
