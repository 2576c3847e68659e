use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::preprocess::FeatureTable;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    pub names: Vec<String>,
    /// `d x d`; column `c` is component `c`, orthonormal.
    pub loadings: DMatrix<f64>,
    /// `n x d` projections of the centered data.
    pub scores: DMatrix<f64>,
    /// Variance along each component, nonincreasing.
    pub variance: Vec<f64>,
    /// Components whose variance is numerically zero.
    pub null_components: usize,
    /// Set when `n <= d`, where the sample covariance cannot be full rank.
    pub underdetermined: bool,
}

impl PcaResult {
    pub fn explained_ratio(&self) -> Vec<f64> {
        let total: f64 = self.variance.iter().sum();
        self.variance.iter().map(|v| if total > 0.0 { v / total } else { 0.0 }).collect()
    }
}

/// Eigendecomposition of the sample covariance. Each component's
/// largest-magnitude loading is made positive.
pub fn pca(table: &FeatureTable) -> Result<PcaResult> {
    if !table.is_standardized() {
        return Err(Error::NotStandardized);
    }
    let (n, d) = (table.n(), table.d());
    let mut centered = table.values().clone();
    for j in 0..d {
        let m = centered.column(j).mean();
        centered.column_mut(j).add_scalar_mut(-m);
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut loadings = DMatrix::zeros(d, d);
    let mut variance = Vec::with_capacity(d);
    for (c, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        let mut pivot = 0;
        for r in 1..d {
            if v[r].abs() > v[pivot].abs() {
                pivot = r;
            }
        }
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        loadings.set_column(c, &v);
        variance.push(eig.eigenvalues[src].max(0.0));
    }
    let total: f64 = variance.iter().sum();
    let tol = 1e-10 * total.max(1.0);
    let null_components = variance.iter().filter(|&&v| v <= tol).count();
    let scores = &centered * &loadings;
    Ok(PcaResult {
        names: table.names(),
        loadings,
        scores,
        variance,
        null_components,
        underdetermined: n <= d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{standardize, VariableKind, VariableSpec};

    fn table(values: DMatrix<f64>) -> FeatureTable {
        let ids = (0..values.nrows()).map(|i| format!("r{i}")).collect();
        let specs = (0..values.ncols())
            .map(|j| VariableSpec {
                name: format!("v{j}"),
                kind: VariableKind::Continuous,
            })
            .collect();
        standardize(&FeatureTable::new(ids, specs, values).unwrap()).unwrap()
    }

    #[test]
    fn diagonal_line() {
        let xs = [-2.0, -1.0, 0.5, 1.0, 3.0];
        let m = DMatrix::from_fn(5, 2, |i, _| xs[i]);
        let r = pca(&table(m)).unwrap();
        let s = 0.5f64.sqrt();
        assert!((r.loadings[(0, 0)] - s).abs() < 1e-12);
        assert!((r.loadings[(1, 0)] - s).abs() < 1e-12);
        assert!(r.variance[1].abs() < 1e-12);
        assert_eq!(r.null_components, 1);
        assert!((r.variance[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let m = DMatrix::from_fn(12, 3, |i, j| ((i * 7 + j * 3) % 11) as f64 + (i * j) as f64 * 0.1);
        let t = table(m);
        let r = pca(&t).unwrap();
        let eye = r.loadings.transpose() * &r.loadings;
        assert!((eye - DMatrix::identity(3, 3)).amax() < 1e-10);
        let recon = &r.scores * r.loadings.transpose();
        let mut centered = t.values().clone();
        for j in 0..3 {
            let mu = centered.column(j).mean();
            centered.column_mut(j).add_scalar_mut(-mu);
        }
        assert!((recon - centered).amax() < 1e-8);
        assert!(r.variance.windows(2).all(|w| w[0] >= w[1]));
        assert!((r.variance.iter().sum::<f64>() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn requires_standardized() {
        let ids = vec!["a".to_string(), "b".to_string()];
        let specs = vec![VariableSpec {
            name: "x".into(),
            kind: VariableKind::Continuous,
        }];
        let t = FeatureTable::new(ids, specs, DMatrix::from_vec(2, 1, vec![1.0, 2.0])).unwrap();
        assert!(matches!(pca(&t), Err(Error::NotStandardized)));
    }
}
