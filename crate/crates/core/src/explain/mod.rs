//! Describing what separates clusters: principal components, random-forest
//! variable importance, and linear/quadratic/common-location discrimination.

mod discriminant;
mod forest;
mod pca;

pub use discriminant::{discriminate, ClassifierResult, DiscriminationReport, RIDGE};
pub use forest::{pairwise_importance, rf_importance, ForestConfig, ImportanceReport, PairImportance};
pub use pca::{pca, PcaResult};
