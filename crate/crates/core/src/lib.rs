//! Peer-group construction from multivariate organisation data.
//!
//! The pipeline has three stages:
//!
//! * [`preprocess`] turns raw variable columns into a standardized feature
//!   table and percentile (PIT) representations.
//! * [`dpmm`] fits a conjugate Gaussian Dirichlet process mixture by collapsed
//!   Gibbs sampling and pools the chains into a posterior dissimilarity matrix.
//! * [`hier`] builds clusters under a maximum-size constraint (kirigami-1 and
//!   kirigami-2), [`realloc`] updates them for a new period under a stability
//!   floor measured by the proportion of connections retained, and
//!   [`indices`] scores candidate partitions.
//!
//! [`explain`] and [`viz`] describe the resulting groups for analysts and for
//! non-technical stakeholders.

pub mod dpmm;
pub mod error;
pub mod explain;
pub mod hier;
pub mod indices;
pub mod matrix;
pub mod partition;
pub mod preprocess;
pub mod realloc;
pub mod stats;
pub mod synth;
pub mod viz;

pub use error::{Error, Result};
pub use matrix::{DissimilarityKind, DissimilarityMatrix};
pub use partition::Partition;
