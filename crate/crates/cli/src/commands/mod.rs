pub mod cluster;
pub mod dissim;
pub mod explain;
pub mod fingerprint;
pub mod preprocess;
pub mod reallocate;
pub mod sweep;

use peergroup_core::error::Result;
use peergroup_core::hier::{CutCriterion, Linkage};
use peergroup_core::indices::FitIndex;

/// Linkage, index and cut bound shared by the hierarchical commands.
#[derive(Debug, Clone, clap::Args, serde::Serialize, serde::Deserialize)]
pub struct TreeOptions {
    /// average, ward, complete or single
    #[arg(long, default_value = "ward")]
    pub linkage: String,
    /// Index maximised when cutting the tree: ch, asw or pg
    #[arg(long, default_value = "ch")]
    pub index: String,
    /// Largest cluster count considered when cutting
    #[arg(long, default_value_t = CutCriterion::DEFAULT_MAX_K)]
    pub max_k: usize,
}

impl TreeOptions {
    pub fn linkage(&self) -> Result<Linkage> {
        self.linkage.parse()
    }

    pub fn criterion(&self) -> Result<CutCriterion> {
        let index: FitIndex = self.index.parse()?;
        Ok(CutCriterion::new(index, self.max_k))
    }
}
