use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, FileConfig};

pub const CODE_VERSION: &str = concat!("imba ", env!("CARGO_PKG_VERSION"));

/// Written next to every `metrics.csv`; its `config` is a complete,
/// preset-free config that reproduces the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub code_version: String,
    pub experiment: String,
    pub variant: String,
    pub seed: u64,
    pub config: FileConfig,
}

impl Manifest {
    pub fn for_run(cfg: &ExperimentConfig) -> Self {
        Self {
            code_version: CODE_VERSION.to_string(),
            experiment: cfg.experiment.clone(),
            variant: cfg.variant.clone(),
            seed: cfg.train.seed,
            config: FileConfig::from_resolved(cfg),
        }
    }
}
