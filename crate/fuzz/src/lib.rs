//! Shared setup for the fuzz targets: a small but fully valid engine
//! configuration, so seeds derived from it can reach the deep decode paths.

use sgm_core::config::{GnnConfig, RunConfig};
use sgm_core::feature_bank::{FeatureBank, ObjectClass, CLASS_COUNT, NODE_FEATURE_DIM};
use sgm_core::weights::WeightSet;

pub const FUZZ_SEED: u64 = 1;

/// Smallest network the config validator accepts; keeps generated seed
/// files and per-input engine work cheap.
pub fn small_config() -> RunConfig {
    RunConfig {
        gnn: GnnConfig {
            plan: vec![NODE_FEATURE_DIM, 2, 2],
            readout_dim: 2,
            attn_dim: 2,
            lang_dim: 2,
        },
        ..RunConfig::default()
    }
}

/// Full class vocabulary with zero word embeddings.
pub fn class_bank() -> FeatureBank {
    let classes = (0..CLASS_COUNT)
        .map(|i| ObjectClass {
            id: i,
            name: format!("class{i}"),
        })
        .collect();
    let (bank, _warnings) = FeatureBank::from_parts(classes, &Default::default()).unwrap();
    bank
}

pub fn small_weights(config: &RunConfig) -> WeightSet {
    WeightSet::generate(config, FUZZ_SEED)
}
