#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use sgm_core::config::RunConfig;
use sgm_core::engine::Engine;
use sgm_core::feature_bank::FeatureBank;
use sgm_core::weights::WeightSet;
use sgm_fuzz::{class_bank, small_config, small_weights};

struct Setup {
    config: RunConfig,
    bank: FeatureBank,
    weights: WeightSet,
    digest: String,
}

fn setup() -> &'static Setup {
    static SETUP: OnceLock<Setup> = OnceLock::new();
    SETUP.get_or_init(|| {
        let config = small_config();
        let digest = config.digest();
        Setup {
            bank: class_bank(),
            weights: small_weights(&config),
            digest,
            config,
        }
    })
}

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let s = setup();
        let _ = Engine::resume(
            s.config.clone(),
            s.bank.clone(),
            &[(0, 1)],
            s.weights.clone(),
            text,
            &s.digest,
        );
    }
});
