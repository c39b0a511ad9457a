#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use sgm_core::config::RunConfig;
use sgm_core::weights::WeightSet;

fn config() -> &'static RunConfig {
    static CONFIG: OnceLock<RunConfig> = OnceLock::new();
    CONFIG.get_or_init(sgm_fuzz::small_config)
}

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = WeightSet::parse(text, "fuzz", config());
    }
});
