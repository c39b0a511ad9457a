#![no_main]

use libfuzzer_sys::fuzz_target;
use sgm_core::semantic_graphs::parse_relation_kb;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_relation_kb(text);
    }
});
