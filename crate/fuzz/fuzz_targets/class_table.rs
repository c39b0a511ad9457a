#![no_main]

use libfuzzer_sys::fuzz_target;
use sgm_core::feature_bank::parse_class_table;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_class_table(text);
    }
});
