#![no_main]

use libfuzzer_sys::fuzz_target;
use sgm_core::pgm::DepthImage;

fuzz_target!(|data: &[u8]| {
    let _ = DepthImage::decode(data);
});
