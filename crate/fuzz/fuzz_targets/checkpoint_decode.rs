#![no_main]

use libfuzzer_sys::fuzz_target;
use sls_core::checkpoint::Checkpoint;

fuzz_target!(|data: &[u8]| {
    if let Ok(ck) = Checkpoint::decode(data) {
        assert_eq!(ck.encode(), data, "decode accepts only canonical encodings");
        assert!(ck.network.is_finite());
    }
});
