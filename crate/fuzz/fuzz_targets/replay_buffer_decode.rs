#![no_main]

use libfuzzer_sys::fuzz_target;
use sls_core::agents::codec;

fuzz_target!(|data: &[u8]| {
    if let Ok(buf) = codec::decode(data) {
        let again = codec::decode(&codec::encode(&buf)).expect("encoded buffer decodes");
        assert_eq!(again, buf);
    }
});
