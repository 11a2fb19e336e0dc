#![no_main]

use libfuzzer_sys::fuzz_target;
use sls_core::trace::EpisodeTrace;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(trace) = EpisodeTrace::parse(text) {
        let _ = trace.replay();
    }
});
