#![no_main]

use libfuzzer_sys::fuzz_target;
use sls_core::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_json(text) {
        let _ = cfg.train_config().validate();
        let _ = cfg.eval_config();
    }
});
