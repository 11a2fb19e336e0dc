#![no_main]

use libfuzzer_sys::fuzz_target;
use sls_server::api::{CreateSession, SubmitMove};

fuzz_target!(|data: &[u8]| {
    if let Ok(req) = CreateSession::from_json(data) {
        req.validate().expect("parsed requests are valid");
    }
    let _ = SubmitMove::from_json(data);
});
