#![no_main]

use libfuzzer_sys::fuzz_target;
use sls_core::GameState;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(state) = GameState::from_json(text) else { return };
    state
        .check_invariants()
        .expect("accepted states satisfy the invariants");
    let again = GameState::from_json(&state.to_json()).expect("serialized state parses");
    assert_eq!(again, state);
    for mv in state.legal_moves() {
        let (next, _) = state.apply(mv).expect("listed moves are legal");
        next.check_invariants().expect("legal moves keep the invariants");
    }
});
