#![no_main]

use dust_core::format::{parse_state, serialize_state};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(dump) = parse_state(text) {
        let out = serialize_state(&dump);
        assert_eq!(out, serialize_state(&parse_state(&out).expect("serialized state must parse")));
    }
});
