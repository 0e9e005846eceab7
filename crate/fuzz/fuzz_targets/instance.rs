#![no_main]

use dust_core::format::{parse_instance, serialize_instance};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(inst) = parse_instance(text) {
        let out = serialize_instance(&inst);
        let again = parse_instance(&out).expect("serialized instance must parse");
        assert_eq!(out, serialize_instance(&again));
    }
});
