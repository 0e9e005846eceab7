#![no_main]

use dust_core::graph::parse_edge_csv;
use libfuzzer_sys::fuzz_target;

// First byte picks the node count, second the window.
fuzz_target!(|data: &[u8]| {
    let [n, window, rest @ ..] = data else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    if let Ok(seq) = parse_edge_csv(text, *n as usize % 33, *window as usize % 9) {
        let _ = seq.mixing(1);
    }
});
