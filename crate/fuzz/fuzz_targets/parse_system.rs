#![no_main]

use libfuzzer_sys::fuzz_target;
use relgen::formats::{emit_system, parse_system};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(system) = parse_system(text) {
        let emitted = emit_system(&system);
        let again = parse_system(&emitted).expect("emitted system parses");
        assert_eq!(again, system);
        assert_eq!(emit_system(&again), emitted);
    }
});
