#![no_main]

use libfuzzer_sys::fuzz_target;
use relgen::formats::{emit_dataset, parse_dataset};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(dataset) = parse_dataset(text) {
        let emitted = emit_dataset(&dataset);
        let again = parse_dataset(&emitted).expect("emitted dataset parses");
        assert_eq!(again, dataset);
        assert_eq!(emit_dataset(&again), emitted);
    }
});
