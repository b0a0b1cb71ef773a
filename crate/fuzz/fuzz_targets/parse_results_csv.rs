#![no_main]

use libfuzzer_sys::fuzz_target;
use relgen_cli::results::{emit_rows, parse_rows};
use relgen_cli::summarize;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_rows(text) {
        let emitted = emit_rows(&rows).expect("parsed rows emit");
        let again = parse_rows(&emitted).expect("emitted rows parse");
        assert_eq!(emit_rows(&again).expect("rows emit"), emitted);
        let _ = summarize(&rows, false);
        let _ = summarize(&rows, true);
    }
});
