#![no_main]

use libfuzzer_sys::fuzz_target;
use relgen_cli::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = ExperimentConfig::from_toml_str(text) {
        let _ = config.validate();
        let emitted = config.to_toml_string();
        let again = ExperimentConfig::from_toml_str(&emitted).expect("emitted config parses");
        assert_eq!(again.to_toml_string(), emitted);
    }
});
