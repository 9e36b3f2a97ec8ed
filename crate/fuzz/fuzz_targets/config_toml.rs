#![no_main]

use harness::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_toml(text) {
        if cfg.validate().is_ok() {
            let _ = cfg.clone().smoke().validate();
        }
        // Compared as text: NaN fields never compare equal.
        let text = cfg.to_toml();
        assert_eq!(ExperimentConfig::from_toml(&text).expect("written config parses").to_toml(), text);
    }
});
