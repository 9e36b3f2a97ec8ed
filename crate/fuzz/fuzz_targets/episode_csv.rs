#![no_main]

use greenhouse_core::{EpisodeLog, ModelParams, SAMPLE_INTERVAL_S};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(log) = EpisodeLog::from_csv_reader(data) {
        let again = EpisodeLog::from_csv_reader(log.to_csv().as_bytes()).expect("written log parses");
        assert_eq!(again.records, log.records);
        let _ = log.validate(&ModelParams::default(), SAMPLE_INTERVAL_S);
    }
});
