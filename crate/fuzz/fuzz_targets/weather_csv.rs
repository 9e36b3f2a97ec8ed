#![no_main]

use greenhouse_core::DisturbanceSeries;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(series) = DisturbanceSeries::from_csv_reader(data) {
        let again = DisturbanceSeries::from_csv_reader(series.to_csv().as_bytes()).expect("written series parses");
        assert_eq!(again, series);
        let _ = series.to_model_grid();
    }
});
