//! Replays the checked-in fuzz seeds through the fuzz targets' properties.

use std::path::PathBuf;

use greenhouse_core::{DisturbanceSeries, EpisodeLog, ModelParams, SAMPLE_INTERVAL_S};
use harness::ExperimentConfig;
use seqnet::checkpoint::{decode, encode};

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let bytes = std::fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn weather_seeds() {
    let mut parsed = 0;
    for (p, data) in seeds("weather_csv") {
        if let Ok(series) = DisturbanceSeries::from_csv_reader(&data[..]) {
            parsed += 1;
            assert_eq!(DisturbanceSeries::from_csv_reader(series.to_csv().as_bytes()).unwrap(), series, "{}", p.display());
            let _ = series.to_model_grid();
        }
    }
    assert!(parsed >= 2);
}

#[test]
fn episode_seeds() {
    let mut parsed = 0;
    for (p, data) in seeds("episode_csv") {
        if let Ok(log) = EpisodeLog::from_csv_reader(&data[..]) {
            parsed += 1;
            assert_eq!(EpisodeLog::from_csv_reader(log.to_csv().as_bytes()).unwrap().records, log.records, "{}", p.display());
            let _ = log.validate(&ModelParams::default(), SAMPLE_INTERVAL_S);
        }
    }
    assert!(parsed >= 2);
}

#[test]
fn checkpoint_seeds() {
    let mut parsed = 0;
    for (p, data) in seeds("checkpoint") {
        if let Ok(w) = decode(&data) {
            parsed += 1;
            let bytes = encode(&w);
            assert_eq!(bytes, data, "{}", p.display());
            assert_eq!(decode(&bytes).unwrap().params(), w.params());
        }
    }
    assert_eq!(parsed, 2);
}

#[test]
fn config_seeds() {
    let mut valid = 0;
    for (p, data) in seeds("config_toml") {
        let Ok(text) = std::str::from_utf8(&data) else { continue };
        if let Ok(cfg) = ExperimentConfig::from_toml(text) {
            if cfg.validate().is_ok() {
                valid += 1;
                cfg.clone().smoke().validate().unwrap();
            }
            let text = cfg.to_toml();
            assert_eq!(ExperimentConfig::from_toml(&text).unwrap().to_toml(), text, "{}", p.display());
        }
    }
    assert_eq!(valid, 2);
}
