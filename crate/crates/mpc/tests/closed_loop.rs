mod common;

use common::assert_feasible;
use greenhouse_core::episode::EpisodeMeta;
use greenhouse_core::weather::{synth_weather, WeatherProfile};
use greenhouse_core::{ControlInput, State};
use mpc::closed_loop::ramp_lookahead;
use mpc::{receding_horizon_control, Error, MpcConfig, OraclePredictor, Plant, SolverConfig};

fn quick_cfg() -> MpcConfig {
    MpcConfig { horizon: 6, solver: SolverConfig { iterations: 15, restarts: 1, ..SolverConfig::default() }, ..MpcConfig::default() }
}

#[test]
fn zero_steps_logs_only_the_initial_state() {
    let w = synth_weather(&WeatherProfile::default(), 1).unwrap();
    let (log, stats) =
        receding_horizon_control(&OraclePredictor::default(), &Plant::default(), &w.samples, State::seedling(), 0, &quick_cfg(), EpisodeMeta::default())
            .unwrap();
    assert_eq!(log.records.len(), 1);
    assert_eq!(log.records[0].x, State::seedling());
    // Revenue only, nothing was spent.
    let prices = Plant::default().prices;
    assert_eq!(stats.epi, prices.base + prices.per_kg * log.records[0].y.dry_weight * 1e-3);
}

#[test]
fn short_weather_is_rejected() {
    let w = synth_weather(&WeatherProfile::default(), 1).unwrap();
    let cfg = quick_cfg();
    let err = receding_horizon_control(&OraclePredictor::default(), &Plant::default(), &w.samples[..20], State::seedling(), 16, &cfg, EpisodeMeta::default());
    assert!(matches!(err, Err(Error::Config(_))));
}

#[test]
fn a_day_of_control_is_feasible_and_repeatable() {
    let w = synth_weather(&WeatherProfile { seed: 3, ..WeatherProfile::default() }, 2).unwrap();
    let cfg = quick_cfg();
    assert_eq!(ramp_lookahead(&cfg), 10);
    let run = || {
        receding_horizon_control(&OraclePredictor::default(), &Plant::default(), &w.samples, State::seedling(), 96, &cfg, EpisodeMeta::default()).unwrap()
    };
    let (log, stats) = run();
    assert_eq!(log.records.len(), 97);
    assert_eq!(stats.step_times_s.len(), 96);
    let mut prev = ControlInput::zero();
    for r in &log.records[..96] {
        assert_feasible(std::slice::from_ref(&r.u), prev, &cfg, r.d.radiation < cfg.night_radiation);
        prev = r.u;
    }
    let (again, _) = run();
    assert_eq!(log.records, again.records);
    assert!(log.records[96].x.dry_weight > log.records[0].x.dry_weight);
}
