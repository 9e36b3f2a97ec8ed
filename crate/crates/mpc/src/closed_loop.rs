use std::time::Instant;

use greenhouse_core::episode::{simulate_episode, EpisodeMeta, StepView};
use greenhouse_core::metrics::{ControlStats, PriceBook};
use greenhouse_core::{ControlInput, Disturbance, EpisodeLog, ModelParams, State, SAMPLE_INTERVAL_S};

use crate::config::MpcConfig;
use crate::predictor::{HorizonContext, Predictor};
use crate::solver::{shift_plan, solve_horizon};
use crate::{Error, Result};

/// The true plant the controller is run against.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub params: ModelParams,
    pub prices: PriceBook,
    pub h: f64,
}

impl Default for Plant {
    fn default() -> Self {
        Self { params: ModelParams::default(), prices: PriceBook::default(), h: SAMPLE_INTERVAL_S }
    }
}

/// Steps of forecast beyond the horizon handed to the solver, enough for
/// CO₂ injection to ramp from its maximum to zero at the rate limit.
pub fn ramp_lookahead(cfg: &MpcConfig) -> usize {
    let span = cfg.u_max.co2_injection - cfg.u_min.co2_injection;
    (span / cfg.rate_max.co2_injection).ceil() as usize
}

/// Closed loop against the simulator: solve, apply the first input, step
/// the plant, repeat. The previous applied input is zero before the first
/// step.
pub fn receding_horizon_control(
    predictor: &dyn Predictor,
    plant: &Plant,
    weather: &[Disturbance],
    x0: State,
    steps: usize,
    cfg: &MpcConfig,
    meta: EpisodeMeta,
) -> Result<(EpisodeLog, ControlStats)> {
    cfg.validate()?;
    if weather.len() < steps + cfg.horizon {
        return Err(Error::Config(format!(
            "weather has {} samples, {steps} steps with horizon {} need {}",
            weather.len(),
            cfg.horizon,
            steps + cfg.horizon
        )));
    }
    let reach = cfg.horizon + ramp_lookahead(cfg);
    let mut times = Vec::with_capacity(steps);
    let mut warm: Option<Vec<ControlInput>> = None;
    let policy = |v: &StepView<'_>| -> Result<ControlInput> {
        let ctx = HorizonContext {
            k0: v.k,
            x: v.x,
            y: v.y,
            history: v.history,
            u_prev: v.history.last().map_or(ControlInput::zero(), |r| r.u),
            forecast: &v.weather[..reach.min(v.weather.len())],
        };
        let started = Instant::now();
        let plan = solve_horizon(&ctx, predictor, cfg, warm.as_deref()).map_err(|e| Error::Step { step: v.k, source: Box::new(e) })?;
        times.push(started.elapsed().as_secs_f64());
        let u = plan.inputs[0];
        warm = Some(shift_plan(&plan.inputs, cfg.horizon));
        Ok(u)
    };
    let log = simulate_episode(x0, policy, weather, steps, &plant.params, plant.h, meta)?;
    let stats = ControlStats::from_log(&log, times, &plant.prices)?;
    Ok((log, stats))
}
