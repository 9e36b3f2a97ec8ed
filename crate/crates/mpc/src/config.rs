use greenhouse_core::{ControlInput, Output, NIGHT_RADIATION};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub iterations: usize,
    /// Starts per solve: the warm start plus seeded perturbations of it.
    pub restarts: usize,
    pub momentum: f64,
    /// Initial step in normalized input units.
    pub step: f64,
    /// Floor for the step after repeated halving.
    pub min_step: f64,
    pub warm_start: bool,
    /// Half-width of the uniform perturbation used by extra restarts.
    pub perturbation: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            restarts: 3,
            momentum: 0.9,
            step: 0.01,
            min_step: 1e-7,
            warm_start: true,
            perturbation: 0.25,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcConfig {
    /// Prediction horizon in sampling steps.
    pub horizon: usize,
    /// Weight on dry matter, per g·m⁻².
    pub q_yield: f64,
    /// Weights on CO₂ injection, ventilation and heating.
    pub q_input: [f64; 3],
    pub u_min: ControlInput,
    pub u_max: ControlInput,
    /// Largest change between consecutive inputs.
    pub rate_max: ControlInput,
    pub co2_max_ppm: f64,
    /// Relative humidity band, %.
    pub humidity_band: [f64; 2],
    /// Temperature bands, °C, for night and day.
    pub temp_night: [f64; 2],
    pub temp_day: [f64; 2],
    pub night_radiation: f64,
    /// Weight on squared output violations (after scaling).
    pub penalty_output: f64,
    /// Weight on squared rate excess in normalized input units.
    pub penalty_rate: f64,
    /// CO₂ violations are measured in units of this many ppm; temperature
    /// and humidity violations in °C and % directly.
    pub co2_violation_unit: f64,
    pub solver: SolverConfig,
}

impl Default for MpcConfig {
    fn default() -> Self {
        let u_max = ControlInput::MAX;
        Self {
            horizon: 24,
            q_yield: 1000.0,
            q_input: [10.0, 1.0, 1.0],
            u_min: ControlInput::MIN,
            u_max,
            rate_max: ControlInput::from_array(u_max.to_array().map(|v| v / 10.0)),
            co2_max_ppm: 1000.0,
            humidity_band: [50.0, 85.0],
            temp_night: [10.0, 15.0],
            temp_day: [15.0, 20.0],
            night_radiation: NIGHT_RADIATION,
            penalty_output: 1e3,
            penalty_rate: 1e4,
            co2_violation_unit: 100.0,
            solver: SolverConfig::default(),
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi, rate) = (self.u_min.to_array(), self.u_max.to_array(), self.rate_max.to_array());
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least one step".into()));
        }
        for c in 0..3 {
            if !(lo[c].is_finite() && hi[c].is_finite() && lo[c] < hi[c]) {
                return Err(Error::Config(format!("input {c}: bounds [{}, {}] are not a proper interval", lo[c], hi[c])));
            }
            if !(rate[c] > 0.0 && rate[c].is_finite()) {
                return Err(Error::Config(format!("input {c}: rate bound {} must be positive", rate[c])));
            }
        }
        let s = &self.solver;
        if s.iterations == 0 || s.restarts == 0 || !(s.step > 0.0) || !(0.0..1.0).contains(&s.momentum) {
            return Err(Error::Config(format!("invalid solver settings {s:?}")));
        }
        if !(self.co2_violation_unit > 0.0) || self.penalty_output < 0.0 || self.penalty_rate < 0.0 {
            return Err(Error::Config("penalty weights must be non-negative and the CO₂ unit positive".into()));
        }
        if self.humidity_band[0] > self.humidity_band[1] || self.temp_night[0] > self.temp_night[1] || self.temp_day[0] > self.temp_day[1]
        {
            return Err(Error::Config("output bands must have lower ≤ upper".into()));
        }
        Ok(())
    }

    pub fn is_night(&self, radiation: f64) -> bool {
        radiation < self.night_radiation
    }

    /// Temperature band for a horizon starting under radiation `d1`.
    pub fn temp_band(&self, d1: f64) -> (f64, f64) {
        let b = if self.is_night(d1) { self.temp_night } else { self.temp_day };
        (b[0], b[1])
    }

    pub fn stage_cost(&self, u: &ControlInput, y: &Output) -> f64 {
        let u = u.to_array();
        -self.q_yield * y.dry_weight + (0..3).map(|c| self.q_input[c] * u[c]).sum::<f64>()
    }
}

/// Temperature band for the default day and night limits.
pub fn temp_bounds(d1: f64) -> (f64, f64) {
    MpcConfig::default().temp_band(d1)
}

/// No CO₂ injection at night.
pub fn night_co2_mask(u: ControlInput, d1: f64) -> ControlInput {
    if d1 < NIGHT_RADIATION {
        ControlInput { co2_injection: 0.0, ..u }
    } else {
        u
    }
}

/// Stage cost with the default weights: −1000·y1 + 10·u1 + u2 + u3.
pub fn stage_cost(u: &ControlInput, y: &Output) -> f64 {
    MpcConfig::default().stage_cost(u, y)
}
