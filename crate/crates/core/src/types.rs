//! Value types shared by the simulator, the controller and the learned models.
//!
//! Units follow the usual van Henten lettuce model conventions:
//! states in SI mass/volume units, actuators in the units a grower would
//! read off the hardware, and outputs in the units a sensor reports.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Physical greenhouse state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    /// Crop dry weight, kg·m⁻².
    pub dry_weight: f64,
    /// Indoor CO₂ concentration, kg·m⁻³.
    pub co2: f64,
    /// Indoor air temperature, °C.
    pub temp: f64,
    /// Indoor absolute humidity, kg·m⁻³.
    pub humidity: f64,
}

impl State {
    pub const fn new(dry_weight: f64, co2: f64, temp: f64, humidity: f64) -> Self {
        Self { dry_weight, co2, temp, humidity }
    }

    /// Typical seedling start: 3.5 g·m⁻² dry weight, ~550 ppm CO₂, 15 °C.
    pub const fn seedling() -> Self {
        Self::new(0.0035, 0.001, 15.0, 0.008)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.dry_weight, self.co2, self.temp, self.humidity]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Clamp the mass-like components to be non-negative.
    pub fn clamped(self) -> Self {
        Self {
            dry_weight: self.dry_weight.max(0.0),
            co2: self.co2.max(0.0),
            temp: self.temp,
            humidity: self.humidity.max(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::NonFinite("state"));
        }
        if self.dry_weight < 0.0 || self.co2 < 0.0 || self.humidity < 0.0 {
            return Err(Error::Invalid(format!("negative mass in state {self:?}")));
        }
        Ok(())
    }
}

/// Time derivative of [`State`], per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRate(pub [f64; 4]);

/// Actuator settings held over one sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    /// CO₂ injection rate, mg·m⁻²·s⁻¹.
    pub co2_injection: f64,
    /// Ventilation rate, mm·s⁻¹.
    pub ventilation: f64,
    /// Heating power, W·m⁻².
    pub heating: f64,
}

impl ControlInput {
    /// Lower actuator limits.
    pub const MIN: ControlInput = ControlInput::new(0.0, 0.0, 0.0);
    /// Upper actuator limits.
    pub const MAX: ControlInput = ControlInput::new(1.2, 7.5, 150.0);

    pub const fn new(co2_injection: f64, ventilation: f64, heating: f64) -> Self {
        Self { co2_injection, ventilation, heating }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.co2_injection, self.ventilation, self.heating]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// True when every component lies inside `[MIN, MAX]`.
    pub fn within_bounds(&self) -> bool {
        let (lo, hi) = (Self::MIN.to_array(), Self::MAX.to_array());
        self.to_array()
            .iter()
            .zip(lo.iter().zip(hi.iter()))
            .all(|(v, (l, h))| v.is_finite() && *v >= *l && *v <= *h)
    }
}

/// Outdoor weather acting on the greenhouse.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Disturbance {
    /// Incoming solar radiation, W·m⁻².
    pub radiation: f64,
    /// Outdoor CO₂ concentration, kg·m⁻³.
    pub co2: f64,
    /// Outdoor temperature, °C.
    pub temp: f64,
    /// Outdoor absolute humidity, kg·m⁻³.
    pub humidity: f64,
}

impl Disturbance {
    pub const fn new(radiation: f64, co2: f64, temp: f64, humidity: f64) -> Self {
        Self { radiation, co2, temp, humidity }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.radiation, self.co2, self.temp, self.humidity]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn validate(&self) -> Result<()> {
        if !self.to_array().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("disturbance"));
        }
        if self.radiation < 0.0 || self.co2 < 0.0 || self.humidity < 0.0 {
            return Err(Error::Invalid(format!("negative disturbance channel in {self:?}")));
        }
        Ok(())
    }
}

/// Sensor readings derived from the state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Output {
    /// Dry weight, g·m⁻².
    pub dry_weight: f64,
    /// Indoor CO₂, ppm.
    pub co2_ppm: f64,
    /// Indoor temperature, °C.
    pub temp: f64,
    /// Relative humidity, %.
    pub rel_humidity: f64,
}

impl Output {
    pub const fn new(dry_weight: f64, co2_ppm: f64, temp: f64, rel_humidity: f64) -> Self {
        Self { dry_weight, co2_ppm, temp, rel_humidity }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.dry_weight, self.co2_ppm, self.temp, self.rel_humidity]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }
}
