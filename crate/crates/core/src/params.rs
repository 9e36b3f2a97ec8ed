use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sampling interval of the discrete-time model, seconds.
pub const SAMPLE_INTERVAL_S: f64 = 900.0;

/// Coefficients of the lettuce greenhouse model.
///
/// Field docs give the conventional `p(i,j)` index of each coefficient in
/// the van Henten parameter table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Yield factor, p(1,1).
    pub yield_factor: f64,
    /// Dry-matter respiration coefficient, p(1,2).
    pub resp_dry: f64,
    /// Effective canopy surface coefficient, p(1,3).
    pub canopy: f64,
    /// Light use efficiency, p(1,4).
    pub light_use: f64,
    /// Quadratic, linear and constant terms of the temperature-dependent
    /// CO₂ conductance, p(1,5)..p(1,7).
    pub co2_cond_quad: f64,
    pub co2_cond_lin: f64,
    pub co2_cond_const: f64,
    /// CO₂ compensation point, p(1,8).
    pub co2_compensation: f64,
    /// Volumetric capacity of the greenhouse air for CO₂, p(2,1).
    pub cap_co2: f64,
    /// Respiration CO₂ release coefficient, p(2,2).
    pub resp_co2: f64,
    /// Leakage through the cover, m·s⁻¹, p(2,3).
    pub leakage: f64,
    /// Heat capacity of the greenhouse air, p(3,1).
    pub cap_heat: f64,
    /// Heat capacity per volume of ventilated air, p(3,2).
    pub vent_heat: f64,
    /// Overall heat transfer through the cover, p(3,3).
    pub cover_heat: f64,
    /// Heat load coefficient of solar radiation, p(3,4).
    pub rad_heat: f64,
    /// Volumetric capacity of the greenhouse air for vapor, p(4,1).
    pub cap_vapor: f64,
    /// Canopy-to-air mass transfer coefficient, p(4,2).
    pub transp_coeff: f64,
    /// Saturation-vapor constants, p(4,3)..p(4,7).
    pub sat_num: f64,
    pub sat_den: f64,
    pub sat_offset: f64,
    pub sat_exp_scale: f64,
    pub sat_exp_offset: f64,
    /// Gas constant, p(2,4).
    pub gas_const: f64,
    /// Celsius to Kelvin offset, p(2,5).
    pub kelvin: f64,
    /// Atmospheric pressure in kPa, p(2,6).
    pub pressure_kpa: f64,
    /// Molar mass of CO₂ in kg·mol⁻¹, p(2,7).
    pub molar_mass_co2: f64,
    /// Saturation-pressure exponent constants used by the humidity sensor,
    /// p(4,8) and p(4,9).
    pub rh_exp_scale: f64,
    pub rh_exp_offset: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            yield_factor: 0.544,
            resp_dry: 2.65e-7,
            canopy: 53.0,
            light_use: 3.55e-9,
            co2_cond_quad: 5.11e-6,
            co2_cond_lin: 2.3e-4,
            co2_cond_const: 6.29e-4,
            co2_compensation: 5.2e-5,
            cap_co2: 4.1,
            resp_co2: 4.87e-7,
            leakage: 7.5e-6,
            cap_heat: 3.0e4,
            vent_heat: 1290.0,
            cover_heat: 6.1,
            rad_heat: 0.2,
            cap_vapor: 4.1,
            transp_coeff: 0.0036,
            sat_num: 9348.0,
            sat_den: 8314.0,
            sat_offset: 273.15,
            sat_exp_scale: 17.4,
            sat_exp_offset: 239.0,
            gas_const: 8.314,
            kelvin: 273.15,
            pressure_kpa: 101.325,
            molar_mass_co2: 0.044,
            rh_exp_scale: 17.4,
            rh_exp_offset: 239.0,
        }
    }
}

impl ModelParams {
    /// All 28 coefficients in table order.
    pub fn as_vec(&self) -> Vec<f64> {
        vec![
            self.yield_factor,
            self.resp_dry,
            self.canopy,
            self.light_use,
            self.co2_cond_quad,
            self.co2_cond_lin,
            self.co2_cond_const,
            self.co2_compensation,
            self.cap_co2,
            self.resp_co2,
            self.leakage,
            self.gas_const,
            self.kelvin,
            self.pressure_kpa,
            self.molar_mass_co2,
            self.cap_heat,
            self.vent_heat,
            self.cover_heat,
            self.rad_heat,
            self.cap_vapor,
            self.transp_coeff,
            self.sat_num,
            self.sat_den,
            self.sat_offset,
            self.sat_exp_scale,
            self.sat_exp_offset,
            self.rh_exp_scale,
            self.rh_exp_offset,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        match self.as_vec().iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            Some(i) => Err(Error::Invalid(format!("model parameter #{i} must be finite and > 0"))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_positive_and_complete() {
        let p = ModelParams::default();
        assert_eq!(p.as_vec().len(), 28);
        p.validate().unwrap();
    }

    #[test]
    fn rejects_non_positive() {
        let p = ModelParams { leakage: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
    }
}
