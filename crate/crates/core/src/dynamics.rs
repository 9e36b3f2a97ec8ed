//! Continuous-time lettuce greenhouse model and its RK4 discretization.
//!
//! Every flux is a pure function of value types. The `*_jacobian` and
//! [`Rk4Tape`] helpers provide exact first derivatives so that controllers
//! can differentiate a multi-step rollout by reverse accumulation instead
//! of finite differences.

use crate::params::ModelParams;
use crate::types::{ControlInput, Disturbance, Output, State, StateRate};
use crate::{Error, Result};

/// Denominators smaller than this make the photosynthesis flux vanish.
const PHOT_DENOM_EPS: f64 = 1e-12;

/// mg → kg for the CO₂ injection actuator.
const MG_TO_KG: f64 = 1e-6;
/// mm → m for the ventilation actuator.
const MM_TO_M: f64 = 1e-3;
/// Scale of the maintenance respiration term.
const RESP_SCALE: f64 = 316.227_766_016_837_94; // 10^(5/2)
/// Divisor of the relative humidity sensor expression.
const RH_DIVISOR: f64 = 11.0;

fn ensure_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn canopy_cover(x: &State, p: &ModelParams) -> f64 {
    1.0 - (-p.canopy * x.dry_weight).exp()
}

fn co2_conductance(temp: f64, p: &ModelParams) -> f64 {
    -p.co2_cond_quad * temp * temp + p.co2_cond_lin * temp - p.co2_cond_const
}

fn respiration(x: &State) -> f64 {
    x.dry_weight * x.dry_weight * x.temp / RESP_SCALE
}

/// Gross canopy photosynthesis, kg·m⁻²·s⁻¹.
pub fn flux_photosynthesis(x: &State, d: &Disturbance, p: &ModelParams) -> Result<f64> {
    ensure_finite(&x.to_array(), "state")?;
    ensure_finite(&d.to_array(), "disturbance")?;
    let light = p.light_use * d.radiation;
    let co2_drive = co2_conductance(x.temp, p) * (x.co2 - p.co2_compensation);
    let denom = light + co2_drive;
    if denom.abs() < PHOT_DENOM_EPS {
        return Ok(0.0);
    }
    Ok(canopy_cover(x, p) * light * co2_drive / denom)
}

/// CO₂ exchange through ventilation and leakage, kg·m⁻²·s⁻¹.
pub fn flux_vent_co2(x: &State, u: &ControlInput, d: &Disturbance, p: &ModelParams) -> Result<f64> {
    ensure_finite(&[x.co2, u.ventilation, d.co2], "ventilation inputs")?;
    Ok((u.ventilation * MM_TO_M + p.leakage) * (x.co2 - d.co2))
}

/// Vapor exchange through ventilation and leakage, kg·m⁻²·s⁻¹.
pub fn flux_vent_h2o(x: &State, u: &ControlInput, d: &Disturbance, p: &ModelParams) -> Result<f64> {
    ensure_finite(&[x.humidity, u.ventilation, d.humidity], "ventilation inputs")?;
    Ok((u.ventilation * MM_TO_M + p.leakage) * (x.humidity - d.humidity))
}

/// Saturation humidity term of the transpiration flux, with its
/// temperature derivative.
fn saturation(temp: f64, p: &ModelParams) -> Result<(f64, f64)> {
    let kelvin = temp + p.sat_offset;
    let shifted = temp + p.sat_exp_offset;
    if kelvin <= 0.0 {
        return Err(Error::Singular("transpiration (temperature + kelvin offset)"));
    }
    if shifted <= 0.0 {
        return Err(Error::Singular("transpiration (saturation exponent)"));
    }
    let value = p.sat_num / (p.sat_den * kelvin) * (p.sat_exp_scale * temp / shifted).exp();
    let slope = value * (-1.0 / kelvin + p.sat_exp_scale * p.sat_exp_offset / (shifted * shifted));
    Ok((value, slope))
}

/// Canopy transpiration, kg·m⁻²·s⁻¹.
pub fn flux_transpiration(x: &State, p: &ModelParams) -> Result<f64> {
    ensure_finite(&x.to_array(), "state")?;
    let (sat, _) = saturation(x.temp, p)?;
    Ok(p.transp_coeff * canopy_cover(x, p) * (sat - x.humidity))
}

/// Right-hand side of the model ODE.
pub fn derivatives(x: &State, u: &ControlInput, d: &Disturbance, p: &ModelParams) -> Result<StateRate> {
    ensure_finite(&u.to_array(), "control input")?;
    let phot = flux_photosynthesis(x, d, p)?;
    let vent_c = flux_vent_co2(x, u, d, p)?;
    let vent_h = flux_vent_h2o(x, u, d, p)?;
    let transp = flux_transpiration(x, p)?;
    let resp = respiration(x);
    Ok(StateRate([
        p.yield_factor * phot - p.resp_dry * resp,
        (-phot + p.resp_co2 * resp + u.co2_injection * MG_TO_KG - vent_c) / p.cap_co2,
        (u.heating - (p.vent_heat * u.ventilation * MM_TO_M + p.cover_heat) * (x.temp - d.temp)
            + p.rad_heat * d.radiation)
            / p.cap_heat,
        (transp - vent_h) / p.cap_vapor,
    ]))
}

/// ∂f/∂x (4×4, row = rate component) and ∂f/∂u (4×3).
pub type StateJacobian = [[f64; 4]; 4];
pub type InputJacobian = [[f64; 3]; 4];

/// Rates together with their exact partial derivatives.
pub fn derivatives_jacobian(
    x: &State,
    u: &ControlInput,
    d: &Disturbance,
    p: &ModelParams,
) -> Result<(StateRate, StateJacobian, InputJacobian)> {
    let rate = derivatives(x, u, d, p)?;

    let decay = (-p.canopy * x.dry_weight).exp();
    let cover = 1.0 - decay;
    let dcover = p.canopy * decay;

    // photosynthesis = cover * light * s * c / (light + s * c)
    let light = p.light_use * d.radiation;
    let s = co2_conductance(x.temp, p);
    let ds = -2.0 * p.co2_cond_quad * x.temp + p.co2_cond_lin;
    let c = x.co2 - p.co2_compensation;
    let denom = light + s * c;
    let (g, dg_dsc) = if denom.abs() < PHOT_DENOM_EPS {
        (0.0, 0.0)
    } else {
        (light * s * c / denom, light * light / (denom * denom))
    };
    let dphot = [dcover * g, cover * dg_dsc * s, cover * dg_dsc * c * ds, 0.0];

    let resp = [2.0 * x.dry_weight * x.temp / RESP_SCALE, 0.0, x.dry_weight * x.dry_weight / RESP_SCALE, 0.0];

    let exchange = u.ventilation * MM_TO_M + p.leakage;
    let (sat, dsat) = saturation(x.temp, p)?;
    let dtransp = [
        p.transp_coeff * dcover * (sat - x.humidity),
        0.0,
        p.transp_coeff * cover * dsat,
        -p.transp_coeff * cover,
    ];

    let mut jx = [[0.0; 4]; 4];
    let mut ju = [[0.0; 3]; 4];
    for j in 0..4 {
        jx[0][j] = p.yield_factor * dphot[j] - p.resp_dry * resp[j];
        jx[1][j] = (-dphot[j] + p.resp_co2 * resp[j]) / p.cap_co2;
        jx[3][j] = dtransp[j] / p.cap_vapor;
    }
    jx[1][1] -= exchange / p.cap_co2;
    jx[2][2] = -(p.vent_heat * u.ventilation * MM_TO_M + p.cover_heat) / p.cap_heat;
    jx[3][3] -= exchange / p.cap_vapor;

    ju[1][0] = MG_TO_KG / p.cap_co2;
    ju[1][1] = -MM_TO_M * (x.co2 - d.co2) / p.cap_co2;
    ju[2][1] = -p.vent_heat * MM_TO_M * (x.temp - d.temp) / p.cap_heat;
    ju[2][2] = 1.0 / p.cap_heat;
    ju[3][1] = -MM_TO_M * (x.humidity - d.humidity) / p.cap_vapor;

    Ok((rate, jx, ju))
}

fn axpy(x: &State, h: f64, k: &StateRate) -> State {
    let a = x.to_array();
    State::from_array([a[0] + h * k.0[0], a[1] + h * k.0[1], a[2] + h * k.0[2], a[3] + h * k.0[3]])
}

fn stage(x: &State, u: &ControlInput, d: &Disturbance, p: &ModelParams, name: &'static str) -> Result<StateRate> {
    let k = derivatives(x, u, d, p).map_err(|e| match e {
        Error::NonFinite(_) => Error::NonFiniteStage(name),
        other => other,
    })?;
    if k.0.iter().all(|v| v.is_finite()) {
        Ok(k)
    } else {
        Err(Error::NonFiniteStage(name))
    }
}

fn combine(x: &State, h: f64, k: [&StateRate; 4]) -> State {
    let a = x.to_array();
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = a[i] + h / 6.0 * (k[0].0[i] + 2.0 * k[1].0[i] + 2.0 * k[2].0[i] + k[3].0[i]);
    }
    State::from_array(out)
}

/// One classical RK4 step of length `h` seconds with `u` and `d` held
/// constant. The mass-like states are clamped at zero afterwards.
pub fn rk4_step(x: &State, u: &ControlInput, d: &Disturbance, p: &ModelParams, h: f64) -> Result<State> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Invalid(format!("step length must be positive, got {h}")));
    }
    let k1 = stage(x, u, d, p, "k1")?;
    let k2 = stage(&axpy(x, 0.5 * h, &k1), u, d, p, "k2")?;
    let k3 = stage(&axpy(x, 0.5 * h, &k2), u, d, p, "k3")?;
    let k4 = stage(&axpy(x, h, &k3), u, d, p, "k4")?;
    let next = combine(x, h, [&k1, &k2, &k3, &k4]);
    if !next.is_finite() {
        return Err(Error::NonFinite("RK4 update"));
    }
    Ok(next.clamped())
}

/// Stage Jacobians of one RK4 step, kept for reverse accumulation.
#[derive(Debug, Clone)]
pub struct Rk4Tape {
    h: f64,
    jx: [StateJacobian; 4],
    ju: [InputJacobian; 4],
    clamped: [bool; 4],
}

/// Like [`rk4_step`] but also records what [`Rk4Tape::pullback`] needs.
pub fn rk4_step_with_tape(
    x: &State,
    u: &ControlInput,
    d: &Disturbance,
    p: &ModelParams,
    h: f64,
) -> Result<(State, Rk4Tape)> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Invalid(format!("step length must be positive, got {h}")));
    }
    let (k1, jx1, ju1) = derivatives_jacobian(x, u, d, p)?;
    let (k2, jx2, ju2) = derivatives_jacobian(&axpy(x, 0.5 * h, &k1), u, d, p)?;
    let (k3, jx3, ju3) = derivatives_jacobian(&axpy(x, 0.5 * h, &k2), u, d, p)?;
    let (k4, jx4, ju4) = derivatives_jacobian(&axpy(x, h, &k3), u, d, p)?;
    let raw = combine(x, h, [&k1, &k2, &k3, &k4]);
    if !raw.is_finite() {
        return Err(Error::NonFinite("RK4 update"));
    }
    let r = raw.to_array();
    let clamped = [r[0] < 0.0, r[1] < 0.0, false, r[3] < 0.0];
    Ok((raw.clamped(), Rk4Tape { h, jx: [jx1, jx2, jx3, jx4], ju: [ju1, ju2, ju3, ju4], clamped }))
}

fn mat_t_vec(j: &StateJacobian, v: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (row, vi) in j.iter().zip(v.iter()) {
        for c in 0..4 {
            out[c] += row[c] * vi;
        }
    }
    out
}

fn input_t_vec(j: &InputJacobian, v: &[f64; 4], acc: &mut [f64; 3]) {
    for (row, vi) in j.iter().zip(v.iter()) {
        for c in 0..3 {
            acc[c] += row[c] * vi;
        }
    }
}

impl Rk4Tape {
    /// Given ∂L/∂x_next, return (∂L/∂x, ∂L/∂u).
    pub fn pullback(&self, adj_next: [f64; 4]) -> ([f64; 4], [f64; 3]) {
        let h = self.h;
        let mut lam = adj_next;
        for i in 0..4 {
            if self.clamped[i] {
                lam[i] = 0.0;
            }
        }
        let scaled = |s: f64, extra: &[f64; 4], e: f64| -> [f64; 4] {
            let mut out = [0.0; 4];
            for i in 0..4 {
                out[i] = s * lam[i] + e * extra[i];
            }
            out
        };
        let mut adj_u = [0.0; 3];
        let zero = [0.0; 4];

        // Stage adjoints, last stage first.
        let a4 = scaled(h / 6.0, &zero, 0.0);
        let g4 = mat_t_vec(&self.jx[3], &a4);
        input_t_vec(&self.ju[3], &a4, &mut adj_u);

        let a3 = scaled(h / 3.0, &g4, h);
        let g3 = mat_t_vec(&self.jx[2], &a3);
        input_t_vec(&self.ju[2], &a3, &mut adj_u);

        let a2 = scaled(h / 3.0, &g3, 0.5 * h);
        let g2 = mat_t_vec(&self.jx[1], &a2);
        input_t_vec(&self.ju[1], &a2, &mut adj_u);

        let a1 = scaled(h / 6.0, &g2, 0.5 * h);
        let g1 = mat_t_vec(&self.jx[0], &a1);
        input_t_vec(&self.ju[0], &a1, &mut adj_u);

        let mut adj_x = lam;
        for i in 0..4 {
            adj_x[i] += g1[i] + g2[i] + g3[i] + g4[i];
        }
        (adj_x, adj_u)
    }
}

/// Sensor map from state to measured outputs.
pub fn measure(x: &State, p: &ModelParams) -> Result<Output> {
    ensure_finite(&x.to_array(), "state")?;
    let kelvin = x.temp + p.kelvin;
    if kelvin <= 0.0 {
        return Err(Error::Invalid(format!("temperature {} °C is at or below absolute zero", x.temp)));
    }
    let shifted = x.temp + p.rh_exp_offset;
    if shifted <= 0.0 {
        return Err(Error::Singular("relative humidity (saturation exponent)"));
    }
    let ppm = 1e3 * p.gas_const * kelvin / (p.pressure_kpa * p.molar_mass_co2) * x.co2;
    let rh = 1e2 * p.gas_const * kelvin * x.humidity / (RH_DIVISOR * (p.rh_exp_scale * x.temp / shifted).exp());
    Ok(Output::new(1e3 * x.dry_weight, ppm, x.temp, rh))
}

/// ∂y/∂x, row = output component.
pub fn measure_jacobian(x: &State, p: &ModelParams) -> Result<[[f64; 4]; 4]> {
    let y = measure(x, p)?;
    let kelvin = x.temp + p.kelvin;
    let shifted = x.temp + p.rh_exp_offset;
    let ppm_per_co2 = 1e3 * p.gas_const * kelvin / (p.pressure_kpa * p.molar_mass_co2);
    let mut j = [[0.0; 4]; 4];
    j[0][0] = 1e3;
    j[1][1] = ppm_per_co2;
    j[1][2] = 1e3 * p.gas_const * x.co2 / (p.pressure_kpa * p.molar_mass_co2);
    j[2][2] = 1.0;
    j[3][3] = 1e2 * p.gas_const * kelvin / (RH_DIVISOR * (p.rh_exp_scale * x.temp / shifted).exp());
    j[3][2] = y.rel_humidity * (1.0 / kelvin - p.rh_exp_scale * p.rh_exp_offset / (shifted * shifted));
    Ok(j)
}
