//! Straight-line transcription of the lettuce greenhouse equations with the
//! parameter table typed in literally. Shares no code with the crate.

#![allow(dead_code)]

pub const P11: f64 = 0.544;
pub const P12: f64 = 2.65e-7;
pub const P13: f64 = 53.0;
pub const P14: f64 = 3.55e-9;
pub const P15: f64 = 5.11e-6;
pub const P16: f64 = 2.3e-4;
pub const P17: f64 = 6.29e-4;
pub const P18: f64 = 5.2e-5;
pub const P21: f64 = 4.1;
pub const P22: f64 = 4.87e-7;
pub const P23: f64 = 7.5e-6;
pub const P24: f64 = 8.314;
pub const P25: f64 = 273.15;
pub const P26: f64 = 101.325;
pub const P27: f64 = 0.044;
pub const P31: f64 = 3e4;
pub const P32: f64 = 1290.0;
pub const P33: f64 = 6.1;
pub const P34: f64 = 0.2;
pub const P41: f64 = 4.1;
pub const P42: f64 = 0.0036;
pub const P43: f64 = 9348.0;
pub const P44: f64 = 8314.0;
pub const P45: f64 = 273.15;
pub const P46: f64 = 17.4;
pub const P47: f64 = 239.0;
pub const P48: f64 = 17.4;
pub const P49: f64 = 239.0;

pub fn phot(x: [f64; 4], d: [f64; 4]) -> f64 {
    let phi = P14 * d[0] + (-P15 * x[2] * x[2] + P16 * x[2] - P17) * (x[1] - P18);
    if phi.abs() < 1e-12 {
        return 0.0;
    }
    (1.0 - (-P13 * x[0]).exp()) * P14 * d[0] * (-P15 * x[2] * x[2] + P16 * x[2] - P17) * (x[1] - P18) / phi
}

pub fn vent_c(x: [f64; 4], u: [f64; 3], d: [f64; 4]) -> f64 {
    (u[1] * 1e-3 + P23) * (x[1] - d[1])
}

pub fn vent_h(x: [f64; 4], u: [f64; 3], d: [f64; 4]) -> f64 {
    (u[1] * 1e-3 + P23) * (x[3] - d[3])
}

pub fn transp(x: [f64; 4]) -> f64 {
    P42 * (1.0 - (-P13 * x[0]).exp()) * (P43 / (P44 * (x[2] + P45)) * (P46 * x[2] / (x[2] + P47)).exp() - x[3])
}

pub fn rhs(x: [f64; 4], u: [f64; 3], d: [f64; 4]) -> [f64; 4] {
    let resp = x[0] * x[0] * x[2] / 10f64.powf(2.5);
    [
        P11 * phot(x, d) - P12 * resp,
        (1.0 / P21) * (-phot(x, d) + P22 * resp + u[0] * 1e-6 - vent_c(x, u, d)),
        (1.0 / P31) * (u[2] - (P32 * u[1] * 1e-3 + P33) * (x[2] - d[2]) + P34 * d[0]),
        (1.0 / P41) * (transp(x) - vent_h(x, u, d)),
    ]
}

pub fn output(x: [f64; 4]) -> [f64; 4] {
    [
        1e3 * x[0],
        1e3 * P24 * (x[2] + P25) / (P26 * P27) * x[1],
        x[2],
        1e2 * P24 * (x[2] + P25) / 11.0 / (P48 * x[2] / (x[2] + P49)).exp() * x[3],
    ]
}

/// Ideal-gas CO₂ conversion kg·m⁻³ → ppm with R = 8.314, P = 101.325 kPa,
/// M = 0.044 kg·mol⁻¹.
pub fn ideal_gas_ppm(co2_kg_m3: f64, temp_c: f64) -> f64 {
    co2_kg_m3 * 8.314 * (temp_c + 273.15) / (101.325 * 0.044) * 1e3
}

/// Plain RK4 without clamping, `n` sub-steps of `h / n`.
pub fn rk4(x: [f64; 4], u: [f64; 3], d: [f64; 4], h: f64, n: usize) -> [f64; 4] {
    let dt = h / n as f64;
    let mut s = x;
    let add = |a: [f64; 4], b: [f64; 4], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2], a[3] + c * b[3]];
    for _ in 0..n {
        let k1 = rhs(s, u, d);
        let k2 = rhs(add(s, k1, dt / 2.0), u, d);
        let k3 = rhs(add(s, k2, dt / 2.0), u, d);
        let k4 = rhs(add(s, k3, dt), u, d);
        for i in 0..4 {
            s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    s
}

/// Random admissible point: (state, input, disturbance).
pub fn sample(rng: &mut impl FnMut() -> f64) -> ([f64; 4], [f64; 3], [f64; 4]) {
    let x = [0.001 + 0.3 * rng(), 2e-4 + 2e-3 * rng(), 5.0 + 30.0 * rng(), 2e-3 + 1.5e-2 * rng()];
    let u = [1.2 * rng(), 7.5 * rng(), 150.0 * rng()];
    let d = [1000.0 * rng(), 6e-4 + 2e-4 * rng(), -5.0 + 35.0 * rng(), 1e-3 + 1e-2 * rng()];
    (x, u, d)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
