#![allow(dead_code)]

use greenhouse_core::{measure, ControlInput, Disturbance, ModelParams, Output, Record, State};
use mpc::predictor::OutputCostGrad;
use mpc::{HorizonContext, MpcConfig, Predictor};
use rand::Rng;

/// Owned pieces of a horizon context.
pub struct Scene {
    pub k0: usize,
    pub x: State,
    pub y: Output,
    pub history: Vec<Record>,
    pub u_prev: ControlInput,
    pub forecast: Vec<Disturbance>,
}

impl Scene {
    pub fn ctx(&self) -> HorizonContext<'_> {
        HorizonContext { k0: self.k0, x: self.x, y: self.y, history: &self.history, u_prev: self.u_prev, forecast: &self.forecast }
    }
}

pub fn random_input(rng: &mut impl Rng) -> ControlInput {
    ControlInput::new(rng.gen_range(0.0..1.2), rng.gen_range(0.0..7.5), rng.gen_range(0.0..150.0))
}

pub fn random_scene(rng: &mut impl Rng, len: usize, night: Option<bool>) -> Scene {
    let x = State::new(rng.gen_range(0.002..0.01), rng.gen_range(4e-4..1.6e-3), rng.gen_range(6.0..26.0), rng.gen_range(5e-3..1.2e-2));
    let night = night.unwrap_or_else(|| rng.gen_bool(0.4));
    let rad = if night { rng.gen_range(0.0..9.0) } else { rng.gen_range(20.0..600.0) };
    let base = Disturbance::new(rad, 7.2e-4, rng.gen_range(2.0..22.0), rng.gen_range(4e-3..9e-3));
    let forecast = (0..len)
        .map(|i| Disturbance { radiation: if night { base.radiation } else { base.radiation * (1.0 - 0.02 * i as f64).max(0.1) }, ..base })
        .collect();
    Scene {
        k0: rng.gen_range(0..500),
        x,
        y: measure(&x, &ModelParams::default()).unwrap(),
        history: Vec::new(),
        u_prev: random_input(rng),
        forecast,
    }
}

/// Outputs fixed regardless of the plan.
pub struct ConstantPredictor(pub Output);

impl Predictor for ConstantPredictor {
    fn name(&self) -> String {
        "constant".into()
    }

    fn predict(&self, _: &HorizonContext<'_>, plan: &[ControlInput]) -> mpc::Result<Vec<Output>> {
        Ok(vec![self.0; plan.len()])
    }

    fn predict_with_gradient(
        &self,
        ctx: &HorizonContext<'_>,
        plan: &[ControlInput],
        cost: &mut OutputCostGrad<'_>,
    ) -> mpc::Result<(Vec<Output>, Vec<[f64; 3]>)> {
        let ys = self.predict(ctx, plan)?;
        cost(&ys)?;
        Ok((ys, vec![[0.0; 3]; plan.len()]))
    }
}

/// Every check a closed-loop input must pass, with no tolerance.
pub fn assert_feasible(plan: &[ControlInput], u_prev: ControlInput, cfg: &MpcConfig, night: bool) {
    let (lo, hi, rate) = (cfg.u_min.to_array(), cfg.u_max.to_array(), cfg.rate_max.to_array());
    let mut prev = u_prev.to_array();
    for (j, u) in plan.iter().enumerate() {
        let u = u.to_array();
        for c in 0..3 {
            assert!(u[c] >= lo[c] && u[c] <= hi[c], "step {j} input {c} = {} outside box", u[c]);
            assert!((u[c] - prev[c]).abs() <= rate[c], "step {j} input {c}: {} → {} exceeds rate", prev[c], u[c]);
        }
        if night {
            assert_eq!(u[0], 0.0, "CO₂ injected at night at step {j}");
        }
        prev = u;
    }
}
