//! Penalized horizon objective and its projected-gradient solver.

use greenhouse_core::{ControlInput, Output};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::MpcConfig;
use crate::predictor::{HorizonContext, Predictor};
use crate::{Error, Result};

/// Output limits applied over one horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputBounds {
    pub co2_max: f64,
    pub temp: (f64, f64),
    pub humidity: (f64, f64),
}

impl OutputBounds {
    /// The temperature band follows the radiation at the start of the
    /// horizon and is held for all of it.
    pub fn for_horizon(ctx: &HorizonContext<'_>, cfg: &MpcConfig) -> Self {
        let d1 = ctx.forecast.first().map_or(0.0, |d| d.radiation);
        Self {
            co2_max: cfg.co2_max_ppm,
            temp: cfg.temp_band(d1),
            humidity: (cfg.humidity_band[0], cfg.humidity_band[1]),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ObjectiveTerms {
    pub stage: f64,
    pub output_penalty: f64,
    pub rate_penalty: f64,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.stage + self.output_penalty + self.rate_penalty
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlPlan {
    pub inputs: Vec<ControlInput>,
    pub objective: f64,
    pub terms: ObjectiveTerms,
    /// Gradient iterations summed over restarts.
    pub iterations: usize,
    /// Predictor evaluations, with or without gradient.
    pub evaluations: usize,
}

/// Squared-violation penalty of one predicted output and its gradient.
pub fn output_penalty(y: &Output, b: &OutputBounds, cfg: &MpcConfig) -> (f64, [f64; 4]) {
    let rho = cfg.penalty_output;
    let mut g = [0.0; 4];
    let co2 = (y.co2_ppm - b.co2_max).max(0.0) / cfg.co2_violation_unit;
    g[1] = 2.0 * rho * co2 / cfg.co2_violation_unit;
    let (t_lo, t_hi) = ((b.temp.0 - y.temp).max(0.0), (y.temp - b.temp.1).max(0.0));
    g[2] = 2.0 * rho * (t_hi - t_lo);
    let (h_lo, h_hi) = ((b.humidity.0 - y.rel_humidity).max(0.0), (y.rel_humidity - b.humidity.1).max(0.0));
    g[3] = 2.0 * rho * (h_hi - h_lo);
    (rho * (co2 * co2 + t_lo * t_lo + t_hi * t_hi + h_lo * h_lo + h_hi * h_hi), g)
}

fn span(cfg: &MpcConfig) -> [f64; 3] {
    let (lo, hi) = (cfg.u_min.to_array(), cfg.u_max.to_array());
    [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]]
}

/// Rate penalty over the plan (starting from `u_prev`), accumulating its
/// gradient into `grad` when given.
fn rate_penalty(plan: &[ControlInput], u_prev: ControlInput, cfg: &MpcConfig, mut grad: Option<&mut [[f64; 3]]>) -> f64 {
    let sp = span(cfg);
    let rate = cfg.rate_max.to_array();
    let mut prev = u_prev.to_array();
    let mut total = 0.0;
    for (j, u) in plan.iter().enumerate() {
        let cur = u.to_array();
        for c in 0..3 {
            let du = cur[c] - prev[c];
            let e = (du.abs() - rate[c]).max(0.0) / sp[c];
            if e > 0.0 {
                total += cfg.penalty_rate * e * e;
                if let Some(g) = grad.as_deref_mut() {
                    let d = 2.0 * cfg.penalty_rate * e / sp[c] * du.signum();
                    g[j][c] += d;
                    if j > 0 {
                        g[j - 1][c] -= d;
                    }
                }
            }
        }
        prev = cur;
    }
    total
}

/// Objective terms of a plan given its predicted outputs.
pub fn objective_terms(plan: &[ControlInput], outputs: &[Output], ctx: &HorizonContext<'_>, cfg: &MpcConfig) -> ObjectiveTerms {
    let b = OutputBounds::for_horizon(ctx, cfg);
    let mut t = ObjectiveTerms::default();
    for (u, y) in plan.iter().zip(outputs) {
        t.stage += cfg.stage_cost(u, y);
        t.output_penalty += output_penalty(y, &b, cfg).0;
    }
    t.rate_penalty = rate_penalty(plan, ctx.u_prev, cfg, None);
    t
}

/// Penalized objective: stage costs pairing `u(k0+j)` with `y(k0+j+1)`,
/// output-band penalties and rate penalties.
pub fn horizon_objective(plan: &[ControlInput], predictor: &dyn Predictor, ctx: &HorizonContext<'_>, cfg: &MpcConfig) -> Result<f64> {
    let ys = predictor.predict(ctx, plan)?;
    let v = objective_terms(plan, &ys, ctx, cfg).total();
    finite(v, ctx)
}

fn finite(v: f64, ctx: &HorizonContext<'_>) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("objective {v} at step {}", ctx.k0)))
    }
}

/// Objective and its gradient with respect to the raw inputs.
pub fn objective_gradient(
    plan: &[ControlInput],
    predictor: &dyn Predictor,
    ctx: &HorizonContext<'_>,
    cfg: &MpcConfig,
) -> Result<(ObjectiveTerms, Vec<[f64; 3]>)> {
    let b = OutputBounds::for_horizon(ctx, cfg);
    let mut cost = |ys: &[Output]| -> Result<Vec<[f64; 4]>> {
        Ok(ys
            .iter()
            .map(|y| {
                let mut g = output_penalty(y, &b, cfg).1;
                g[0] -= cfg.q_yield;
                g
            })
            .collect())
    };
    let (ys, mut g) = predictor.predict_with_gradient(ctx, plan, &mut cost)?;
    for gj in g.iter_mut() {
        for c in 0..3 {
            gj[c] += cfg.q_input[c];
        }
    }
    let mut terms = objective_terms(plan, &ys, ctx, cfg);
    terms.rate_penalty = rate_penalty(plan, ctx.u_prev, cfg, Some(&mut g));
    finite(terms.total(), ctx)?;
    Ok((terms, g))
}

/// Per-step upper input limits from the box and the night rules. At night
/// (radiation at `k0` below the threshold) CO₂ injection is zero for the
/// whole horizon. By day, CO₂ at each step is capped so it can ramp down
/// at the rate limit before the next night step seen in the forecast.
pub fn input_ceilings(ctx: &HorizonContext<'_>, cfg: &MpcConfig, n: usize) -> Vec<ControlInput> {
    let night_now = ctx.forecast.first().is_some_and(|d| cfg.is_night(d.radiation));
    let next_night: Vec<Option<usize>> = {
        let mut out = vec![None; ctx.forecast.len() + 1];
        for i in (0..ctx.forecast.len()).rev() {
            out[i] = if cfg.is_night(ctx.forecast[i].radiation) { Some(i) } else { out[i + 1] };
        }
        out
    };
    (0..n)
        .map(|j| {
            let mut ub = cfg.u_max;
            if night_now {
                ub.co2_injection = 0.0;
            } else if let Some(i) = next_night.get(j).copied().flatten() {
                // Shrunk by a relative 1e-12 so that the ramp's own steps stay
                // inside the rate bound after rounding.
                let ramp = (i - j) as f64 * cfg.rate_max.co2_injection * (1.0 - 1e-12);
                ub.co2_injection = ub.co2_injection.min(ramp);
            }
            ub
        })
        .collect()
}

/// Clamp a plan to the box, the ceilings and, step by step from `u_prev`,
/// the rate bound. Where the rate bound cannot be met inside the hard
/// limits the hard limits win.
pub fn make_feasible(plan: &[ControlInput], ctx: &HorizonContext<'_>, cfg: &MpcConfig, ceilings: &[ControlInput]) -> Vec<ControlInput> {
    let (lo_box, rate) = (cfg.u_min.to_array(), cfg.rate_max.to_array());
    let mut prev = ctx.u_prev.to_array();
    plan.iter()
        .zip(ceilings)
        .map(|(u, ub)| {
            let (v, ub) = (u.to_array(), ub.to_array());
            let mut out = [0.0; 3];
            for c in 0..3 {
                let lo = lo_box[c].max(prev[c] - rate[c]).min(ub[c]);
                let hi = ub[c].min(prev[c] + rate[c]).max(lo);
                let mut o = v[c].clamp(lo, hi);
                // Rounding in prev ± rate can leave the realized step an ulp
                // over the bound; pull it back while the hard limits allow.
                while (o - prev[c]).abs() > rate[c] {
                    let nudged = if o > prev[c] { o.next_down() } else { o.next_up() };
                    if nudged < lo_box[c] || nudged > ub[c] {
                        break;
                    }
                    o = nudged;
                }
                out[c] = o;
            }
            prev = out;
            ControlInput::from_array(out)
        })
        .collect()
}

/// The previous plan advanced one step, last input repeated.
pub fn shift_plan(plan: &[ControlInput], horizon: usize) -> Vec<ControlInput> {
    let mut out: Vec<ControlInput> = plan.iter().skip(1).copied().collect();
    let last = plan.last().copied().unwrap_or_default();
    out.resize(horizon, *out.last().unwrap_or(&last));
    out
}

/// Solve one horizon.
///
/// Works in normalized inputs `z = (u − u_min)/(u_max − u_min)`, projected
/// onto `[0, ceiling]` every iterate. Each restart runs heavy-ball descent
/// along the gradient scaled to unit max-norm over the components not
/// pinned by a bound, for a fixed number of iterations; a step that does
/// not lower the objective is undone, halves the step (down to `min_step`)
/// and clears the momentum. The best iterate of every
/// restart and the start point itself are made rate-feasible and the
/// cheapest is returned.
pub fn solve_horizon(
    ctx: &HorizonContext<'_>,
    predictor: &dyn Predictor,
    cfg: &MpcConfig,
    warm: Option<&[ControlInput]>,
) -> Result<ControlPlan> {
    cfg.validate()?;
    let n = cfg.horizon;
    if ctx.forecast.len() < n {
        return Err(Error::Config(format!("forecast covers {} steps, horizon is {n}", ctx.forecast.len())));
    }
    let s = &cfg.solver;
    let sp = span(cfg);
    let lo = cfg.u_min.to_array();
    let ceilings = input_ceilings(ctx, cfg, n);
    let zub: Vec<f64> = ceilings
        .iter()
        .flat_map(|ub| {
            let ub = ub.to_array();
            (0..3).map(move |c| ((ub[c] - lo[c]) / sp[c]).clamp(0.0, 1.0))
        })
        .collect();
    let to_z = |plan: &[ControlInput]| -> Vec<f64> {
        plan.iter()
            .flat_map(|u| {
                let u = u.to_array();
                (0..3).map(move |c| (u[c] - lo[c]) / sp[c])
            })
            .zip(&zub)
            .map(|(z, ub)| z.clamp(0.0, *ub))
            .collect()
    };
    let to_u = |z: &[f64]| -> Vec<ControlInput> {
        z.chunks(3).map(|c| ControlInput::new(lo[0] + c[0] * sp[0], lo[1] + c[1] * sp[1], lo[2] + c[2] * sp[2])).collect()
    };

    let start: Vec<ControlInput> = match warm {
        Some(w) if s.warm_start && !w.is_empty() => {
            let mut w = w.to_vec();
            let last = *w.last().expect("non-empty");
            w.resize(n, last);
            w
        }
        _ => vec![ctx.u_prev; n],
    };
    let z0 = to_z(&start);
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ (ctx.k0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut candidates: Vec<Vec<f64>> = vec![z0.clone()];
    let (mut iterations, mut evaluations) = (0, 0);

    for restart in 0..s.restarts {
        let mut z: Vec<f64> = if restart == 0 {
            z0.clone()
        } else {
            z0.iter().zip(&zub).map(|(v, ub)| (v + rng.gen_range(-s.perturbation..=s.perturbation)).clamp(0.0, *ub)).collect()
        };
        let (terms, gu) = objective_gradient(&to_u(&z), predictor, ctx, cfg)?;
        evaluations += 1;
        let mut f = terms.total();
        let mut g = scale_gradient(&gu, &sp);
        let mut vel = vec![0.0; z.len()];
        let mut step = s.step;
        for _ in 0..s.iterations {
            iterations += 1;
            let gmax = z
                .iter()
                .zip(&g)
                .zip(&zub)
                .filter(|((zi, gi), ub)| **ub > 0.0 && !(**zi <= 0.0 && **gi > 0.0) && !(**zi >= **ub && **gi < 0.0))
                .fold(0.0f64, |m, ((_, gi), _)| m.max(gi.abs()));
            // Every component pinned: coast on the momentum alone.
            let scale = if gmax > 0.0 { step / gmax } else { 0.0 };
            let mut trial = z.clone();
            for i in 0..z.len() {
                vel[i] = s.momentum * vel[i] - scale * g[i];
                trial[i] = (z[i] + vel[i]).clamp(0.0, zub[i]);
            }
            let (terms, gu) = objective_gradient(&to_u(&trial), predictor, ctx, cfg)?;
            evaluations += 1;
            if terms.total() < f {
                z = trial;
                f = terms.total();
                g = scale_gradient(&gu, &sp);
            } else {
                step = (step * 0.5).max(s.min_step);
                vel.fill(0.0);
            }
        }
        candidates.push(z);
    }

    let mut best: Option<ControlPlan> = None;
    for z in &candidates {
        let plan = make_feasible(&to_u(z), ctx, cfg, &ceilings);
        let ys = predictor.predict(ctx, &plan)?;
        evaluations += 1;
        let terms = objective_terms(&plan, &ys, ctx, cfg);
        let objective = finite(terms.total(), ctx)?;
        if best.as_ref().is_none_or(|b| objective < b.objective) {
            best = Some(ControlPlan { inputs: plan, objective, terms, iterations: 0, evaluations: 0 });
        }
    }
    let mut best = best.expect("at least the start candidate");
    best.iterations = iterations;
    best.evaluations = evaluations;
    Ok(best)
}

fn scale_gradient(gu: &[[f64; 3]], sp: &[f64; 3]) -> Vec<f64> {
    gu.iter().flat_map(|g| (0..3).map(move |c| g[c] * sp[c])).collect()
}
