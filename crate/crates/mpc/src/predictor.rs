//! Multi-step output predictors used inside the optimizer.

use greenhouse_core::dynamics::{measure_jacobian, rk4_step_with_tape, Rk4Tape};
use greenhouse_core::{measure, ControlInput, Disturbance, ModelParams, Output, Record, State, SAMPLE_INTERVAL_S};
use seqnet::{NetworkWeights, Tape, FEATURES, TARGETS};

use crate::{Error, Result};

/// Everything known at the start of a horizon.
#[derive(Debug, Clone, Copy)]
pub struct HorizonContext<'a> {
    pub k0: usize,
    /// True state, only usable by the physical predictor.
    pub x: State,
    pub y: Output,
    /// Records before `k0` with the inputs that were applied.
    pub history: &'a [Record],
    /// Input applied over the previous interval.
    pub u_prev: ControlInput,
    /// Disturbances from `k0` on; at least the horizon length, longer is
    /// used to anticipate night-time.
    pub forecast: &'a [Disturbance],
}

/// Cost gradient callback: given predicted outputs `y(k0+1..=k0+N)`,
/// return `∂J/∂y` for each.
pub type OutputCostGrad<'c> = dyn FnMut(&[Output]) -> Result<Vec<[f64; 4]>> + 'c;

pub trait Predictor {
    fn name(&self) -> String;

    /// Predicted `y(k0+j+1)` for each planned input `u(k0+j)`.
    fn predict(&self, ctx: &HorizonContext<'_>, plan: &[ControlInput]) -> Result<Vec<Output>>;

    /// Predictions plus `∂J/∂u(k0+j)` for a cost that depends on the plan only
    /// through the predictions.
    fn predict_with_gradient(
        &self,
        ctx: &HorizonContext<'_>,
        plan: &[ControlInput],
        cost: &mut OutputCostGrad<'_>,
    ) -> Result<(Vec<Output>, Vec<[f64; 3]>)>;
}

fn check_plan(ctx: &HorizonContext<'_>, plan: &[ControlInput]) -> Result<()> {
    if plan.is_empty() {
        return Err(Error::Config("empty plan".into()));
    }
    if ctx.forecast.len() < plan.len() {
        return Err(Error::Config(format!("forecast covers {} steps, plan has {}", ctx.forecast.len(), plan.len())));
    }
    Ok(())
}

/// The simulator itself: RK4 rollout from the true state, gradients by the
/// discrete adjoint of the integrator.
#[derive(Debug, Clone)]
pub struct OraclePredictor {
    pub params: ModelParams,
    pub h: f64,
}

impl Default for OraclePredictor {
    fn default() -> Self {
        Self { params: ModelParams::default(), h: SAMPLE_INTERVAL_S }
    }
}

impl OraclePredictor {
    fn rollout(&self, ctx: &HorizonContext<'_>, plan: &[ControlInput], tapes: Option<&mut Vec<(Rk4Tape, State)>>) -> Result<Vec<Output>> {
        check_plan(ctx, plan)?;
        let mut x = ctx.x;
        let mut out = Vec::with_capacity(plan.len());
        let mut tapes = tapes;
        for (u, d) in plan.iter().zip(ctx.forecast) {
            let (next, tape) = rk4_step_with_tape(&x, u, d, &self.params, self.h)?;
            x = next;
            out.push(measure(&x, &self.params)?);
            if let Some(t) = tapes.as_deref_mut() {
                t.push((tape, x));
            }
        }
        Ok(out)
    }
}

impl Predictor for OraclePredictor {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn predict(&self, ctx: &HorizonContext<'_>, plan: &[ControlInput]) -> Result<Vec<Output>> {
        self.rollout(ctx, plan, None)
    }

    fn predict_with_gradient(
        &self,
        ctx: &HorizonContext<'_>,
        plan: &[ControlInput],
        cost: &mut OutputCostGrad<'_>,
    ) -> Result<(Vec<Output>, Vec<[f64; 3]>)> {
        let mut tapes = Vec::with_capacity(plan.len());
        let ys = self.rollout(ctx, plan, Some(&mut tapes))?;
        let gy = cost(&ys)?;
        let mut gu = vec![[0.0; 3]; plan.len()];
        let mut lam = [0.0; 4];
        for j in (0..plan.len()).rev() {
            let (tape, x_next) = &tapes[j];
            let jm = measure_jacobian(x_next, &self.params)?;
            for (r, row) in jm.iter().enumerate() {
                for c in 0..4 {
                    lam[c] += row[c] * gy[j][r];
                }
            }
            let (lx, lu) = tape.pullback(lam);
            lam = lx;
            gu[j] = lu;
        }
        Ok((ys, gu))
    }
}

/// A trained network rolled forward on its own predictions.
///
/// The window for predicting `y(k0+j+1)` holds the records at
/// `k0+j−w+1 ..= k0+j`: logged history before `k0`, then the forecast,
/// the plan and the outputs (measured at `k0`, predicted after). Steps
/// before the first logged record repeat the earliest available one.
#[derive(Debug, Clone)]
pub struct SurrogatePredictor {
    pub weights: NetworkWeights,
    pub window: usize,
}

#[derive(Clone, Copy)]
enum Source {
    History(usize),
    /// Horizon step `i`: forecast `d(k0+i)`, plan `u(k0+i)`, output
    /// measured (`i = 0`) or predicted by step `i − 1`.
    Plan(usize),
}

impl SurrogatePredictor {
    pub fn new(weights: NetworkWeights, window: usize) -> Result<Self> {
        let d = weights.dims();
        if window == 0 || d.input != FEATURES || d.output != TARGETS {
            return Err(Error::Config(format!("surrogate needs {FEATURES} inputs, {TARGETS} outputs and a window, got {d:?} / {window}")));
        }
        Ok(Self { weights, window })
    }

    fn sources(&self, ctx: &HorizonContext<'_>, j: usize) -> Vec<Source> {
        let hist = &ctx.history[ctx.history.len().saturating_sub(self.window)..];
        let first = if hist.is_empty() { Source::Plan(0) } else { Source::History(0) };
        // Window rows are absolute steps k0+j−w+1 ..= k0+j, written as
        // offsets from k0.
        (0..self.window)
            .map(|r| {
                let off = j as isize + r as isize + 1 - self.window as isize;
                if off >= 0 {
                    Source::Plan(off as usize)
                } else {
                    let back = (-off) as usize;
                    if back <= hist.len() {
                        Source::History(hist.len() - back)
                    } else {
                        first
                    }
                }
            })
            .collect()
    }

    fn run(&self, ctx: &HorizonContext<'_>, plan: &[ControlInput], mut tapes: Option<&mut Vec<(Tape, Vec<Source>)>>) -> Result<Vec<Output>> {
        check_plan(ctx, plan)?;
        let s = self.weights.scaler();
        let hist = &ctx.history[ctx.history.len().saturating_sub(self.window)..];
        let hist_feats: Vec<[f64; FEATURES]> = hist.iter().map(|r| s.features(r)).collect();
        let mut preds: Vec<Output> = Vec::with_capacity(plan.len());
        let mut window = vec![0.0; self.window * FEATURES];
        let mut tape = Tape::default();
        for j in 0..plan.len() {
            let sources = self.sources(ctx, j);
            for (r, src) in sources.iter().enumerate() {
                let row = &mut window[r * FEATURES..(r + 1) * FEATURES];
                match *src {
                    Source::History(i) => row.copy_from_slice(&hist_feats[i]),
                    Source::Plan(i) => {
                        let y = if i == 0 { ctx.y } else { preds[i - 1] };
                        row[..4].copy_from_slice(&ctx.forecast[i].to_array());
                        row[4..7].copy_from_slice(&plan[i].to_array());
                        row[7..].copy_from_slice(&y.to_array());
                        s.normalize_slice(0, row);
                    }
                }
            }
            self.weights.forward_recorded(&window, None, &mut tape)?;
            let mut y = [0.0; TARGETS];
            y.copy_from_slice(tape.output());
            s.denormalize_slice(FEATURES, &mut y);
            preds.push(Output::from_array(y));
            if let Some(t) = tapes.as_deref_mut() {
                t.push((std::mem::take(&mut tape), sources));
            }
        }
        Ok(preds)
    }
}

impl Predictor for SurrogatePredictor {
    fn name(&self) -> String {
        format!("{}{}", self.weights.kind(), self.window)
    }

    fn predict(&self, ctx: &HorizonContext<'_>, plan: &[ControlInput]) -> Result<Vec<Output>> {
        self.run(ctx, plan, None)
    }

    fn predict_with_gradient(
        &self,
        ctx: &HorizonContext<'_>,
        plan: &[ControlInput],
        cost: &mut OutputCostGrad<'_>,
    ) -> Result<(Vec<Output>, Vec<[f64; 3]>)> {
        let mut tapes = Vec::with_capacity(plan.len());
        let ys = self.run(ctx, plan, Some(&mut tapes))?;
        let mut gy = cost(&ys)?;
        let s = self.weights.scaler();
        let mut gu = vec![[0.0; 3]; plan.len()];
        let mut gin = vec![0.0; self.window * FEATURES];
        let mut d_out = [0.0; TARGETS];
        for j in (0..plan.len()).rev() {
            let (tape, sources) = &tapes[j];
            for c in 0..TARGETS {
                d_out[c] = gy[j][c] * s.span(FEATURES + c);
            }
            gin.fill(0.0);
            self.weights.backward(tape, &d_out, None, Some(&mut gin))?;
            for (r, src) in sources.iter().enumerate() {
                if let Source::Plan(i) = *src {
                    let g = &gin[r * FEATURES..(r + 1) * FEATURES];
                    for c in 0..3 {
                        gu[i][c] += g[4 + c] / s.span(4 + c);
                    }
                    if i > 0 {
                        for c in 0..4 {
                            gy[i - 1][c] += g[7 + c] / s.span(7 + c);
                        }
                    }
                }
            }
        }
        Ok((ys, gu))
    }
}
