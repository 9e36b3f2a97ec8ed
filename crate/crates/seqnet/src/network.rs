//! Bidirectional recurrent stack with a two-layer dense head.
//!
//! Parameters live in one flat vector. The order, which is also the
//! checkpoint order, is: for each layer, forward direction then backward
//! direction, the cell weight matrix followed by its bias (see
//! [`crate::cell`]); then head weights `W1` (`head_hidden × 2H`), `b1`,
//! `W2` (`output × head_hidden`), `b2`, all row-major.
//!
//! A window is a row-major `T × input` slice. Each layer emits, per time
//! step, the forward hidden state followed by the backward one; the head
//! reads the last time step of the top layer. The top backward direction
//! contributes only its first processed step to that read-out, so it is the
//! only step computed.

use std::ops::Range;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cell::{axpy, dot, gru_step, lstm_step, CellKind};
use crate::scaler::Scaler;
use crate::{Error, Result};

pub const DIRECTIONS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub input: usize,
    /// Hidden units per direction.
    pub hidden: usize,
    pub layers: usize,
    pub head_hidden: usize,
    pub output: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Self { input: 11, hidden: 16, layers: 2, head_hidden: 16, output: 4 }
    }
}

impl Dims {
    /// Width of each time step emitted by a bidirectional layer.
    pub fn stack_width(&self) -> usize {
        DIRECTIONS * self.hidden
    }

    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.hidden == 0 || self.layers == 0 || self.head_hidden == 0 || self.output == 0 {
            return Err(Error::Shape(format!("all dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Slot {
    w: usize,
    b: usize,
    input: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Layout {
    slots: Vec<Slot>,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    recurrent: usize,
    total: usize,
}

impl Layout {
    fn new(kind: CellKind, d: &Dims) -> Self {
        let rows = kind.gates() * d.hidden;
        let mut slots = Vec::with_capacity(d.layers * DIRECTIONS);
        let mut at = 0;
        for l in 0..d.layers {
            let input = if l == 0 { d.input } else { d.stack_width() };
            for _ in 0..DIRECTIONS {
                let w = at;
                let b = w + rows * (d.hidden + input);
                at = b + rows;
                slots.push(Slot { w, b, input });
            }
        }
        let recurrent = at;
        let w1 = at;
        let b1 = w1 + d.head_hidden * d.stack_width();
        let w2 = b1 + d.head_hidden;
        let b2 = w2 + d.output * d.head_hidden;
        Self { slots, w1, b1, w2, b2, recurrent, total: b2 + d.output }
    }

    fn slot_ranges(&self, kind: CellKind, hidden: usize, s: usize) -> (Range<usize>, Range<usize>) {
        let slot = &self.slots[s];
        (slot.w..slot.b, slot.b..slot.b + kind.gates() * hidden)
    }
}

/// Index ranges of the head parameters inside the flat vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadRanges {
    pub w1: Range<usize>,
    pub b1: Range<usize>,
    pub w2: Range<usize>,
    pub b2: Range<usize>,
}

pub enum Mode<'a> {
    Eval,
    /// Inverted dropout with the given rate after the head's hidden layer.
    Train { dropout: f64, rng: &'a mut dyn RngCore },
}

/// Trained (or initialized) network plus the scaler its inputs assume.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights {
    kind: CellKind,
    dims: Dims,
    params: Vec<f64>,
    scaler: Scaler,
    layout: Layout,
}

/// Activations recorded by a forward pass, consumed by [`NetworkWeights::backward`].
#[derive(Debug, Clone, Default)]
pub struct Tape {
    steps: usize,
    input: Vec<f64>,
    /// Per layer, `T × 2H` outputs.
    seq: Vec<Vec<f64>>,
    /// Per layer and direction, `T × G·H` activated gates.
    gates: Vec<Vec<f64>>,
    /// Per layer and direction, `T × H` cell states (LSTM only).
    cells: Vec<Vec<f64>>,
    pre1: Vec<f64>,
    act1: Vec<f64>,
    mask: Vec<f64>,
    out: Vec<f64>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        &self.out
    }

    /// Final-step features of the top recurrent layer.
    pub fn stack_output(&self) -> &[f64] {
        let top = self.seq.last().map(Vec::as_slice).unwrap_or(&[]);
        let width = top.len() / self.steps.max(1);
        &top[top.len() - width..]
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

impl NetworkWeights {
    /// Seeded initialization: recurrent weights and biases uniform in
    /// `±1/√hidden`, head layers uniform in `±1/√fan_in`.
    pub fn init(kind: CellKind, dims: Dims, scaler: Scaler, seed: u64) -> Result<Self> {
        dims.validate()?;
        let layout = Layout::new(kind, &dims);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; layout.total];
        let k = 1.0 / (dims.hidden as f64).sqrt();
        for p in &mut params[..layout.recurrent] {
            *p = rng.gen_range(-k..k);
        }
        let k1 = 1.0 / (dims.stack_width() as f64).sqrt();
        for p in &mut params[layout.w1..layout.w2] {
            *p = rng.gen_range(-k1..k1);
        }
        let k2 = 1.0 / (dims.head_hidden as f64).sqrt();
        for p in &mut params[layout.w2..] {
            *p = rng.gen_range(-k2..k2);
        }
        Self::from_parts(kind, dims, params, scaler)
    }

    pub fn from_parts(kind: CellKind, dims: Dims, params: Vec<f64>, scaler: Scaler) -> Result<Self> {
        dims.validate()?;
        let layout = Layout::new(kind, &dims);
        if params.len() != layout.total {
            return Err(Error::Shape(format!("{kind} network {dims:?} has {} parameters, got {}", layout.total, params.len())));
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("parameter {i}")));
        }
        if scaler.channels() != dims.input + dims.output {
            return Err(Error::Shape(format!(
                "scaler has {} channels, network needs {}",
                scaler.channels(),
                dims.input + dims.output
            )));
        }
        Ok(Self { kind, dims, params, scaler, layout })
    }

    pub fn kind(&self) -> CellKind {
        self.kind
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    pub fn param_count(&self) -> usize {
        self.layout.total
    }

    /// Parameters of the recurrent stack only (excluding the head).
    pub fn recurrent_param_count(&self) -> usize {
        self.layout.recurrent
    }

    /// Weight and bias ranges of the cell at `layer`, `direction` (0 forward, 1 backward).
    pub fn cell_ranges(&self, layer: usize, direction: usize) -> (Range<usize>, Range<usize>) {
        self.layout.slot_ranges(self.kind, self.dims.hidden, layer * DIRECTIONS + direction)
    }

    pub fn head_ranges(&self) -> HeadRanges {
        let l = &self.layout;
        HeadRanges { w1: l.w1..l.b1, b1: l.b1..l.w2, w2: l.w2..l.b2, b2: l.b2..l.total }
    }

    /// Sum of all parameters with their index, for cheap equality checks.
    pub fn checksum(&self) -> f64 {
        self.params.iter().enumerate().map(|(i, p)| p * (1.0 + (i % 97) as f64)).sum()
    }

    pub fn new_tape(&self) -> Tape {
        Tape::default()
    }

    fn window_steps(&self, window: &[f64]) -> Result<usize> {
        let n = self.dims.input;
        if window.is_empty() {
            return Err(Error::Shape("empty window".into()));
        }
        if window.len() % n != 0 {
            return Err(Error::Shape(format!("window of {} values is not a multiple of {n} features", window.len())));
        }
        Ok(window.len() / n)
    }

    fn prepare(&self, tape: &mut Tape, steps: usize) {
        let d = &self.dims;
        let g = self.kind.gates() * d.hidden;
        tape.steps = steps;
        tape.seq.resize(d.layers, Vec::new());
        for s in &mut tape.seq {
            s.clear();
            s.resize(steps * d.stack_width(), 0.0);
        }
        let slots = d.layers * DIRECTIONS;
        tape.gates.resize(slots, Vec::new());
        tape.cells.resize(slots, Vec::new());
        for s in 0..slots {
            tape.gates[s].resize(steps * g, 0.0);
            if self.kind == CellKind::Lstm {
                tape.cells[s].resize(steps * d.hidden, 0.0);
            }
        }
        tape.pre1.resize(d.head_hidden, 0.0);
        tape.act1.resize(d.head_hidden, 0.0);
        tape.out.resize(d.output, 0.0);
    }

    /// Forward pass on a normalized window; returns the raw head output.
    pub fn forward(&self, window: &[f64], mode: Mode<'_>) -> Result<Vec<f64>> {
        let mut tape = Tape::default();
        let mask = match mode {
            Mode::Eval => None,
            Mode::Train { dropout, rng } => Some(dropout_mask(self.dims.head_hidden, dropout, rng)?),
        };
        self.forward_recorded(window, mask.as_deref(), &mut tape)?;
        Ok(tape.out)
    }

    /// Forward pass keeping every activation in `tape`. `mask` multiplies the
    /// head's hidden activations (already scaled for inverted dropout).
    pub fn forward_recorded(&self, window: &[f64], mask: Option<&[f64]>, tape: &mut Tape) -> Result<()> {
        let steps = self.window_steps(window)?;
        let d = self.dims;
        self.prepare(tape, steps);
        tape.input.clear();
        tape.input.extend_from_slice(window);
        tape.mask.clear();
        match mask {
            Some(m) if m.len() != d.head_hidden => {
                return Err(Error::Shape(format!("dropout mask has {} entries, head has {}", m.len(), d.head_hidden)))
            }
            Some(m) => tape.mask.extend_from_slice(m),
            None => tape.mask.resize(d.head_hidden, 1.0),
        }

        let nh = d.hidden;
        let width = d.stack_width();
        let g = self.kind.gates() * nh;
        let mut hp = vec![0.0; nh];
        let mut cp = vec![0.0; nh];
        let mut rh = vec![0.0; nh];
        for l in 0..d.layers {
            let (lower, upper) = tape.seq.split_at_mut(l);
            let input: &[f64] = if l == 0 { &tape.input } else { &lower[l - 1] };
            let out = &mut upper[0];
            for dir in 0..DIRECTIONS {
                let s = l * DIRECTIONS + dir;
                let slot = &self.layout.slots[s];
                let w = &self.params[slot.w..slot.b];
                let b = &self.params[slot.b..slot.b + g];
                let count = if l + 1 == d.layers && dir == 1 { 1 } else { steps };
                for n in 0..count {
                    let t = if dir == 0 { n } else { steps - 1 - n };
                    let prev = (n > 0).then(|| if dir == 0 { t - 1 } else { t + 1 });
                    match prev {
                        Some(p) => {
                            hp.copy_from_slice(&out[p * width + dir * nh..p * width + dir * nh + nh]);
                            if self.kind == CellKind::Lstm {
                                cp.copy_from_slice(&tape.cells[s][p * nh..(p + 1) * nh]);
                            }
                        }
                        None => {
                            hp.fill(0.0);
                            cp.fill(0.0);
                        }
                    }
                    let x = &input[t * slot.input..(t + 1) * slot.input];
                    let gates = &mut tape.gates[s][t * g..(t + 1) * g];
                    let h = &mut out[t * width + dir * nh..t * width + dir * nh + nh];
                    match self.kind {
                        CellKind::Lstm => {
                            let c = &mut tape.cells[s][t * nh..(t + 1) * nh];
                            lstm_step(w, b, x, &hp, &cp, gates, c, h);
                        }
                        CellKind::Gru => gru_step(w, b, x, &hp, gates, &mut rh, h),
                    }
                }
            }
        }

        let l = &self.layout;
        let top = &tape.seq[d.layers - 1][(steps - 1) * width..steps * width];
        for j in 0..d.head_hidden {
            let a = dot(&self.params[l.w1 + j * width..l.w1 + (j + 1) * width], top) + self.params[l.b1 + j];
            tape.pre1[j] = a;
            tape.act1[j] = a.max(0.0) * tape.mask[j];
        }
        for k in 0..d.output {
            let row = &self.params[l.w2 + k * d.head_hidden..l.w2 + (k + 1) * d.head_hidden];
            tape.out[k] = dot(row, &tape.act1) + self.params[l.b2 + k];
        }
        if tape.out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network output".into()));
        }
        Ok(())
    }

    /// Reverse pass through a recorded forward pass.
    ///
    /// `d_out` is the loss gradient with respect to the head output.
    /// Parameter gradients are added into `param_grad` (layout order) and
    /// window gradients into `input_grad`; either may be skipped.
    pub fn backward(
        &self,
        tape: &Tape,
        d_out: &[f64],
        mut param_grad: Option<&mut [f64]>,
        input_grad: Option<&mut [f64]>,
    ) -> Result<()> {
        let d = self.dims;
        let steps = tape.steps;
        if steps == 0 || tape.seq.len() != d.layers {
            return Err(Error::Shape("tape holds no forward pass".into()));
        }
        if d_out.len() != d.output {
            return Err(Error::Shape(format!("output gradient has {} entries, expected {}", d_out.len(), d.output)));
        }
        if let Some(gr) = param_grad.as_deref() {
            if gr.len() != self.layout.total {
                return Err(Error::Shape(format!("gradient buffer has {} entries, expected {}", gr.len(), self.layout.total)));
            }
        }
        if let Some(ig) = input_grad.as_deref() {
            if ig.len() != steps * d.input {
                return Err(Error::Shape(format!("input gradient buffer has {} entries, expected {}", ig.len(), steps * d.input)));
            }
        }
        let want_input = input_grad.is_some();
        let nh = d.hidden;
        let width = d.stack_width();
        let l = &self.layout;
        let p = &self.params;

        // Head.
        let mut d_act1 = vec![0.0; d.head_hidden];
        for (k, &g) in d_out.iter().enumerate() {
            axpy(g, &p[l.w2 + k * d.head_hidden..l.w2 + (k + 1) * d.head_hidden], &mut d_act1);
            if let Some(gr) = param_grad.as_deref_mut() {
                axpy(g, &tape.act1, &mut gr[l.w2 + k * d.head_hidden..l.w2 + (k + 1) * d.head_hidden]);
                gr[l.b2 + k] += g;
            }
        }
        let top = &tape.seq[d.layers - 1][(steps - 1) * width..steps * width];
        let mut d_seq = vec![0.0; steps * width];
        {
            let d_top = &mut d_seq[(steps - 1) * width..];
            for j in 0..d.head_hidden {
                let g = if tape.pre1[j] > 0.0 { d_act1[j] * tape.mask[j] } else { 0.0 };
                if g == 0.0 {
                    continue;
                }
                axpy(g, &p[l.w1 + j * width..l.w1 + (j + 1) * width], d_top);
                if let Some(gr) = param_grad.as_deref_mut() {
                    axpy(g, top, &mut gr[l.w1 + j * width..l.w1 + (j + 1) * width]);
                    gr[l.b1 + j] += g;
                }
            }
        }

        let gsz = self.kind.gates() * nh;
        let zeros = vec![0.0; nh];
        let mut da = vec![0.0; gsz];
        let mut dh_carry = vec![0.0; nh];
        let mut dc_carry = vec![0.0; nh];
        let mut next_h = vec![0.0; nh];
        let mut next_c = vec![0.0; nh];
        let mut rh = vec![0.0; nh];
        let mut d_rh = vec![0.0; nh];
        let mut dh = vec![0.0; nh];
        for layer in (0..d.layers).rev() {
            let in_dim = l.slots[layer * DIRECTIONS].input;
            let input: &[f64] = if layer == 0 { &tape.input } else { &tape.seq[layer - 1] };
            let need_dx = layer > 0 || want_input;
            let mut d_in = vec![0.0; if need_dx { steps * in_dim } else { 0 }];
            let out = &tape.seq[layer];
            for dir in 0..DIRECTIONS {
                let s = layer * DIRECTIONS + dir;
                let slot = &l.slots[s];
                let w = &p[slot.w..slot.b];
                let cols = nh + in_dim;
                let count = if layer + 1 == d.layers && dir == 1 { 1 } else { steps };
                dh_carry.fill(0.0);
                dc_carry.fill(0.0);
                for n in (0..count).rev() {
                    let t = if dir == 0 { n } else { steps - 1 - n };
                    let prev = (n > 0).then(|| if dir == 0 { t - 1 } else { t + 1 });
                    let h_prev = prev.map_or(&zeros[..], |q| &out[q * width + dir * nh..q * width + dir * nh + nh]);
                    let x = &input[t * in_dim..(t + 1) * in_dim];
                    let gates = &tape.gates[s][t * gsz..(t + 1) * gsz];
                    for j in 0..nh {
                        dh[j] = d_seq[t * width + dir * nh + j] + dh_carry[j];
                    }
                    next_h.fill(0.0);
                    match self.kind {
                        CellKind::Lstm => {
                            let c = &tape.cells[s][t * nh..(t + 1) * nh];
                            let c_prev = prev.map_or(&zeros[..], |q| &tape.cells[s][q * nh..(q + 1) * nh]);
                            for j in 0..nh {
                                let (i, f, g, o) = (gates[j], gates[nh + j], gates[2 * nh + j], gates[3 * nh + j]);
                                let tc = c[j].tanh();
                                let dc = dc_carry[j] + dh[j] * o * (1.0 - tc * tc);
                                da[j] = dc * g * i * (1.0 - i);
                                da[nh + j] = dc * c_prev[j] * f * (1.0 - f);
                                da[2 * nh + j] = dc * i * (1.0 - g * g);
                                da[3 * nh + j] = dh[j] * tc * o * (1.0 - o);
                                next_c[j] = dc * f;
                            }
                            let dx = if need_dx { Some(&mut d_in[t * in_dim..(t + 1) * in_dim]) } else { None };
                            rows_backward(w, cols, 0..gsz, &da, h_prev, x, &mut next_h, dx, param_grad.as_deref_mut().map(|gr| (gr, slot)));
                            std::mem::swap(&mut dc_carry, &mut next_c);
                        }
                        CellKind::Gru => {
                            for j in 0..nh {
                                let (z, r, cand) = (gates[j], gates[nh + j], gates[2 * nh + j]);
                                rh[j] = r * h_prev[j];
                                da[j] = dh[j] * (cand - h_prev[j]) * z * (1.0 - z);
                                da[2 * nh + j] = dh[j] * z * (1.0 - cand * cand);
                                next_h[j] = dh[j] * (1.0 - z);
                            }
                            d_rh.fill(0.0);
                            {
                                let dx = if need_dx { Some(&mut d_in[t * in_dim..(t + 1) * in_dim]) } else { None };
                                rows_backward(w, cols, 2 * nh..gsz, &da, &rh, x, &mut d_rh, dx, param_grad.as_deref_mut().map(|gr| (gr, slot)));
                            }
                            for j in 0..nh {
                                let r = gates[nh + j];
                                da[nh + j] = d_rh[j] * h_prev[j] * r * (1.0 - r);
                                next_h[j] += d_rh[j] * r;
                            }
                            let dx = if need_dx { Some(&mut d_in[t * in_dim..(t + 1) * in_dim]) } else { None };
                            rows_backward(w, cols, 0..2 * nh, &da, h_prev, x, &mut next_h, dx, param_grad.as_deref_mut().map(|gr| (gr, slot)));
                        }
                    }
                    std::mem::swap(&mut dh_carry, &mut next_h);
                }
            }
            if layer > 0 {
                d_seq = d_in;
            } else if let Some(ig) = input_grad {
                for (a, b) in ig.iter_mut().zip(&d_in) {
                    *a += b;
                }
                break;
            }
        }
        Ok(())
    }
}

/// Backpropagate pre-activation gradients `da[rows]` through the affine map
/// over `[h, x]`: accumulate into `dh`, `dx` and the slot's parameter
/// gradients.
#[allow(clippy::too_many_arguments)]
#[inline]
fn rows_backward(
    w: &[f64],
    cols: usize,
    rows: Range<usize>,
    da: &[f64],
    h: &[f64],
    x: &[f64],
    dh: &mut [f64],
    mut dx: Option<&mut [f64]>,
    mut grads: Option<(&mut [f64], &Slot)>,
) {
    let nh = h.len();
    for r in rows {
        let g = da[r];
        if g == 0.0 {
            continue;
        }
        let row = &w[r * cols..(r + 1) * cols];
        axpy(g, &row[..nh], dh);
        if let Some(dx) = dx.as_deref_mut() {
            axpy(g, &row[nh..], dx);
        }
        if let Some((gr, slot)) = grads.as_mut() {
            let gw = &mut gr[slot.w + r * cols..slot.w + (r + 1) * cols];
            axpy(g, h, &mut gw[..nh]);
            axpy(g, x, &mut gw[nh..]);
            gr[slot.b + r] += g;
        }
    }
}

/// Inverted-dropout mask: each unit kept with probability `1 − rate` and
/// scaled by `1/(1 − rate)`.
pub fn dropout_mask(n: usize, rate: f64, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
    }
    if rate == 0.0 {
        return Ok(vec![1.0; n]);
    }
    let keep = 1.0 / (1.0 - rate);
    Ok((0..n).map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep }).collect())
}
