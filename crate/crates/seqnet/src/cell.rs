//! LSTM and GRU cells.
//!
//! A cell of hidden size `H` over inputs of size `I` owns one weight matrix
//! of shape `G·H × (H + I)`, stored row-major, whose columns act on the
//! concatenation `[h_prev, x]`, and one bias of length `G·H`. Gate blocks
//! are stacked row-wise in the order
//!
//! * LSTM (`G = 4`): input `i`, forget `f`, candidate `C̃`, output `o`;
//! * GRU (`G = 3`): update `z`, reset `r`, candidate `h̃`.
//!
//! The GRU candidate rows act on `[r ⊙ h_prev, x]` instead.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Lstm,
    Gru,
}

impl CellKind {
    /// Gate blocks per cell.
    pub const fn gates(self) -> usize {
        match self {
            CellKind::Lstm => 4,
            CellKind::Gru => 3,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            CellKind::Lstm => 0,
            CellKind::Gru => 1,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(CellKind::Lstm),
            1 => Some(CellKind::Gru),
            _ => None,
        }
    }

    /// Number of weights plus biases of one cell.
    pub const fn param_count(self, input: usize, hidden: usize) -> usize {
        let rows = self.gates() * hidden;
        rows * (hidden + input) + rows
    }
}

impl std::fmt::Display for CellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lstm" => Ok(CellKind::Lstm),
            "gru" => Ok(CellKind::Gru),
            other => Err(Error::Config(format!("unknown cell kind {other:?}"))),
        }
    }
}

#[inline]
pub(crate) fn sigmoid(a: f64) -> f64 {
    1.0 / (1.0 + (-a).exp())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `out[r] = W[r, ..H]·h + W[r, H..]·x + b[r]` for rows `rows`.
#[inline]
pub(crate) fn affine_rows(w: &[f64], b: &[f64], h: &[f64], x: &[f64], rows: std::ops::Range<usize>, out: &mut [f64]) {
    let cols = h.len() + x.len();
    let nh = h.len();
    for (o, r) in out.iter_mut().zip(rows) {
        let row = &w[r * cols..(r + 1) * cols];
        *o = dot(&row[..nh], h) + dot(&row[nh..], x) + b[r];
    }
}

/// One LSTM step into caller-provided buffers. `gates` receives the
/// activated `[i, f, C̃, o]`.
pub(crate) fn lstm_step(
    w: &[f64],
    b: &[f64],
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    gates: &mut [f64],
    c: &mut [f64],
    h: &mut [f64],
) {
    let nh = h_prev.len();
    affine_rows(w, b, h_prev, x, 0..4 * nh, gates);
    for j in 0..nh {
        let i = sigmoid(gates[j]);
        let f = sigmoid(gates[nh + j]);
        let g = gates[2 * nh + j].tanh();
        let o = sigmoid(gates[3 * nh + j]);
        gates[j] = i;
        gates[nh + j] = f;
        gates[2 * nh + j] = g;
        gates[3 * nh + j] = o;
        c[j] = f * c_prev[j] + i * g;
        h[j] = o * c[j].tanh();
    }
}

/// One GRU step. `gates` receives the activated `[z, r, h̃]`; `rh` is
/// scratch of length `H` left holding `r ⊙ h_prev`.
pub(crate) fn gru_step(
    w: &[f64],
    b: &[f64],
    x: &[f64],
    h_prev: &[f64],
    gates: &mut [f64],
    rh: &mut [f64],
    h: &mut [f64],
) {
    let nh = h_prev.len();
    affine_rows(w, b, h_prev, x, 0..2 * nh, &mut gates[..2 * nh]);
    for g in gates[..2 * nh].iter_mut() {
        *g = sigmoid(*g);
    }
    for j in 0..nh {
        rh[j] = gates[nh + j] * h_prev[j];
    }
    affine_rows(w, b, rh, x, 2 * nh..3 * nh, &mut gates[2 * nh..]);
    for j in 0..nh {
        let z = gates[j];
        let n = gates[2 * nh + j].tanh();
        gates[2 * nh + j] = n;
        h[j] = (1.0 - z) * h_prev[j] + z * n;
    }
}

/// Activated gates, cell state (empty for GRU) and hidden state of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStep {
    pub gates: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

fn check_cell(kind: CellKind, w: &[f64], b: &[f64], x: &[f64], h_prev: &[f64]) -> Result<()> {
    let (nh, ni) = (h_prev.len(), x.len());
    let rows = kind.gates() * nh;
    if nh == 0 {
        return Err(Error::Shape("hidden size is zero".into()));
    }
    if w.len() != rows * (nh + ni) || b.len() != rows {
        return Err(Error::Shape(format!(
            "{kind} cell with hidden {nh} and input {ni} needs {} weights and {rows} biases, got {} and {}",
            rows * (nh + ni),
            w.len(),
            b.len()
        )));
    }
    Ok(())
}

pub fn lstm_cell_step(w: &[f64], b: &[f64], x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<CellStep> {
    check_cell(CellKind::Lstm, w, b, x, h_prev)?;
    if c_prev.len() != h_prev.len() {
        return Err(Error::Shape(format!("cell state has {} entries, hidden has {}", c_prev.len(), h_prev.len())));
    }
    let nh = h_prev.len();
    let mut out = CellStep { gates: vec![0.0; 4 * nh], c: vec![0.0; nh], h: vec![0.0; nh] };
    lstm_step(w, b, x, h_prev, c_prev, &mut out.gates, &mut out.c, &mut out.h);
    Ok(out)
}

/// `(h_t, c_t)` of one LSTM step.
pub fn lstm_cell_forward(w: &[f64], b: &[f64], x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = lstm_cell_step(w, b, x, h_prev, c_prev)?;
    Ok((s.h, s.c))
}

pub fn gru_cell_step(w: &[f64], b: &[f64], x: &[f64], h_prev: &[f64]) -> Result<CellStep> {
    check_cell(CellKind::Gru, w, b, x, h_prev)?;
    let nh = h_prev.len();
    let mut out = CellStep { gates: vec![0.0; 3 * nh], c: Vec::new(), h: vec![0.0; nh] };
    let mut rh = vec![0.0; nh];
    gru_step(w, b, x, h_prev, &mut out.gates, &mut rh, &mut out.h);
    Ok(out)
}

pub fn gru_cell_forward(w: &[f64], b: &[f64], x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
    Ok(gru_cell_step(w, b, x, h_prev)?.h)
}
