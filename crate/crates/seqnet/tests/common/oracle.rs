//! Straight-line reference for the cells and the full stack. Slow and
//! allocation-heavy on purpose; it recomputes everything, including the
//! top backward direction over the whole window.

#![allow(dead_code)]

fn sig(a: f64) -> f64 {
    1.0 / (1.0 + (-a).exp())
}

/// Gate block `g` of a `G·H × (H+I)` row-major matrix applied to `[h, x]`.
fn gate(w: &[f64], b: &[f64], g: usize, hsz: usize, v: &[f64]) -> Vec<f64> {
    let cols = v.len();
    (0..hsz)
        .map(|j| {
            let r = g * hsz + j;
            let mut s = b[r];
            for c in 0..cols {
                s += w[r * cols + c] * v[c];
            }
            s
        })
        .collect()
}

fn cat(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().chain(b).copied().collect()
}

pub fn lstm(w: &[f64], b: &[f64], x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = h.len();
    let v = cat(h, x);
    let i: Vec<f64> = gate(w, b, 0, n, &v).into_iter().map(sig).collect();
    let f: Vec<f64> = gate(w, b, 1, n, &v).into_iter().map(sig).collect();
    let cand: Vec<f64> = gate(w, b, 2, n, &v).into_iter().map(f64::tanh).collect();
    let o: Vec<f64> = gate(w, b, 3, n, &v).into_iter().map(sig).collect();
    let c_new: Vec<f64> = (0..n).map(|j| f[j] * c[j] + i[j] * cand[j]).collect();
    let h_new = (0..n).map(|j| o[j] * c_new[j].tanh()).collect();
    (h_new, c_new)
}

pub fn gru(w: &[f64], b: &[f64], x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = h.len();
    let v = cat(h, x);
    let z: Vec<f64> = gate(w, b, 0, n, &v).into_iter().map(sig).collect();
    let r: Vec<f64> = gate(w, b, 1, n, &v).into_iter().map(sig).collect();
    let rh: Vec<f64> = (0..n).map(|j| r[j] * h[j]).collect();
    let cand: Vec<f64> = gate(w, b, 2, n, &cat(&rh, x)).into_iter().map(f64::tanh).collect();
    (0..n).map(|j| (1.0 - z[j]) * h[j] + z[j] * cand[j]).collect()
}

#[derive(Clone, Copy)]
pub struct Shape {
    pub lstm: bool,
    pub input: usize,
    pub hidden: usize,
    pub layers: usize,
    pub head_hidden: usize,
    pub output: usize,
}

/// Run one direction over a sequence of vectors.
fn direction(s: &Shape, w: &[f64], b: &[f64], xs: &[Vec<f64>], reverse: bool) -> Vec<Vec<f64>> {
    let t = xs.len();
    let mut out = vec![vec![0.0; s.hidden]; t];
    let mut h = vec![0.0; s.hidden];
    let mut c = vec![0.0; s.hidden];
    let order: Vec<usize> = if reverse { (0..t).rev().collect() } else { (0..t).collect() };
    for k in order {
        if s.lstm {
            let (h2, c2) = lstm(w, b, &xs[k], &h, &c);
            h = h2;
            c = c2;
        } else {
            h = gru(w, b, &xs[k], &h);
        }
        out[k] = h.clone();
    }
    out
}

/// Full forward pass: returns (top-layer final step, head output).
pub fn network(s: &Shape, params: &[f64], window: &[f64], mask: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let gates = if s.lstm { 4 } else { 3 };
    let t = window.len() / s.input;
    let mut seq: Vec<Vec<f64>> = (0..t).map(|k| window[k * s.input..(k + 1) * s.input].to_vec()).collect();
    let mut at = 0;
    for _ in 0..s.layers {
        let inp = seq[0].len();
        let wlen = gates * s.hidden * (s.hidden + inp);
        let blen = gates * s.hidden;
        let wf = &params[at..at + wlen];
        let bf = &params[at + wlen..at + wlen + blen];
        at += wlen + blen;
        let wb = &params[at..at + wlen];
        let bb = &params[at + wlen..at + wlen + blen];
        at += wlen + blen;
        let fwd = direction(s, wf, bf, &seq, false);
        let bwd = direction(s, wb, bb, &seq, true);
        seq = (0..t).map(|k| cat(&fwd[k], &bwd[k])).collect();
    }
    let last = seq[t - 1].clone();
    let width = last.len();
    let w1 = &params[at..at + s.head_hidden * width];
    at += s.head_hidden * width;
    let b1 = &params[at..at + s.head_hidden];
    at += s.head_hidden;
    let w2 = &params[at..at + s.output * s.head_hidden];
    at += s.output * s.head_hidden;
    let b2 = &params[at..at + s.output];
    assert_eq!(at + s.output, params.len(), "oracle layout disagrees with parameter count");
    let hid: Vec<f64> = (0..s.head_hidden)
        .map(|j| {
            let a: f64 = (0..width).map(|c| w1[j * width + c] * last[c]).sum::<f64>() + b1[j];
            a.max(0.0) * mask[j]
        })
        .collect();
    let out = (0..s.output)
        .map(|k| (0..s.head_hidden).map(|j| w2[k * s.head_hidden + j] * hid[j]).sum::<f64>() + b2[k])
        .collect();
    (last, out)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
