mod common;

use common::oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqnet::{CellKind, Dims, Mode, NetworkWeights, Scaler, Tape};

fn net(kind: CellKind, dims: Dims, seed: u64) -> NetworkWeights {
    NetworkWeights::init(kind, dims, Scaler::identity(dims.input + dims.output), seed).unwrap()
}

fn window(rng: &mut ChaCha8Rng, steps: usize, input: usize) -> Vec<f64> {
    (0..steps * input).map(|_| rng.gen::<f64>()).collect()
}

fn shape(kind: CellKind, d: Dims) -> oracle::Shape {
    oracle::Shape {
        lstm: kind == CellKind::Lstm,
        input: d.input,
        hidden: d.hidden,
        layers: d.layers,
        head_hidden: d.head_hidden,
        output: d.output,
    }
}

#[test]
fn forward_matches_full_transcription() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (i, kind) in [CellKind::Lstm, CellKind::Gru].into_iter().cycle().take(8).enumerate() {
        let dims = if i < 4 { Dims::default() } else { Dims { input: 3, hidden: 2, layers: 3, head_hidden: 5, output: 2 } };
        let w = net(kind, dims, i as u64);
        let win = window(&mut rng, 2 + i * 3, dims.input);
        let mask: Vec<f64> = (0..dims.head_hidden).map(|j| if j % 3 == 0 { 0.0 } else { 1.25 }).collect();
        let mut tape = Tape::default();
        w.forward_recorded(&win, Some(&mask), &mut tape).unwrap();
        let (last, out) = oracle::network(&shape(kind, dims), w.params(), &win, &mask);
        for (a, b) in tape.output().iter().zip(&out).chain(tape.stack_output().iter().zip(&last)) {
            assert!(oracle::rel_err(*a, *b) <= 1e-12, "{kind}: {a} vs {b}");
        }
    }
}

#[test]
fn architecture_widths_and_parameter_ratio() {
    let dims = Dims::default();
    let lstm = net(CellKind::Lstm, dims, 1);
    let gru = net(CellKind::Gru, dims, 1);
    assert_eq!(3 * lstm.recurrent_param_count(), 4 * gru.recurrent_param_count());
    let head = lstm.param_count() - lstm.recurrent_param_count();
    assert_eq!(head, gru.param_count() - gru.recurrent_param_count());
    assert_eq!(head, 32 * 16 + 16 + 16 * 4 + 4);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let win = window(&mut rng, 6, 11);
    for w in [&lstm, &gru] {
        let mut tape = Tape::default();
        w.forward_recorded(&win, None, &mut tape).unwrap();
        assert_eq!(tape.stack_output().len(), 32);
        assert_eq!(tape.output().len(), 4);
    }
}

#[test]
fn eval_is_deterministic_and_dropout_zero_matches() {
    let w = net(CellKind::Gru, Dims::default(), 5);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let win = window(&mut rng, 12, 11);
    let a = w.forward(&win, Mode::Eval).unwrap();
    let b = w.forward(&win, Mode::Eval).unwrap();
    assert_eq!(a, b);
    let c = w.forward(&win, Mode::Train { dropout: 0.0, rng: &mut rng }).unwrap();
    assert_eq!(a, c);
    let d = w.forward(&win, Mode::Train { dropout: 0.5, rng: &mut rng }).unwrap();
    assert_ne!(a, d);
}

#[test]
fn zero_head_weights_output_the_bias() {
    let mut w = net(CellKind::Lstm, Dims::default(), 9);
    let r = w.head_ranges();
    w.params_mut()[r.w2.clone()].fill(0.0);
    let bias = w.params()[r.b2.clone()].to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(w.forward(&window(&mut rng, 3, 11), Mode::Eval).unwrap(), bias);
}

#[test]
fn malformed_windows_are_rejected() {
    let w = net(CellKind::Lstm, Dims::default(), 0);
    assert!(w.forward(&[], Mode::Eval).is_err());
    assert!(w.forward(&[0.0; 12], Mode::Eval).is_err());
    let mut tape = Tape::default();
    assert!(w.forward_recorded(&[0.0; 11], Some(&[1.0; 3]), &mut tape).is_err());
}

#[test]
fn initialization_is_seeded_and_bounded() {
    let a = net(CellKind::Lstm, Dims::default(), 3);
    assert_eq!(a, net(CellKind::Lstm, Dims::default(), 3));
    assert_ne!(a.params(), net(CellKind::Lstm, Dims::default(), 4).params());
    let k = 1.0 / 4.0;
    assert!(a.params()[..a.recurrent_param_count()].iter().all(|p| p.abs() < k));
}
