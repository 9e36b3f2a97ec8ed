mod common;

use common::oracle;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqnet::cell::{gru_cell_step, lstm_cell_step};
use seqnet::{gru_cell_forward, lstm_cell_forward, CellKind};

fn draw(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

#[test]
fn cells_match_transcription() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let (nh, ni) = (1 + case % 5, 1 + case % 7);
        let x = draw(&mut rng, ni, 2.0);
        let h = draw(&mut rng, nh, 1.0);
        let c = draw(&mut rng, nh, 2.0);

        let w = draw(&mut rng, CellKind::Lstm.gates() * nh * (nh + ni), 0.5);
        let b = draw(&mut rng, CellKind::Lstm.gates() * nh, 0.5);
        let (h1, c1) = lstm_cell_forward(&w, &b, &x, &h, &c).unwrap();
        let (h2, c2) = oracle::lstm(&w, &b, &x, &h, &c);
        for (a, e) in h1.iter().chain(&c1).zip(h2.iter().chain(&c2)) {
            worst = worst.max(oracle::rel_err(*a, *e));
        }

        let w = draw(&mut rng, CellKind::Gru.gates() * nh * (nh + ni), 0.5);
        let b = draw(&mut rng, CellKind::Gru.gates() * nh, 0.5);
        let g1 = gru_cell_forward(&w, &b, &x, &h).unwrap();
        let g2 = oracle::gru(&w, &b, &x, &h);
        for (a, e) in g1.iter().zip(&g2) {
            worst = worst.max(oracle::rel_err(*a, *e));
        }
    }
    assert!(worst <= 1e-12, "{worst:e}");
}

proptest! {
    #[test]
    fn gates_stay_in_range(seed in 0u64..10_000, scale in 0.1f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (nh, ni) = (4, 3);
        let x = draw(&mut rng, ni, 3.0);
        let h = draw(&mut rng, nh, 1.0);
        let c = draw(&mut rng, nh, 3.0);

        let w = draw(&mut rng, 4 * nh * (nh + ni), scale);
        let b = draw(&mut rng, 4 * nh, scale);
        let s = lstm_cell_step(&w, &b, &x, &h, &c).unwrap();
        for (k, g) in s.gates.iter().enumerate() {
            let block = k / nh;
            if block == 2 {
                prop_assert!((-1.0..=1.0).contains(g));
            } else {
                // Saturation can round to the closed ends in f64.
                prop_assert!((0.0..=1.0).contains(g));
            }
        }
        prop_assert!(s.h.iter().all(|v| v.abs() <= 1.0));

        let w = draw(&mut rng, 3 * nh * (nh + ni), scale);
        let b = draw(&mut rng, 3 * nh, scale);
        let s = gru_cell_step(&w, &b, &x, &h).unwrap();
        for j in 0..nh {
            let (z, r, cand) = (s.gates[j], s.gates[nh + j], s.gates[2 * nh + j]);
            prop_assert!((0.0..=1.0).contains(&z) && (0.0..=1.0).contains(&r));
            let (lo, hi) = (h[j].min(cand), h[j].max(cand));
            prop_assert!(s.h[j] >= lo - 1e-15 && s.h[j] <= hi + 1e-15);
        }
    }

    #[test]
    fn moderate_gates_are_strictly_inside(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (nh, ni) = (3, 2);
        let x = draw(&mut rng, ni, 1.0);
        let h = draw(&mut rng, nh, 1.0);
        let w = draw(&mut rng, 4 * nh * (nh + ni), 1.0);
        let b = draw(&mut rng, 4 * nh, 1.0);
        let s = lstm_cell_step(&w, &b, &x, &h, &[0.0; 3]).unwrap();
        for (k, g) in s.gates.iter().enumerate() {
            if k / nh != 2 {
                prop_assert!(*g > 0.0 && *g < 1.0);
            }
        }
    }
}
