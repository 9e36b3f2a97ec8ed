mod common;

use common::{assert_feasible, random_input, random_scene, ConstantPredictor};
use greenhouse_core::{ControlInput, Output};
use mpc::solver::{horizon_objective, input_ceilings, make_feasible, shift_plan};
use mpc::{solve_horizon, MpcConfig, OraclePredictor, SolverConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid_values(c: usize) -> [f64; 3] {
    let hi = ControlInput::MAX.to_array()[c];
    [0.0, hi / 2.0, hi]
}

/// Two-step horizon: enumerate the 3³ × 3³ grid of inputs that satisfy the
/// box and night ceilings, and compare the solver to the best grid point.
/// With the rate bound at the full range the grid is feasible.
#[test]
fn solver_matches_grid_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let oracle = OraclePredictor::default();
    let cfg = MpcConfig { horizon: 2, rate_max: ControlInput::MAX, ..MpcConfig::default() };
    let points: Vec<ControlInput> = (0..27).map(|i| ControlInput::new(grid_values(0)[i % 3], grid_values(1)[i / 3 % 3], grid_values(2)[i / 9])).collect();
    let mut within = 0;
    let mut worst = (0.0f64, 0);
    for case in 0..100 {
        let s = random_scene(&mut rng, 2, None);
        let ctx = s.ctx();
        let ceil = input_ceilings(&ctx, &cfg, 2);
        let allowed = |u: &ControlInput, j: usize| u.co2_injection <= ceil[j].co2_injection;
        let mut best = f64::INFINITY;
        for a in points.iter().filter(|u| allowed(u, 0)) {
            for b in points.iter().filter(|u| allowed(u, 1)) {
                best = best.min(horizon_objective(&[*a, *b], &oracle, &ctx, &cfg).unwrap());
            }
        }
        let plan = solve_horizon(&ctx, &oracle, &cfg, None).unwrap();
        assert_feasible(&plan.inputs, s.u_prev, &cfg, ctx.forecast[0].radiation < 10.0);
        let rel = (plan.objective - best) / best.abs().max(1.0);
        if rel <= 0.01 {
            within += 1;
        }
        if rel > worst.0 {
            worst = (rel, case);
        }
    }
    assert!(within >= 95, "{within}/100 within 1% of the grid optimum; worst {:.3e} in case {}", worst.0, worst.1);
}

#[test]
fn constant_outputs_drive_inputs_to_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let cfg = MpcConfig { horizon: 4, rate_max: ControlInput::MAX, ..MpcConfig::default() };
    let p = ConstantPredictor(Output::new(0.1, 500.0, 17.0, 70.0));
    for _ in 0..10 {
        let s = random_scene(&mut rng, 4, None);
        let plan = solve_horizon(&s.ctx(), &p, &cfg, None).unwrap();
        for u in &plan.inputs {
            assert_eq!(*u, ControlInput::zero(), "plan {:?}", plan.inputs);
        }
    }
}

#[test]
fn without_yield_or_penalties_inputs_stay_off() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let cfg = MpcConfig {
        horizon: 3,
        q_yield: 0.0,
        penalty_output: 0.0,
        penalty_rate: 0.0,
        rate_max: ControlInput::MAX,
        ..MpcConfig::default()
    };
    for _ in 0..10 {
        let s = random_scene(&mut rng, 3, None);
        let plan = solve_horizon(&s.ctx(), &OraclePredictor::default(), &cfg, None).unwrap();
        assert!(plan.inputs.iter().all(|u| *u == ControlInput::zero()), "{:?}", plan.inputs);
        assert_eq!(plan.objective, 0.0);
    }
}

#[test]
fn no_co2_at_night() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let cfg = MpcConfig { horizon: 1, ..MpcConfig::default() };
    for _ in 0..20 {
        let s = random_scene(&mut rng, 1, Some(true));
        let plan = solve_horizon(&s.ctx(), &OraclePredictor::default(), &cfg, None).unwrap();
        assert_eq!(plan.inputs[0].co2_injection, 0.0);
    }
}

#[test]
fn ceilings_ramp_down_before_night() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut s = random_scene(&mut rng, 20, Some(false));
    for d in &mut s.forecast[12..] {
        d.radiation = 0.0;
    }
    let cfg = MpcConfig::default();
    let c = input_ceilings(&s.ctx(), &cfg, 20);
    assert_eq!(c[0].co2_injection, 1.2);
    for j in 12..20 {
        assert_eq!(c[j].co2_injection, 0.0);
    }
    assert!(c[11].co2_injection <= 0.12 && c[11].co2_injection > 0.119);
    assert!(c.iter().all(|u| u.ventilation == 7.5 && u.heating == 150.0));
}

#[test]
fn warm_start_never_worsens_the_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let oracle = OraclePredictor::default();
    let cfg = MpcConfig { horizon: 6, solver: SolverConfig { iterations: 20, restarts: 1, ..SolverConfig::default() }, ..MpcConfig::default() };
    for _ in 0..10 {
        let s = random_scene(&mut rng, 16, None);
        let ctx = s.ctx();
        let raw: Vec<ControlInput> = (0..6).map(|_| random_input(&mut rng)).collect();
        let warm = make_feasible(&raw, &ctx, &cfg, &input_ceilings(&ctx, &cfg, 6));
        let f0 = horizon_objective(&warm, &oracle, &ctx, &cfg).unwrap();
        let plan = solve_horizon(&ctx, &oracle, &cfg, Some(&warm)).unwrap();
        assert!(plan.objective <= f0 + 1e-9 * f0.abs(), "{} > {f0}", plan.objective);
    }
}

#[test]
fn solves_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let s = random_scene(&mut rng, 8, Some(false));
    let cfg = MpcConfig { horizon: 8, solver: SolverConfig { iterations: 30, ..SolverConfig::default() }, ..MpcConfig::default() };
    let a = solve_horizon(&s.ctx(), &OraclePredictor::default(), &cfg, None).unwrap();
    let b = solve_horizon(&s.ctx(), &OraclePredictor::default(), &cfg, None).unwrap();
    assert_eq!(a, b);
}

#[test]
fn objective_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let s = random_scene(&mut rng, 2, Some(false));
    let plan = [ControlInput::new(0.5, 1.0, 20.0), ControlInput::new(0.5, 1.0, 20.0)];
    let cfg = MpcConfig { u_min: ControlInput::zero(), rate_max: ControlInput::MAX, ..MpcConfig::default() };
    // Inside every band: the stage costs alone.
    let inside = ConstantPredictor(Output::new(0.2, 600.0, 18.0, 70.0));
    let f = horizon_objective(&plan, &inside, &s.ctx(), &cfg).unwrap();
    assert!((f - 2.0 * (-200.0 + 5.0 + 1.0 + 20.0)).abs() < 1e-9, "{f}");
    // Humidity 5 % over the band at both steps, weight 100.
    let humid = ConstantPredictor(Output::new(0.0, 600.0, 18.0, 90.0));
    let cfg = MpcConfig { q_yield: 0.0, q_input: [0.0; 3], penalty_output: 100.0, ..cfg };
    assert!((horizon_objective(&plan, &humid, &s.ctx(), &cfg).unwrap() - 2.0 * 2500.0).abs() < 1e-9);
    // CO₂ 200 ppm over the cap counts as two units.
    let rich = ConstantPredictor(Output::new(0.0, 1200.0, 18.0, 70.0));
    assert!((horizon_objective(&plan[..1], &rich, &s.ctx(), &cfg).unwrap() - 400.0).abs() < 1e-9);
}

#[test]
fn shifting_repeats_the_tail() {
    let p = [ControlInput::new(0.1, 1.0, 1.0), ControlInput::new(0.2, 2.0, 2.0), ControlInput::new(0.3, 3.0, 3.0)];
    assert_eq!(shift_plan(&p, 3), vec![p[1], p[2], p[2]]);
    assert_eq!(shift_plan(&p[..1], 2), vec![p[0], p[0]]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn feasible_plans_respect_every_limit(seed in any::<u64>(), n in 1usize..12, dusk in 0usize..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = random_scene(&mut rng, n + 10, Some(false));
        for d in &mut s.forecast[dusk.min(n + 10)..] {
            d.radiation = 0.0;
        }
        let night = dusk == 0;
        let cfg = MpcConfig { horizon: n, ..MpcConfig::default() };
        let ctx = s.ctx();
        let ceil = input_ceilings(&ctx, &cfg, n);
        let raw: Vec<ControlInput> = (0..n)
            .map(|_| ControlInput::new(rng.gen_range(-1.0..3.0), rng.gen_range(-5.0..15.0), rng.gen_range(-100.0..300.0)))
            .collect();
        let plan = make_feasible(&raw, &ctx, &cfg, &ceil);
        for (u, c) in plan.iter().zip(&ceil) {
            prop_assert!(u.co2_injection <= c.co2_injection);
        }
        // A CO₂ start above the first ceiling can make the rate bound
        // unreachable; the ceiling then wins.
        if s.u_prev.co2_injection <= ceil[0].co2_injection + cfg.rate_max.co2_injection {
            assert_feasible(&plan, s.u_prev, &cfg, night);
        }
    }
}
