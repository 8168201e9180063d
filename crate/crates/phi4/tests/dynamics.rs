use std::f64::consts::PI;

use phi4::dynamics::{
    cole_hopf, cole_hopf_cross_check, coming_down_experiment, comparison_constant, comparison_test, cubic_decay,
    simulate, step_u, step_v, ChTrees, ComeDown, Coupling, CrossCheck, Direction, InitialCondition, JpTrees, SimConfig,
    UStepper, VStepper,
};
use phi4::noise::NoiseStream;
use phi4::renorm::RenormConstants;
use phi4::trees::TreeState;
use phi4::{Error, Field, Grid, Spectrum};
use proptest::prelude::*;

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn quiet(dim: usize, n: usize, r: f64, dt: f64, horizon: f64) -> SimConfig {
    let mut cfg = SimConfig::new(dim, n, r, dt, horizon);
    cfg.noise = false;
    cfg.mass_term = false;
    cfg.log_term = false;
    cfg
}

/// Classical fourth-order Runge-Kutta for a scalar autonomous ODE.
fn rk4(f: impl Fn(f64) -> f64, y0: f64, t: f64, steps: usize) -> f64 {
    let h = t / steps as f64;
    let mut y = y0;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

#[test]
fn free_heat_decay() {
    let mut cfg = quiet(2, 16, 0.1, 0.01, 0.5);
    cfg.coupling = Coupling::Constant(0.0);
    cfg.snapshot_every = 50;
    let g = cfg.grid().unwrap();
    let u0 = Field::from_fn(&g, |x| (2.0 * x[0] + x[1]).cos());
    cfg.initial = InitialCondition::Given(u0.clone());
    let traj = simulate(&cfg).unwrap();
    assert_eq!(traj.times.len(), 2);
    let t = traj.times[1];
    assert!((t - 0.5).abs() < 1e-12);
    assert!(max_diff(&traj.snapshots[1], &u0.scale((-6.0 * t).exp())) < 1e-13);
    assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn constant_initial_data_follow_the_scalar_ode() {
    let r = 0.5;
    let c = RenormConstants::closed(r).unwrap();
    let m = 3.0 * (c.a - c.b);
    let (u0, horizon, dt) = (0.8, 0.1, 2e-6);
    let mut cfg = SimConfig::new(1, 4, r, dt, horizon);
    cfg.noise = false;
    let g = cfg.grid().unwrap();
    cfg.initial = InitialCondition::Given(Field::constant(&g, u0));
    cfg.snapshot_every = (horizon / dt).round() as usize;
    cfg.diagnostics_every = 0;
    let traj = simulate(&cfg).unwrap();
    let u = traj.snapshots.last().unwrap().values()[0];
    let oracle = rk4(|y| -y - y * y * y + m * y, u0, horizon, 10_000);
    assert!((u - oracle).abs() < 1e-6, "{u} vs {oracle}");
}

#[test]
fn split_step_is_first_order_for_large_data() {
    // u0 = 200 makes the explicit step unstable at these sizes; the split step converges
    let r = 0.5;
    let c = RenormConstants::closed(r).unwrap();
    let m = 3.0 * (c.a - c.b);
    let (u0, horizon) = (200.0, 0.05);
    let oracle = rk4(|y| -y - y * y * y + m * y, u0, horizon, 400_000);
    let mut errs = Vec::new();
    for dt in [1e-3, 5e-4, 2.5e-4] {
        let cfg = SimConfig::new(1, 4, r, dt, horizon);
        let g = cfg.grid().unwrap();
        let stepper = UStepper::new(&g, &cfg).unwrap();
        let mut u = Field::constant(&g, u0).spectrum();
        for k in 0..(horizon / dt).round() as usize {
            u = stepper.split_step(&u, None, k as f64 * dt).unwrap();
        }
        errs.push((u.to_field().values()[0] - oracle).abs());
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 0.8 && order < 1.3, "{errs:?}");
    }
}

#[test]
fn space_dependent_counterterm() {
    let mut cfg = SimConfig::new(2, 16, 0.01, 1e-3, 0.0);
    let g = cfg.grid().unwrap();
    let lambda = Field::from_fn(&g, |x| 1.0 + 0.5 * x[0].cos());
    cfg.coupling = Coupling::Field(lambda.clone());
    let stepper = UStepper::new(&g, &cfg).unwrap();
    let c = cfg.constants().unwrap();
    let expected = lambda.map(|l| 3.0 * l * c.a - 3.0 * l * l * c.b);
    assert!(max_diff(&stepper.counterterm_field(), &expected) < 1e-12);
    cfg.coupling = Coupling::Field(lambda.map(|l| l - 1.0));
    assert!(matches!(UStepper::new(&g, &cfg), Err(Error::InvalidArgument(_))));
}

#[test]
fn energy_decreases_without_forcing() {
    let mut cfg = quiet(3, 8, 0.05, 1e-3, 0.2);
    cfg.initial = InitialCondition::ScaledRandom { size: 3.0 };
    cfg.diagnostics_every = 10;
    let traj = simulate(&cfg).unwrap();
    assert!(traj.diagnostics.len() > 10);
    for w in traj.diagnostics.windows(2) {
        assert!(w[1].l2 <= w[0].l2 * (1.0 + 1e-12), "{} -> {}", w[0].l2, w[1].l2);
    }
}

#[test]
fn blow_up_is_reported() {
    let mut cfg = SimConfig::new(2, 8, 0.05, 0.1, 1.0);
    cfg.initial = InitialCondition::ScaledRandom { size: 1e4 };
    cfg.blowup_threshold = 10.0;
    let traj = simulate(&cfg).unwrap();
    assert!(traj.blow_up.is_some());
    let u = Field::constant(&cfg.grid().unwrap(), 1e3);
    assert!(matches!(step_u(&u, &cfg, &mut NoiseStream::new(0, 0)), Err(Error::BlowUp { .. })));
}

fn random_trees(g: &Grid, seed: u64) -> ChTrees {
    let mut s = NoiseStream::new(seed, 0);
    let mut draw = |scale: f64| phi4::noise::sample_stationary(g, 0.05, &mut s).unwrap().scale(scale);
    ChTrees { x: draw(1.0), i2: draw(0.3), i3: draw(0.5), v_ref: draw(0.2) }
}

#[test]
fn cole_hopf_round_trip_and_identity() {
    let g = Grid::cube(3, 8).unwrap();
    let trees = random_trees(&g, 1);
    let u = phi4::noise::sample_stationary(&g, 0.05, &mut NoiseStream::new(9, 0)).unwrap();
    let v = cole_hopf(&u, &trees, Direction::Forward).unwrap();
    let back = cole_hopf(&v, &trees, Direction::Backward).unwrap();
    assert!(max_diff(&back, &u) < 1e-10);
    assert!(max_diff(&v, &u) > 1e-3);
    let same = cole_hopf(&u, &ChTrees::zero(&g), Direction::Forward).unwrap();
    assert_eq!(same.values(), u.values());
}

#[test]
fn v_step_without_trees_is_the_plain_cubic_step() {
    // b vanishes at r = 1, so zero trees give zero coefficients
    let g = Grid::cube(2, 16).unwrap();
    let r = 1.0;
    let dt = 1e-3;
    let mut jp = JpTrees::new(TreeState::from_x(Spectrum::zeros(&g), r, true).unwrap()).unwrap();
    let v = Field::from_fn(&g, |x| 0.7 * x[0].sin() + 0.4 * (x[0] + 2.0 * x[1]).cos());
    let from_v = step_v(&v, &mut jp, dt, &mut NoiseStream::new(3, 0)).unwrap();
    let from_u = step_u(&v, &quiet(2, 16, r, dt, 0.0), &mut NoiseStream::new(3, 0)).unwrap();
    assert!(max_diff(&from_v, &from_u) < 1e-13);
    assert!(JpTrees::new(TreeState::from_x(Spectrum::zeros(&g), r, false).unwrap()).is_err());
}

#[test]
fn transport_term_matches_a_stencil() {
    let g = Grid::cube(2, 32).unwrap();
    let r = 0.05;
    let b = RenormConstants::closed(r).unwrap().b;
    let i2 = |x: [f64; 3]| 0.3 * (x[0] + 2.0 * x[1]).sin();
    let v = |x: [f64; 3]| (2.0 * x[0] - x[1]).cos();
    let mut state = TreeState::from_x(Spectrum::zeros(&g), r, true).unwrap();
    state.i2 = Field::from_fn(&g, i2).spectrum();
    let jp = JpTrees::new(state).unwrap();
    let stepper = VStepper::new(1e-3, 1e6).unwrap();
    let vf = Field::from_fn(&g, v);
    let drift = |s: f64| stepper.drift(&vf.scale(s).spectrum(), &jp, 0.0).unwrap().to_field();
    // the drift is a cubic polynomial in the amplitude; this combination keeps the linear part
    let linear = drift(1.0)
        .sub(&drift(-1.0))
        .unwrap()
        .scale(8.0)
        .sub(&drift(2.0).sub(&drift(-2.0)).unwrap())
        .unwrap()
        .scale(1.0 / 12.0);
    let h = 1e-3;
    let d = |f: &dyn Fn([f64; 3]) -> f64, x: [f64; 3], axis: usize| {
        let at = |s: f64| {
            let mut y = x;
            y[axis] += s * h;
            f(y)
        };
        (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * h)
    };
    let mut err = 0.0f64;
    for (i, got) in linear.values().iter().enumerate() {
        let x = g.point(i);
        let grad_sq = d(&i2, x, 0).powi(2) + d(&i2, x, 1).powi(2);
        let transport = -6.0 * (d(&i2, x, 0) * d(&v, x, 0) + d(&i2, x, 1) * d(&v, x, 1));
        let z1 = 9.0 * grad_sq - 3.0 * b - 3.0 * i2(x);
        err = err.max((got - (transport + z1 * v(x))).abs());
    }
    assert!(err < 1e-8, "{err}");
}

#[test]
fn cross_check_gap_shrinks_with_the_step() {
    let cc = CrossCheck {
        n: 16,
        r: 0.1,
        horizon: 0.2,
        dts: vec![0.01, 0.005, 0.0025],
        seed: 2,
        stream: 0,
        initial: InitialCondition::ScaledRandom { size: 1.0 },
        checkpoints: 3,
    };
    let rep = cole_hopf_cross_check(&cc).unwrap();
    assert_eq!(rep.rows.len(), 3);
    assert!(rep.rows.iter().all(|r| r.max_gap >= r.terminal_gap && r.terminal_gap < 0.05));
    assert!(rep.orders.iter().all(|&o| o > 0.9), "{:?}", rep.orders);
    let bad = CrossCheck { dts: vec![0.01, 0.003], ..cc };
    assert!(cole_hopf_cross_check(&bad).is_err());
}

#[test]
fn deterministic_coming_down_obeys_the_cubic_bound() {
    let cd = ComeDown {
        n: 8,
        r: 0.1,
        horizon: 0.3,
        sizes: vec![0.5, 5.0],
        p: 8.0,
        seed: 1,
        stream: 0,
        times: vec![0.05, 0.1, 0.2, 0.3],
        dt: None,
        deterministic: true,
    };
    let rep = coming_down_experiment(&cd).unwrap();
    assert_eq!(rep.times.len(), 4);
    // ||u||_inf <= (2t)^{-1/2} and ||u||_{L^8} <= |T^3|^{1/8} ||u||_inf
    let vol = (2.0 * PI).powi(3).powf(1.0 / 8.0);
    for run in &rep.runs {
        for (t, n) in rep.times.iter().zip(&run.norms) {
            assert!(*n <= 1.05 * vol * (2.0 * t).powf(-0.5), "size {} t {t}: {n}", run.size);
        }
    }
    assert!(rep.constant >= rep.runs[0].constant);
    assert!(matches!(coming_down_experiment(&ComeDown { p: 6.0, ..cd }), Err(Error::InvalidArgument(_))));
}

#[test]
fn comparison_test_with_zero_function() {
    let ts: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
    let rep = comparison_test(&ts, &vec![0.0; ts.len()], 2.0, 0.1).unwrap();
    assert!(rep.holds);
    assert!(rep.steps.iter().all(|s| s.value == 0.0 && s.bound > 1.0 && s.next > s.t));
    // with a large c the first horizon already passes the end of the samples
    let wide = comparison_test(&ts, &vec![0.0; ts.len()], 2.0, 1.0).unwrap();
    assert!(wide.steps.is_empty() && wide.holds);
}

#[test]
fn comparison_test_on_a_decaying_function() {
    let delta = 0.01;
    let ts: Vec<f64> = std::iter::once(0.0).chain((0..=400).map(|i| 1e-4 * 10f64.powf(i as f64 / 80.0))).collect();
    let f: Vec<f64> = ts.iter().map(|t| 1.0 / (t + delta)).collect();
    // int_s^t F^2 = F(s) - F(t) <= F(s); the margin absorbs the trapezoid overshoot
    let rep = comparison_test(&ts, &f, 2.0, 1.5).unwrap();
    assert!(rep.steps.len() >= 3);
    assert!(rep.holds, "margin {}", rep.margin);
    for s in &rep.steps {
        assert!(s.next > s.t);
        assert!((s.bound - (1.0 + comparison_constant(2.0, 1.5) / s.next)).abs() < 1e-12);
    }
}

#[test]
fn comparison_test_refuses_a_violated_hypothesis() {
    let ts: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
    match comparison_test(&ts, &vec![10.0; ts.len()], 2.0, 1e-3) {
        Err(Error::HypothesisViolated { s, t, lhs, rhs }) => {
            assert_eq!(s, 0.0);
            assert!((t - 0.01).abs() < 1e-15);
            assert!(lhs > rhs);
        }
        other => panic!("expected refusal, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cubic_decay_solves_its_ode(u0 in -50.0f64..50.0, t in 0.01f64..5.0) {
        let u = cubic_decay(u0, t);
        prop_assert!(u.abs() <= (2.0 * t).powf(-0.5) * (1.0 + 1e-12));
        let h = 1e-5 * t;
        let du = (cubic_decay(u0, t + h) - cubic_decay(u0, t - h)) / (2.0 * h);
        prop_assert!((du + u * u * u).abs() < 1e-5 * (1.0 + u.abs().powi(3)));
    }

    #[test]
    fn cole_hopf_inverts(seed in 0u64..500) {
        let g = Grid::cube(2, 8).unwrap();
        let trees = random_trees(&g, seed);
        let u = phi4::noise::sample_stationary(&g, 0.05, &mut NoiseStream::new(seed, 7)).unwrap();
        let back = cole_hopf(&cole_hopf(&u, &trees, Direction::Backward).unwrap(), &trees, Direction::Forward).unwrap();
        prop_assert!(max_diff(&back, &u) < 1e-10);
    }
}
