use std::f64::consts::PI;

use phi4::dynamics::{Coupling, SimConfig};
use phi4::noise::{sample_stationary, NoiseStream};
use phi4::observables::{birkhoff_sample, cumulant_scaling, fourth_cumulant, lp_norm, MIN_CUMULANT_SAMPLES};
use phi4::stats::mean_stderr;
use phi4::{Error, Field, Grid};

fn gaussian_samples(grid: &Grid, r: f64, count: usize, seed: u64) -> Vec<Field> {
    let mut s = NoiseStream::new(seed, 0);
    (0..count).map(|_| sample_stationary(grid, r, &mut s).unwrap()).collect()
}

fn free_config(r: f64, dt: f64, seed: u64, stream: u64) -> SimConfig {
    let mut cfg = SimConfig::new(2, 8, r, dt, 0.0);
    cfg.coupling = Coupling::Constant(0.0);
    cfg.seed = seed;
    cfg.stream = stream;
    cfg
}

#[test]
fn lp_norm_examples() {
    let g = Grid::cube(3, 8).unwrap();
    let c = Field::constant(&g, -2.0);
    for p in [1.0, 2.0, 8.0] {
        let expected = 2.0 * (2.0 * PI).powf(3.0 / p);
        assert!((lp_norm(&c, p) - expected).abs() < 1e-12 * expected);
    }
    let g1 = Grid::cube(1, 64).unwrap();
    let f = Field::from_fn(&g1, |x| x[0].cos());
    assert!((lp_norm(&f, 2.0) - PI.sqrt()).abs() < 1e-12);
    let h = Field::from_fn(&g1, |x| x[0].sin() - 0.3 * (3.0 * x[0]).cos());
    let max = h.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert_eq!(lp_norm(&h, f64::INFINITY), max);
}

#[test]
fn gaussian_fields_have_no_fourth_cumulant() {
    let g = Grid::cube(2, 16).unwrap();
    let xs = gaussian_samples(&g, 0.01, 400, 1);
    for probe in [0.0, 0.02, 0.1] {
        let c = fourth_cumulant(&xs, probe).unwrap();
        assert!(c.value.abs() < 3.0 * c.stderr, "probe {probe}: {} +- {}", c.value, c.stderr);
    }
    assert!(matches!(
        fourth_cumulant(&xs[..MIN_CUMULANT_SAMPLES - 1], 0.1),
        Err(Error::TooFewSamples { needed: 200, got: 199 })
    ));
}

#[test]
fn cumulant_estimator_is_unbiased() {
    // 50 independent repetitions: the pooled z-scores average to zero
    let g = Grid::cube(1, 16).unwrap();
    let mut z = Vec::new();
    for rep in 0..50 {
        let xs = gaussian_samples(&g, 0.05, 200, 100 + rep);
        let c = fourth_cumulant(&xs, 0.05).unwrap();
        z.push(c.value / c.stderr);
    }
    let (m, se) = mean_stderr(&z);
    assert!(m.abs() < 3.0 * se.max(1.0 / (50f64).sqrt()), "mean z {m} +- {se}");
}

#[test]
fn free_field_cumulant_slope_is_flat() {
    let g = Grid::cube(2, 16).unwrap();
    let xs = gaussian_samples(&g, 0.01, 400, 5);
    let s = cumulant_scaling(&xs, &[0.02, 0.04, 0.08, 0.16]).unwrap();
    assert_eq!(s.cumulants.len(), 4);
    assert!(s.linear_slope.value.abs() < 3.0 * s.linear_slope.stderr, "{:?}", s.linear_slope);
    assert!(cumulant_scaling(&xs, &[0.1]).is_err());
}

#[test]
fn free_dynamics_samples_the_regularized_free_field() {
    let r = 0.05;
    let set = birkhoff_sample(&free_config(r, 0.5, 3, 0), 5.0, 2.5, 1500).unwrap();
    assert_eq!(set.fields.len(), 1500);
    assert!(!set.stride_flagged, "correlation time {}", set.correlation_time);
    let g = set.fields[0].grid().clone();
    for k in [[0i64, 0, 0], [1, 0, 0], [1, 2, 0]] {
        let idx = (0..g.len()).find(|&i| g.int_freq(i) == k).unwrap();
        let p: Vec<f64> = set.fields.iter().map(|f| f.spectrum().coeffs()[idx].norm_sqr() * g.volume()).collect();
        let (m, se) = mean_stderr(&p);
        let lambda = g.lambda()[idx];
        let target = (-2.0 * r * lambda).exp() / lambda;
        assert!((m - target).abs() < 3.0 * se, "mode {k:?}: {m} vs {target} +- {se}");
    }
    // pointwise fourth moment against Wick's theorem from the second moment
    let v: Vec<f64> = set.fields.iter().map(|f| f.values()[3]).collect();
    let m2 = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
    let q: Vec<f64> = v.iter().map(|x| x.powi(4) - 3.0 * m2 * m2).collect();
    let (m, se) = mean_stderr(&q);
    assert!(m.abs() < 3.0 * se, "{m} +- {se}");
}

#[test]
fn odd_moments_vanish_in_the_interacting_measure() {
    let mut cfg = SimConfig::new(2, 8, 0.05, 0.05, 0.0);
    cfg.seed = 4;
    let set = birkhoff_sample(&cfg, 5.0, 1.0, 600).unwrap();
    assert!(set.blow_up.is_none());
    for power in [1, 3] {
        let v: Vec<f64> = set.fields.iter().map(|f| f.values().iter().map(|x| x.powi(power)).sum::<f64>() / 64.0).collect();
        let (m, se) = mean_stderr(&v);
        assert!(m.abs() < 3.5 * se, "power {power}: {m} +- {se}");
    }
}

#[test]
fn disjoint_streams_agree() {
    let stat = |stream: u64| {
        let set = birkhoff_sample(&free_config(0.05, 0.5, 8, stream), 5.0, 2.5, 400).unwrap();
        let v: Vec<f64> = set.fields.iter().map(|f| lp_norm(f, 2.0).powi(2)).collect();
        mean_stderr(&v)
    };
    let (a, sa) = stat(0);
    let (b, sb) = stat(1);
    assert_ne!(a, b);
    assert!((a - b).abs() < 3.0 * (sa * sa + sb * sb).sqrt(), "{a} vs {b}");
}

#[test]
fn short_stride_is_flagged() {
    let set = birkhoff_sample(&free_config(0.05, 0.01, 2, 0), 5.0, 0.05, 200).unwrap();
    assert!(set.stride_flagged);
    assert!(set.correlation_time > 0.05);
    assert!(set.times.windows(2).all(|w| (w[1] - w[0] - 0.05).abs() < 1e-9));
}

#[test]
fn sampling_refusals() {
    let cfg = free_config(0.05, 0.01, 0, 0);
    assert!(matches!(birkhoff_sample(&cfg, 1.0, 0.1, 10), Err(Error::Refused(_))));
    assert!(matches!(birkhoff_sample(&cfg, 5.0, 0.02, 10), Err(Error::Refused(_))));
    let mut off = cfg.clone();
    off.log_term = false;
    assert!(matches!(birkhoff_sample(&off, 5.0, 0.1, 10), Err(Error::Refused(_))));
}
