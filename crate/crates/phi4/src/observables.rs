//! `L^p` norms, Birkhoff sampling of the invariant measure and the
//! fourth-cumulant non-Gaussianity estimator.

use num_complex::Complex64;

use crate::dynamics::{initial_field, SimConfig, UStepper};
use crate::error::{Error, Result};
use crate::field::{same_grid, Field, Spectrum};
use crate::noise::{ou_increment, NoiseStream};
use crate::paraproduct::lp_norm_values;
use crate::stats;

/// `(int |f|^p)^{1/p}` with cell weight `(L/N)^d`; `p = inf` gives `max |f|`.
pub fn lp_norm(f: &Field, p: f64) -> f64 {
    lp_norm_values(f.values(), f.grid().cell_volume(), p)
}

/// Snapshots of one trajectory after burn-in.
#[derive(Clone, Debug)]
pub struct SampleSet {
    pub fields: Vec<Field>,
    pub times: Vec<f64>,
    pub dt: f64,
    pub burn_in: f64,
    pub stride: f64,
    pub seed: u64,
    pub stream: u64,
    /// Exponential correlation time of the spatial mean, from its lag-one autocorrelation.
    pub correlation_time: f64,
    /// The stride is shorter than the measured correlation time.
    pub stride_flagged: bool,
    /// Set when sampling stopped early; `fields` then holds the partial set.
    pub blow_up: Option<String>,
}

/// Longest relaxation time `1 / min lambda` is 1 for `P = 1 - Delta`.
pub const MIN_BURN_IN: f64 = 5.0;

/// Runs the `u`-equation and records `count` snapshots `stride` apart after `burn_in`.
pub fn birkhoff_sample(cfg: &SimConfig, burn_in: f64, stride: f64, count: usize) -> Result<SampleSet> {
    cfg.validate()?;
    if !(cfg.mass_term && cfg.log_term) {
        return Err(Error::Refused("invariant-measure sampling needs both counterterms on".into()));
    }
    if burn_in < MIN_BURN_IN {
        return Err(Error::Refused(format!("burn-in {burn_in} below {MIN_BURN_IN}")));
    }
    if stride < 5.0 * cfg.dt * (1.0 - 1e-9) {
        return Err(Error::Refused(format!("stride {stride} below 5 dt")));
    }
    let grid = cfg.grid()?;
    let stepper = UStepper::new(&grid, cfg)?;
    let mut stream = NoiseStream::new(cfg.seed, cfg.stream);
    let mut u = initial_field(&grid, &cfg.initial, cfg.seed, cfg.stream)?.spectrum();
    let burn = (burn_in / cfg.dt).round() as usize;
    let every = ((stride / cfg.dt).round() as usize).max(1);
    let total = burn + every * count.saturating_sub(1);
    let mut set = SampleSet {
        fields: Vec::with_capacity(count),
        times: Vec::with_capacity(count),
        dt: cfg.dt,
        burn_in,
        stride,
        seed: cfg.seed,
        stream: cfg.stream,
        correlation_time: 0.0,
        stride_flagged: false,
        blow_up: None,
    };
    for k in 0..=total {
        let t = k as f64 * cfg.dt;
        if k >= burn && (k - burn) % every == 0 && set.fields.len() < count {
            set.fields.push(u.to_field());
            set.times.push(t);
        }
        if k == total {
            break;
        }
        let inc = cfg.noise.then(|| ou_increment(&grid, cfg.dt, cfg.r, &stream.next_gaussians(&grid)));
        match stepper.step(&u, inc.as_ref(), t) {
            Ok(next) => u = next,
            Err(e @ Error::BlowUp { .. }) => {
                set.blow_up = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let means: Vec<f64> = set.fields.iter().map(Field::mean).collect();
    if means.len() >= 3 {
        let rho = stats::autocorrelation(&means, 2)[1];
        set.correlation_time = if rho > 0.0 && rho < 1.0 { -stride / rho.ln() } else if rho >= 1.0 { f64::INFINITY } else { 0.0 };
        set.stride_flagged = stride < set.correlation_time;
    }
    Ok(set)
}

pub const MIN_CUMULANT_SAMPLES: usize = 200;
pub const JACKKNIFE_BLOCKS: usize = 20;

/// Estimate with a jackknife standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Spatial moments `(mean w^2, mean w^4)` of `w = e^{-r_probe P} u` per sample.
fn smoothed_moments(spectra: &[Spectrum], r_probe: f64) -> Vec<(f64, f64)> {
    spectra
        .iter()
        .map(|s| {
            let lambda = s.grid().lambda();
            let w = s.map_modes(|i| Complex64::new((-r_probe * lambda[i]).exp(), 0.0)).to_field();
            let n = w.values().len() as f64;
            let (m2, m4) = w.values().iter().fold((0.0, 0.0), |(a, b), v| (a + v * v, b + v * v * v * v));
            (m2 / n, m4 / n)
        })
        .collect()
}

fn c4(m: &[&(f64, f64)]) -> f64 {
    let n = m.len() as f64;
    let m2 = m.iter().map(|x| x.0).sum::<f64>() / n;
    let m4 = m.iter().map(|x| x.1).sum::<f64>() / n;
    m4 - 3.0 * m2 * m2
}

fn check_samples(samples: &[Field]) -> Result<()> {
    if samples.len() < MIN_CUMULANT_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_CUMULANT_SAMPLES, got: samples.len() });
    }
    for s in samples {
        same_grid(samples[0].grid(), s.grid())?;
    }
    Ok(())
}

/// `C4 = E[w^4] - 3 E[w^2]^2` for `w = (e^{-r_probe P} u)(x)`, averaged over `x`.
pub fn fourth_cumulant(samples: &[Field], r_probe: f64) -> Result<Estimate> {
    check_samples(samples)?;
    if !(r_probe >= 0.0) {
        return Err(Error::InvalidArgument(format!("r_probe = {r_probe} must be non-negative")));
    }
    let spectra: Vec<Spectrum> = samples.iter().map(Field::spectrum).collect();
    let m = smoothed_moments(&spectra, r_probe);
    let (value, stderr) = stats::jackknife(&m, JACKKNIFE_BLOCKS, c4);
    Ok(Estimate { value, stderr })
}

#[derive(Clone, Debug)]
pub struct CumulantScaling {
    pub r_probes: Vec<f64>,
    pub cumulants: Vec<Estimate>,
    /// `d ln |C4| / d ln r_probe`
    pub log_slope: Estimate,
    /// `d C4 / d ln r_probe`, the free-field control statistic.
    pub linear_slope: Estimate,
}

/// `C4` across probe scales with jackknife errors on the fitted slopes
/// (blocks are deleted jointly for all probes, keeping their correlation).
pub fn cumulant_scaling(samples: &[Field], r_probes: &[f64]) -> Result<CumulantScaling> {
    check_samples(samples)?;
    if r_probes.len() < 2 || r_probes.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidArgument("need at least two positive probe scales".into()));
    }
    let spectra: Vec<Spectrum> = samples.iter().map(Field::spectrum).collect();
    let per_probe: Vec<Vec<(f64, f64)>> = r_probes.iter().map(|&r| smoothed_moments(&spectra, r)).collect();
    let rows: Vec<Vec<(f64, f64)>> =
        (0..samples.len()).map(|i| per_probe.iter().map(|m| m[i]).collect()).collect();
    let xs: Vec<f64> = r_probes.iter().map(|r| r.ln()).collect();
    let values = |set: &[&Vec<(f64, f64)>]| -> Vec<f64> {
        (0..r_probes.len())
            .map(|j| {
                let col: Vec<&(f64, f64)> = set.iter().map(|row| &row[j]).collect();
                c4(&col)
            })
            .collect()
    };
    let cumulants = (0..r_probes.len())
        .map(|j| {
            let (value, stderr) = stats::jackknife(&per_probe[j], JACKKNIFE_BLOCKS, c4);
            Estimate { value, stderr }
        })
        .collect();
    let (ls, lse) = stats::jackknife(&rows, JACKKNIFE_BLOCKS, |set| {
        let ys: Vec<f64> = values(set).iter().map(|v| v.abs().ln()).collect();
        stats::line(&xs, &ys).slope
    });
    let (ms, mse) = stats::jackknife(&rows, JACKKNIFE_BLOCKS, |set| stats::line(&xs, &values(set)).slope);
    Ok(CumulantScaling {
        r_probes: r_probes.to_vec(),
        cumulants,
        log_slope: Estimate { value: ls, stderr: lse },
        linear_slope: Estimate { value: ms, stderr: mse },
    })
}
