//! The enhanced noise: Wick powers of the stationary Ornstein-Uhlenbeck field,
//! their integrated trees and the renormalized resonant products.

use crate::error::{Error, Result};
use crate::field::{Field, Spectrum};
use crate::grid::Grid;
use crate::multiplier::{gradient, phi1};
use crate::noise::{ou_increment, sample_stationary_spectrum, NoiseStream};
use crate::paraproduct::resonant_spectral;
use crate::renorm::{subtraction, Factor, RenormConstants};
use crate::stats;

/// Pathwise state of the trees that need time stepping.
#[derive(Clone, Debug)]
pub struct TreeState {
    grid: Grid,
    consts: RenormConstants,
    renormalized: bool,
    track_i2: bool,
    track_i3: bool,
    pub t: f64,
    pub x: Spectrum,
    pub i2: Spectrum,
    pub i3: Spectrum,
}

impl TreeState {
    /// `X` from the given spectrum, integrated trees started at zero.
    pub fn from_x(x: Spectrum, r: f64, renormalized: bool) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!("trees need r > 0, got {r}")));
        }
        let grid = x.grid().clone();
        Ok(Self {
            consts: RenormConstants::closed(r)?,
            renormalized,
            track_i2: true,
            track_i3: true,
            t: 0.0,
            i2: Spectrum::zeros(&grid),
            i3: Spectrum::zeros(&grid),
            x,
            grid,
        })
    }

    /// Cold start with `X` drawn from its stationary law.
    pub fn stationary(grid: &Grid, r: f64, renormalized: bool, stream: &mut NoiseStream) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!("trees need r > 0, got {r}")));
        }
        Self::from_x(sample_stationary_spectrum(grid, r, stream), r, renormalized)
    }

    /// Restricts stepping to the integrated trees actually needed.
    pub fn tracking(mut self, i2: bool, i3: bool) -> Self {
        self.track_i2 = i2;
        self.track_i3 = i3;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn r(&self) -> f64 {
        self.consts.r
    }

    pub fn constants(&self) -> &RenormConstants {
        &self.consts
    }

    pub fn renormalized(&self) -> bool {
        self.renormalized
    }

    fn sub(&self, tree: &str) -> f64 {
        if self.renormalized {
            subtraction(tree).map_or(0.0, |s| s.value(&self.consts))
        } else {
            0.0
        }
    }

    /// Dealiased `W2 = X^2 - a` and `W3 = X^3 - 3aX` (raw powers when not renormalized).
    pub fn wick(&self) -> (Spectrum, Spectrum) {
        let p = self.x.to_padded_values();
        let sq: Vec<f64> = p.iter().map(|v| v * v).collect();
        let cu: Vec<f64> = p.iter().map(|v| v * v * v).collect();
        let mut w2 = Spectrum::from_padded_values(&self.grid, &sq);
        w2.coeffs_mut()[0] -= self.sub("W2");
        let mut w3 = Spectrum::from_padded_values(&self.grid, &cu);
        w3.axpy(-self.sub("W3"), &self.x);
        (w2, w3)
    }

    fn wick_needed(&self) -> (Option<Spectrum>, Option<Spectrum>) {
        let p = self.x.to_padded_values();
        let w2 = self.track_i2.then(|| {
            let sq: Vec<f64> = p.iter().map(|v| v * v).collect();
            let mut w = Spectrum::from_padded_values(&self.grid, &sq);
            w.coeffs_mut()[0] -= self.sub("W2");
            w
        });
        let w3 = self.track_i3.then(|| {
            let cu: Vec<f64> = p.iter().map(|v| v * v * v).collect();
            let mut w = Spectrum::from_padded_values(&self.grid, &cu);
            w.axpy(-self.sub("W3"), &self.x);
            w
        });
        (w2, w3)
    }

    /// One step of length `dt`: exponential Euler for `I2`, `I3` with the Wick
    /// powers frozen at the step start, exact transition for `X` with the given
    /// stochastic-convolution increment.
    pub fn step(&mut self, dt: f64, increment: &Spectrum) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveStep(dt));
        }
        let (w2, w3) = self.wick_needed();
        let lambda = self.grid.lambda();
        if let Some(w2) = w2 {
            integrate(&mut self.i2, &w2, lambda, dt);
        }
        if let Some(w3) = w3 {
            integrate(&mut self.i3, &w3, lambda, dt);
        }
        for ((x, inc), &l) in self.x.coeffs_mut().iter_mut().zip(increment.coeffs()).zip(lambda) {
            *x = *x * (-dt * l).exp() + inc;
        }
        self.t += dt;
        Ok(())
    }

    /// Step driven by fresh draws from `stream`.
    pub fn step_stream(&mut self, dt: f64, stream: &mut NoiseStream) -> Result<()> {
        let g = stream.next_gaussians(&self.grid);
        let inc = ou_increment(&self.grid, dt, self.consts.r, &g);
        self.step(dt, &inc)
    }

    /// Full tuple at the current time.
    pub fn snapshot(&self) -> Result<EnhancedNoise> {
        let (w2, w3) = self.wick();
        let b = self.consts.b;
        let on = if self.renormalized { 1.0 } else { 0.0 };
        let r1 = resonant_spectral(&self.i3, &self.x)?;
        let mut r2 = resonant_spectral(&self.i2, &w2)?;
        r2.coeffs_mut()[0] -= self.sub("R2");
        let mut r4 = resonant_spectral(&self.i3, &w2)?;
        r4.axpy(-on * b, &self.x);
        let mut r3 = grad_sq(&self.i2);
        r3.coeffs_mut()[0] -= self.sub("R3");
        let mut r3_by_parts = by_parts(&self.i2);
        r3_by_parts.coeffs_mut()[0] -= self.sub("R3");
        Ok(EnhancedNoise {
            r: self.consts.r,
            t: self.t,
            renormalized: self.renormalized,
            x: self.x.to_field(),
            w2: w2.to_field(),
            w3: w3.to_field(),
            i2: self.i2.to_field(),
            i3: self.i3.to_field(),
            r1: r1.to_field(),
            r2: r2.to_field(),
            r3: r3.to_field(),
            r3_by_parts: r3_by_parts.to_field(),
            r4: r4.to_field(),
        })
    }
}

fn integrate(i: &mut Spectrum, w: &Spectrum, lambda: &[f64], dt: f64) {
    for ((a, b), &l) in i.coeffs_mut().iter_mut().zip(w.coeffs()).zip(lambda) {
        *a = *a * (-dt * l).exp() + b * phi1(dt, l);
    }
}

/// Dealiased `|grad f|^2`.
pub fn grad_sq(f: &Spectrum) -> Spectrum {
    let grid = f.grid();
    let mut acc = vec![0.0; grid.padded().len()];
    for g in gradient(f) {
        for (a, v) in acc.iter_mut().zip(g.to_padded_values()) {
            *a += v * v;
        }
    }
    Spectrum::from_padded_values(grid, &acc)
}

/// Dealiased `-f Delta f`, equal to `|grad f|^2 - Delta(f^2)/2`.
pub fn by_parts(f: &Spectrum) -> Spectrum {
    let grid = f.grid();
    let lap = f.map_modes(|i| num_complex::Complex64::new(1.0 - grid.lambda()[i], 0.0));
    let pf = f.to_padded_values();
    let pl = lap.to_padded_values();
    let prod: Vec<f64> = pf.iter().zip(&pl).map(|(a, b)| -a * b).collect();
    Spectrum::from_padded_values(grid, &prod)
}

/// The enhanced-noise tuple at one time slice.
#[derive(Clone, Debug)]
pub struct EnhancedNoise {
    pub r: f64,
    pub t: f64,
    pub renormalized: bool,
    pub x: Field,
    pub w2: Field,
    pub w3: Field,
    pub i2: Field,
    pub i3: Field,
    /// `I3 (.) X`
    pub r1: Field,
    /// `I2 (.) W2 - b/3`
    pub r2: Field,
    /// `|grad I2|^2 - b/3`
    pub r3: Field,
    /// `-I2 Delta I2 - b/3`, the integration-by-parts variant of `R3`
    pub r3_by_parts: Field,
    /// `I3 (.) W2 - b X`
    pub r4: Field,
}

impl EnhancedNoise {
    pub const COMPONENTS: [&'static str; 10] = ["X", "W2", "W3", "I2", "I3", "R1", "R2", "R3", "R3p", "R4"];

    pub fn component(&self, name: &str) -> Option<&Field> {
        Some(match name {
            "X" => &self.x,
            "W2" => &self.w2,
            "W3" => &self.w3,
            "I2" => &self.i2,
            "I3" => &self.i3,
            "R1" => &self.r1,
            "R2" => &self.r2,
            "R3" => &self.r3,
            "R3p" => &self.r3_by_parts,
            "R4" => &self.r4,
            _ => return None,
        })
    }
}

/// Sampling plan for [`build_enhanced_noise`].
#[derive(Clone, Debug)]
pub struct TreeRun {
    pub r: f64,
    pub dt: f64,
    /// Burn-in time before the first snapshot, at least 5.
    pub burn_in: f64,
    /// Time between snapshots.
    pub stride: f64,
    pub count: usize,
    pub seed: u64,
    pub stream: u64,
    pub renormalized: bool,
}

pub const MIN_BURN_IN: f64 = 5.0;

/// Runs the trees from a stationary `X`, discards `burn_in`, and calls `visit`
/// on each snapshot state (the state is passed so callers can pick components
/// without paying for the full tuple).
pub fn run_trees(grid: &Grid, run: &TreeRun, track: (bool, bool), mut visit: impl FnMut(&TreeState) -> Result<()>) -> Result<()> {
    if !(run.r > 0.0) {
        return Err(Error::InvalidArgument("enhanced noise needs r > 0".into()));
    }
    if run.burn_in < MIN_BURN_IN {
        return Err(Error::Refused(format!("burn-in {} below {MIN_BURN_IN}", run.burn_in)));
    }
    if !(run.dt > 0.0) {
        return Err(Error::NonPositiveStep(run.dt));
    }
    let mut stream = NoiseStream::new(run.seed, run.stream);
    let mut init = NoiseStream::new(run.seed, run.stream | crate::noise::INITIAL_STREAM_BIT);
    let mut state = TreeState::stationary(grid, run.r, run.renormalized, &mut init)?.tracking(track.0, track.1);
    let burn = (run.burn_in / run.dt).round() as usize;
    let stride = ((run.stride / run.dt).round() as usize).max(1);
    for _ in 0..burn {
        state.step_stream(run.dt, &mut stream)?;
    }
    for k in 0..run.count {
        if k > 0 {
            for _ in 0..stride {
                state.step_stream(run.dt, &mut stream)?;
            }
        }
        visit(&state)?;
    }
    Ok(())
}

/// Trajectory of full enhanced-noise snapshots.
pub fn build_enhanced_noise(grid: &Grid, run: &TreeRun) -> Result<Vec<EnhancedNoise>> {
    let mut out = Vec::with_capacity(run.count);
    run_trees(grid, run, (true, true), |s| {
        out.push(s.snapshot()?);
        Ok(())
    })?;
    Ok(out)
}

/// One `(r, component)` entry of a divergence sweep.
#[derive(Clone, Debug)]
pub struct DivergenceRow {
    pub r: f64,
    pub component: &'static str,
    pub raw_mean: f64,
    pub renormalized_mean: f64,
    pub raw_norm: f64,
    pub renormalized_norm: f64,
}

/// Fitted `r`-dependence of one component.
#[derive(Clone, Debug)]
pub struct DivergenceFit {
    pub component: &'static str,
    /// `d raw_mean / d |ln r|`
    pub raw_log_slope: f64,
    /// `d ln |raw_mean| / d ln r`
    pub raw_power: f64,
    pub renormalized_log_slope: f64,
    pub renormalized_power: f64,
}

#[derive(Clone, Debug)]
pub struct DivergenceReport {
    pub rows: Vec<DivergenceRow>,
    pub fits: Vec<DivergenceFit>,
}

/// Besov exponent used by the sweep's norm column.
pub const REPORT_NORM: (f64, f64, f64) = (-2.0, 2.0, 2.0);

const SWEPT: [&str; 6] = ["W2", "W3", "R1", "R2", "R3", "R4"];

/// Component with its tabulated subtraction added back.
pub fn without_counterterm(e: &EnhancedNoise, name: &str, c: &RenormConstants) -> Result<Field> {
    let f = e.component(name).ok_or_else(|| Error::InvalidArgument(format!("unknown tree {name}")))?;
    let Some(sub) = subtraction(name) else { return Ok(f.clone()) };
    let v = sub.value(c);
    Ok(match sub.factor {
        Factor::One => f.map(|x| x + v),
        Factor::X => f.zip_map(&e.x, |y, x| y + v * x)?,
        Factor::U => return Err(Error::InvalidArgument(format!("{name} is not a tree"))),
    })
}

/// Sweeps `r`, building raw and renormalized trees from one noise path per `r`
/// (raw values differ from renormalized ones by exactly the subtraction).
pub fn tree_divergence_report(grid: &Grid, r_sweep: &[f64], template: &TreeRun) -> Result<DivergenceReport> {
    if r_sweep.len() < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: r_sweep.len() });
    }
    let (lo, hi) = r_sweep.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    if (hi / lo).log10() < 1.5 {
        return Err(Error::Refused("r sweep must span at least 1.5 decades".into()));
    }
    let mut rows = Vec::new();
    for &r in r_sweep {
        let run = TreeRun { r, renormalized: true, ..template.clone() };
        let mut acc = vec![[0.0f64; 4]; SWEPT.len()];
        run_trees(grid, &run, (true, true), |s| {
            let ren = s.snapshot()?;
            for (i, name) in SWEPT.iter().enumerate() {
                let b = ren.component(name).unwrap();
                let a = without_counterterm(&ren, name, s.constants())?;
                let (g, p, q) = REPORT_NORM;
                acc[i][0] += a.mean();
                acc[i][1] += b.mean();
                acc[i][2] += crate::paraproduct::besov_norm(&a, g, p, q)?;
                acc[i][3] += crate::paraproduct::besov_norm(b, g, p, q)?;
            }
            Ok(())
        })?;
        let c = run.count as f64;
        for (i, name) in SWEPT.iter().enumerate() {
            rows.push(DivergenceRow {
                r,
                component: name,
                raw_mean: acc[i][0] / c,
                renormalized_mean: acc[i][1] / c,
                raw_norm: acc[i][2] / c,
                renormalized_norm: acc[i][3] / c,
            });
        }
    }
    let fits = SWEPT
        .iter()
        .map(|name| {
            let sel: Vec<&DivergenceRow> = rows.iter().filter(|r| r.component == *name).collect();
            let logr: Vec<f64> = sel.iter().map(|r| r.r.ln()).collect();
            let abs_log: Vec<f64> = logr.iter().map(|l| -l).collect();
            let fit = |ys: Vec<f64>, xs: &[f64]| stats::line(xs, &ys).slope;
            DivergenceFit {
                component: name,
                raw_log_slope: fit(sel.iter().map(|r| r.raw_mean).collect(), &abs_log),
                raw_power: fit(sel.iter().map(|r| r.raw_mean.abs().ln()).collect(), &logr),
                renormalized_log_slope: fit(sel.iter().map(|r| r.renormalized_mean).collect(), &abs_log),
                renormalized_power: fit(sel.iter().map(|r| r.renormalized_mean.abs().ln()).collect(), &logr),
            }
        })
        .collect();
    Ok(DivergenceReport { rows, fits })
}
