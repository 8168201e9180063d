//! Time integration of the renormalized Langevin equation, its Cole-Hopf
//! reformulation, the coming-down experiment and the
//! comparison-test algorithm.
//!
//! Every nonlinear drift is evaluated pointwise on the `2N` padded grid and
//! projected back with one forward transform; the linear part and the noise
//! are integrated exactly (exponential Euler).

use crate::error::{Error, Result};
use crate::field::{same_grid, Field, Spectrum};
use crate::grid::Grid;
use crate::multiplier::{duhamel_spectral, gradient, phi1};
use crate::noise::{ou_increment, sample_stationary_spectrum, FrozenNoise, NoiseStream, INITIAL_CONDITION_BIT};
use crate::observables::lp_norm;
use crate::paraproduct::besov_norm;
use crate::renorm::RenormConstants;
use crate::trees::TreeState;

/// Small loss of regularity used for the `C^{-1/2-eps}` diagnostics.
pub const EPSILON: f64 = 0.05;

pub const DEFAULT_BLOWUP: f64 = 1e6;

/// Coupling constant `lambda`, uniform or space dependent.
#[derive(Clone, Debug)]
pub enum Coupling {
    Constant(f64),
    Field(Field),
}

#[derive(Clone, Debug)]
pub enum InitialCondition {
    Zero,
    Given(Field),
    /// Rough Gaussian field rescaled to the given `C^{-1/2-eps}` norm.
    ScaledRandom { size: f64 },
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub dim: usize,
    pub n: usize,
    pub period: f64,
    pub r: f64,
    pub dt: f64,
    pub horizon: f64,
    pub coupling: Coupling,
    /// `+3 lambda a u`
    pub mass_term: bool,
    /// `-3 lambda^2 b u`
    pub log_term: bool,
    /// Switches the forcing `sqrt(2) xi_r` off for deterministic runs.
    pub noise: bool,
    pub seed: u64,
    pub stream: u64,
    pub initial: InitialCondition,
    pub blowup_threshold: f64,
    /// Steps between stored snapshots (0 keeps none).
    pub snapshot_every: usize,
    /// Steps between diagnostic rows.
    pub diagnostics_every: usize,
}

impl SimConfig {
    pub fn new(dim: usize, n: usize, r: f64, dt: f64, horizon: f64) -> Self {
        Self {
            dim,
            n,
            period: crate::grid::DEFAULT_PERIOD,
            r,
            dt,
            horizon,
            coupling: Coupling::Constant(1.0),
            mass_term: true,
            log_term: true,
            noise: true,
            seed: 0,
            stream: 0,
            initial: InitialCondition::Zero,
            blowup_threshold: DEFAULT_BLOWUP,
            snapshot_every: 0,
            diagnostics_every: 1,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n, self.period)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) {
            return Err(Error::InvalidArgument(format!("r = {} must be positive", self.r)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::NonPositiveStep(self.dt));
        }
        if !(self.horizon >= 0.0) {
            return Err(Error::InvalidArgument("horizon must be non-negative".into()));
        }
        match &self.coupling {
            Coupling::Constant(l) if !(*l >= 0.0) => {
                return Err(Error::InvalidArgument(format!("coupling {l} must be non-negative")))
            }
            Coupling::Field(f) if f.values().iter().any(|&v| !(v > 0.0)) => {
                return Err(Error::InvalidArgument("coupling field must be strictly positive".into()))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn constants(&self) -> Result<RenormConstants> {
        RenormConstants::closed(self.r)
    }
}

/// Rough field `X` sample at small regularization, normalized to unit
/// `C^{-1/2-eps}` norm.
pub fn unit_rough_field(grid: &Grid, seed: u64, stream: u64) -> Result<Field> {
    let mut s = NoiseStream::new(seed, stream | INITIAL_CONDITION_BIT);
    let f = sample_stationary_spectrum(grid, 0.0, &mut s).to_field();
    let norm = besov_norm(&f, -0.5 - EPSILON, f64::INFINITY, f64::INFINITY)?;
    Ok(f.scale(1.0 / norm))
}

pub fn initial_field(grid: &Grid, ic: &InitialCondition, seed: u64, stream: u64) -> Result<Field> {
    match ic {
        InitialCondition::Zero => Ok(Field::zeros(grid)),
        InitialCondition::Given(f) => {
            same_grid(grid, f.grid())?;
            Ok(f.clone())
        }
        InitialCondition::ScaledRandom { size } => Ok(unit_rough_field(grid, seed, stream)?.scale(*size)),
    }
}

/// Exponential-Euler stepper for
/// `(d/dt + P) u = sqrt(2) xi_r - lambda u^3 + (3 lambda a - 3 lambda^2 b) u`.
#[derive(Clone, Debug)]
pub struct UStepper {
    grid: Grid,
    dt: f64,
    threshold: f64,
    /// `lambda` and the counterterm coefficient on the padded grid.
    lambda: Padded,
    mass: Padded,
}

#[derive(Clone, Debug)]
enum Padded {
    Uniform(f64),
    Values(Vec<f64>),
}

impl Padded {
    fn at(&self, i: usize) -> f64 {
        match self {
            Padded::Uniform(c) => *c,
            Padded::Values(v) => v[i],
        }
    }
}

impl UStepper {
    pub fn new(grid: &Grid, cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let c = cfg.constants()?;
        let a = if cfg.mass_term { c.a } else { 0.0 };
        let b = if cfg.log_term { c.b } else { 0.0 };
        let (lambda, mass) = match &cfg.coupling {
            Coupling::Constant(l) => (Padded::Uniform(*l), Padded::Uniform(3.0 * l * a - 3.0 * l * l * b)),
            Coupling::Field(f) => {
                same_grid(grid, f.grid())?;
                let lp = f.spectrum().to_padded_values();
                let m = lp.iter().map(|l| 3.0 * l * a - 3.0 * l * l * b).collect();
                (Padded::Values(lp), Padded::Values(m))
            }
        };
        Ok(Self { grid: grid.clone(), dt: cfg.dt, threshold: cfg.blowup_threshold, lambda, mass })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Counterterm coefficient `3 lambda(x) a - 3 lambda(x)^2 b` on the grid's cells.
    pub fn counterterm_field(&self) -> Field {
        let big = self.grid.padded();
        let vals: Vec<f64> = (0..big.len()).map(|i| self.mass.at(i)).collect();
        Spectrum::from_padded_values(&self.grid, &vals).to_field()
    }

    /// Dealiased drift `-lambda u^3 + m u`; refuses non-finite or oversized input.
    pub fn drift(&self, u: &Spectrum, t: f64) -> Result<Spectrum> {
        let p = u.to_padded_values();
        check_blowup(&p, t, self.threshold)?;
        let d: Vec<f64> = p.iter().enumerate().map(|(i, &x)| -self.lambda.at(i) * x * x * x + self.mass.at(i) * x).collect();
        Ok(Spectrum::from_padded_values(&self.grid, &d))
    }

    /// Lie splitting: the pointwise flow of `u' = -lambda u^3`, solved exactly,
    /// then an exponential-Euler step of the linear part. Stable for any size
    /// of `u`, first order in `dt`.
    pub fn split_step(&self, u: &Spectrum, increment: Option<&Spectrum>, t: f64) -> Result<Spectrum> {
        let p = u.to_padded_values();
        check_blowup(&p, t, self.threshold)?;
        let flowed: Vec<f64> = p
            .iter()
            .enumerate()
            .map(|(i, &x)| x / (1.0 + 2.0 * self.lambda.at(i) * x * x * self.dt).sqrt())
            .collect();
        let mass: Vec<f64> = flowed.iter().enumerate().map(|(i, &x)| self.mass.at(i) * x).collect();
        let v = Spectrum::from_padded_values(&self.grid, &flowed);
        let mut next = duhamel_spectral(&v, &Spectrum::from_padded_values(&self.grid, &mass), self.dt)?;
        if let Some(inc) = increment {
            next.axpy(1.0, inc);
        }
        Ok(next)
    }

    /// One step with an optional stochastic-convolution increment.
    pub fn step(&self, u: &Spectrum, increment: Option<&Spectrum>, t: f64) -> Result<Spectrum> {
        let n = self.drift(u, t)?;
        let mut next = duhamel_spectral(u, &n, self.dt)?;
        if let Some(inc) = increment {
            next.axpy(1.0, inc);
        }
        Ok(next)
    }
}

fn check_blowup(p: &[f64], t: f64, threshold: f64) -> Result<()> {
    let sup = p.iter().fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
    if sup > threshold || !sup.is_finite() {
        return Err(Error::BlowUp { t, sup, threshold });
    }
    Ok(())
}

/// One exponential-Euler step of `u` with fresh noise from `stream`.
pub fn step_u(u: &Field, cfg: &SimConfig, stream: &mut NoiseStream) -> Result<Field> {
    let stepper = UStepper::new(u.grid(), cfg)?;
    let inc = if cfg.noise {
        let g = stream.next_gaussians(u.grid());
        Some(ou_increment(u.grid(), cfg.dt, cfg.r, &g))
    } else {
        None
    };
    Ok(stepper.step(&u.spectrum(), inc.as_ref(), 0.0)?.to_field())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticRow {
    pub t: f64,
    pub l2: f64,
    pub l8: f64,
    /// `||u||_{B^{-1/2-eps}_{inf,inf}}`
    pub besov: f64,
    /// Running `sup_{s <= t} s^{1/2} ||u(s)||_{B^{-1/2-eps}_{inf,inf}}`.
    pub weighted: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Field>,
    pub diagnostics: Vec<DiagnosticRow>,
    /// Set when the run stopped early.
    pub blow_up: Option<String>,
}

/// Integrates the `u`-equation up to the horizon.
pub fn simulate(cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let stepper = UStepper::new(&grid, cfg)?;
    let mut stream = NoiseStream::new(cfg.seed, cfg.stream);
    let mut u = initial_field(&grid, &cfg.initial, cfg.seed, cfg.stream)?.spectrum();
    let steps = (cfg.horizon / cfg.dt).round() as usize;
    let mut traj = Trajectory::default();
    let mut weighted = 0.0f64;
    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        let diag = cfg.diagnostics_every > 0 && (k % cfg.diagnostics_every == 0 || k == steps);
        let snap = cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0;
        if diag || snap {
            let f = u.to_field();
            if diag {
                let besov = besov_norm(&f, -0.5 - EPSILON, f64::INFINITY, f64::INFINITY)?;
                weighted = weighted.max(t.sqrt() * besov);
                traj.diagnostics.push(DiagnosticRow { t, l2: lp_norm(&f, 2.0), l8: lp_norm(&f, 8.0), besov, weighted });
            }
            if snap {
                traj.times.push(t);
                traj.snapshots.push(f);
            }
        }
        if k == steps {
            break;
        }
        let inc = cfg.noise.then(|| {
            let g = stream.next_gaussians(&grid);
            ou_increment(&grid, cfg.dt, cfg.r, &g)
        });
        match stepper.step(&u, inc.as_ref(), t) {
            Ok(next) => u = next,
            Err(e @ Error::BlowUp { .. }) => {
                traj.blow_up = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(traj)
}

/// Direction of the Cole-Hopf map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `v = e^{3 I2} (u - X + I3) - v_ref`
    Forward,
    /// `u = e^{-3 I2} (v + v_ref) + X - I3`
    Backward,
}

/// Tree fields entering the Cole-Hopf map, at one time.
#[derive(Clone, Debug)]
pub struct ChTrees {
    pub x: Field,
    pub i2: Field,
    pub i3: Field,
    pub v_ref: Field,
}

impl ChTrees {
    pub fn zero(grid: &Grid) -> Self {
        let z = Field::zeros(grid);
        Self { x: z.clone(), i2: z.clone(), i3: z.clone(), v_ref: z }
    }
}

pub fn cole_hopf(f: &Field, trees: &ChTrees, direction: Direction) -> Result<Field> {
    for g in [&trees.x, &trees.i2, &trees.i3, &trees.v_ref] {
        same_grid(f.grid(), g.grid())?;
    }
    let (x, i2, i3, vr) = (trees.x.values(), trees.i2.values(), trees.i3.values(), trees.v_ref.values());
    let vals = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, &w)| match direction {
            Direction::Forward => (3.0 * i2[i]).exp() * (w - x[i] + i3[i]) - vr[i],
            Direction::Backward => (-3.0 * i2[i]).exp() * (w + vr[i]) + x[i] - i3[i],
        })
        .collect();
    Field::from_values(f.grid(), vals)
}

/// Trees plus `v_ref`, stepped together:
/// `(d/dt + P) v_ref = 3 e^{3 I2} (I3 W2 - b (X + I3))`.
#[derive(Clone, Debug)]
pub struct JpTrees {
    pub trees: TreeState,
    pub v_ref: Spectrum,
}

impl JpTrees {
    pub fn new(trees: TreeState) -> Result<Self> {
        if !trees.renormalized() {
            return Err(Error::InvalidArgument("Cole-Hopf formulation needs renormalized trees".into()));
        }
        let v_ref = Spectrum::zeros(trees.grid());
        Ok(Self { trees, v_ref })
    }

    pub fn grid(&self) -> &Grid {
        self.trees.grid()
    }

    pub fn ch(&self) -> ChTrees {
        ChTrees {
            x: self.trees.x.to_field(),
            i2: self.trees.i2.to_field(),
            i3: self.trees.i3.to_field(),
            v_ref: self.v_ref.to_field(),
        }
    }

    fn padded(&self) -> PaddedTrees {
        let c = self.trees.constants();
        let x = self.trees.x.to_padded_values();
        let w2 = x.iter().map(|v| v * v - c.a).collect();
        PaddedTrees {
            a: c.a,
            b: c.b,
            x,
            w2,
            i2: self.trees.i2.to_padded_values(),
            i3: self.trees.i3.to_padded_values(),
            grad_i2: gradient(&self.trees.i2).iter().map(Spectrum::to_padded_values).collect(),
            rho: self.v_ref.to_padded_values(),
            grad_rho: gradient(&self.v_ref).iter().map(Spectrum::to_padded_values).collect(),
        }
    }

    fn v_ref_forcing(&self, p: &PaddedTrees) -> Spectrum {
        let f: Vec<f64> = (0..p.x.len())
            .map(|i| 3.0 * (3.0 * p.i2[i]).exp() * (p.i3[i] * p.w2[i] - p.b * (p.x[i] + p.i3[i])))
            .collect();
        Spectrum::from_padded_values(self.grid(), &f)
    }

    /// Advances trees and `v_ref` by `dt` with the given noise increment.
    pub fn step(&mut self, dt: f64, increment: &Spectrum) -> Result<()> {
        let p = self.padded();
        let forcing = self.v_ref_forcing(&p);
        let lambda = self.trees.grid().lambda();
        for ((r, f), &l) in self.v_ref.coeffs_mut().iter_mut().zip(forcing.coeffs()).zip(lambda) {
            *r = *r * (-dt * l).exp() + f * phi1(dt, l);
        }
        self.trees.step(dt, increment)
    }

    /// Coefficients `Z2, Z1, Z0` of the `v`-equation on the cell grid.
    pub fn z_fields(&self) -> [Field; 3] {
        let p = self.padded();
        let n = p.x.len();
        let mut z = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for i in 0..n {
            let c = p.coefficients(i);
            z[0][i] = c.z2;
            z[1][i] = c.z1;
            z[2][i] = c.z0;
        }
        z.map(|v| Spectrum::from_padded_values(self.grid(), &v).to_field())
    }
}

/// Pointwise values of every tree on the padded grid.
struct PaddedTrees {
    a: f64,
    b: f64,
    x: Vec<f64>,
    w2: Vec<f64>,
    i2: Vec<f64>,
    i3: Vec<f64>,
    grad_i2: Vec<Vec<f64>>,
    rho: Vec<f64>,
    grad_rho: Vec<Vec<f64>>,
}

struct Coefficients {
    k: f64,
    z2: f64,
    z1: f64,
    z0: f64,
}

impl PaddedTrees {
    /// With `E = e^{3 I2}`, `K = E^{-2}` and `V = E (u - X + I3) = v + v_ref`:
    /// `(d/dt + P) V = -6 grad I2 . grad V - K V^3 + Z2' V^2 + Z1' V + forcing + Z0'`
    /// where `Z2' = 3 (I3 - X) / E`,
    /// `Z1' = 9 |grad I2|^2 - 3b - 3 I2 + 6 X I3 - 3 I3^2`,
    /// `Z0' = E (I3^3 - 3 X I3^2) + 6 b E I3`,
    /// and `forcing` is exactly the `v_ref` source. Shifting by `v_ref` gives
    /// the coefficients returned here.
    fn coefficients(&self, i: usize) -> Coefficients {
        let _ = self.a;
        let (x, i2, i3, rho) = (self.x[i], self.i2[i], self.i3[i], self.rho[i]);
        let e = (3.0 * i2).exp();
        let k = 1.0 / (e * e);
        let g2: f64 = self.grad_i2.iter().map(|g| g[i] * g[i]).sum();
        let g_rho: f64 = self.grad_i2.iter().zip(&self.grad_rho).map(|(g, h)| g[i] * h[i]).sum();
        let z2p = 3.0 * (i3 - x) / e;
        let z1p = 9.0 * g2 - 3.0 * self.b - 3.0 * i2 + 6.0 * x * i3 - 3.0 * i3 * i3;
        let z0p = e * (i3 * i3 * i3 - 3.0 * x * i3 * i3) + 6.0 * self.b * e * i3;
        Coefficients {
            k,
            z2: -3.0 * k * rho + z2p,
            z1: -3.0 * k * rho * rho + 2.0 * rho * z2p + z1p,
            z0: -6.0 * g_rho - k * rho * rho * rho + z2p * rho * rho + z1p * rho + z0p,
        }
    }
}

/// Stepper for `(d/dt + P) v = -6 grad I2 . grad v - e^{-6 I2} v^3 + Z2 v^2 + Z1 v + Z0`.
#[derive(Clone, Debug)]
pub struct VStepper {
    dt: f64,
    threshold: f64,
}

impl VStepper {
    pub fn new(dt: f64, threshold: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveStep(dt));
        }
        Ok(Self { dt, threshold })
    }

    pub fn drift(&self, v: &Spectrum, trees: &JpTrees, t: f64) -> Result<Spectrum> {
        same_grid(v.grid(), trees.grid())?;
        let p = trees.padded();
        let pv = v.to_padded_values();
        check_blowup(&pv, t, self.threshold)?;
        let gv: Vec<Vec<f64>> = gradient(v).iter().map(Spectrum::to_padded_values).collect();
        let d: Vec<f64> = (0..pv.len())
            .map(|i| {
                let c = p.coefficients(i);
                let transport: f64 = p.grad_i2.iter().zip(&gv).map(|(g, h)| g[i] * h[i]).sum();
                let w = pv[i];
                -6.0 * transport - c.k * w * w * w + c.z2 * w * w + c.z1 * w + c.z0
            })
            .collect();
        Ok(Spectrum::from_padded_values(v.grid(), &d))
    }

    pub fn step(&self, v: &Spectrum, trees: &JpTrees, t: f64) -> Result<Spectrum> {
        let d = self.drift(v, trees, t)?;
        duhamel_spectral(v, &d, self.dt)
    }
}

/// One `v` step followed by the matching tree step with fresh noise.
pub fn step_v(v: &Field, trees: &mut JpTrees, dt: f64, stream: &mut NoiseStream) -> Result<Field> {
    let next = VStepper::new(dt, DEFAULT_BLOWUP)?.step(&v.spectrum(), trees, trees.trees.t)?;
    let g = stream.next_gaussians(trees.grid());
    let inc = ou_increment(trees.grid(), dt, trees.trees.r(), &g);
    trees.step(dt, &inc)?;
    Ok(next.to_field())
}

/// Setup of the Cole-Hopf cross-validation.
#[derive(Clone, Debug)]
pub struct CrossCheck {
    pub n: usize,
    pub r: f64,
    pub horizon: f64,
    /// Step sizes, each half the previous one.
    pub dts: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
    pub initial: InitialCondition,
    /// Number of intermediate checkpoints (besides the horizon).
    pub checkpoints: usize,
}

#[derive(Clone, Debug)]
pub struct CrossCheckRow {
    pub dt: f64,
    /// Relative `L^2` gap between `CH(u)` and `v` at the horizon.
    pub terminal_gap: f64,
    /// Largest relative gap over the checkpoints.
    pub max_gap: f64,
}

#[derive(Clone, Debug)]
pub struct CrossCheckReport {
    pub rows: Vec<CrossCheckRow>,
    /// `log2(gap(dt) / gap(dt/2))` for consecutive rows.
    pub orders: Vec<f64>,
}

/// Evolves `u` directly and `v` through the reformulated equation on one frozen
/// noise path for each step size, and compares `v` with the Cole-Hopf image of `u`.
pub fn cole_hopf_cross_check(cc: &CrossCheck) -> Result<CrossCheckReport> {
    if cc.dts.is_empty() {
        return Err(Error::InvalidArgument("no step sizes".into()));
    }
    let grid = Grid::cube(3, cc.n)?;
    let h = cc.dts.iter().cloned().fold(f64::INFINITY, f64::min);
    let noise = FrozenNoise::new(&grid, cc.r, h, cc.seed, cc.stream)?;
    let u0 = initial_field(&grid, &cc.initial, cc.seed, cc.stream)?;
    let mut rows = Vec::new();
    for &dt in &cc.dts {
        let level = (dt / h).log2().round();
        if (2f64.powf(level) * h - dt).abs() > 1e-12 * dt {
            return Err(Error::InvalidArgument(format!("dt = {dt} is not a power-of-two multiple of {h}")));
        }
        let steps = (cc.horizon / dt).round() as usize;
        let mut cfg = SimConfig::new(3, cc.n, cc.r, dt, cc.horizon);
        cfg.period = grid.period();
        let ustep = UStepper::new(&grid, &cfg)?;
        let vstep = VStepper::new(dt, DEFAULT_BLOWUP)?;
        let mut jp = JpTrees::new(TreeState::from_x(noise.initial(), cc.r, true)?)?;
        let mut u = u0.spectrum();
        let mut v = cole_hopf(&u0, &jp.ch(), Direction::Forward)?.spectrum();
        let every = (steps / (cc.checkpoints + 1)).max(1);
        let mut max_gap = 0.0f64;
        let mut terminal = 0.0;
        for k in 0..steps {
            let t = k as f64 * dt;
            let inc = noise.increment(level as u32, k as u64);
            let nv = vstep.step(&v, &jp, t)?;
            u = ustep.step(&u, Some(&inc), t)?;
            jp.step(dt, &inc)?;
            v = nv;
            if (k + 1) % every == 0 || k + 1 == steps {
                let mapped = cole_hopf(&u.to_field(), &jp.ch(), Direction::Forward)?;
                let vf = v.to_field();
                let gap = lp_norm(&mapped.sub(&vf)?, 2.0) / lp_norm(&vf, 2.0).max(1e-300);
                max_gap = max_gap.max(gap);
                terminal = gap;
            }
        }
        rows.push(CrossCheckRow { dt, terminal_gap: terminal, max_gap });
    }
    let orders = rows.windows(2).map(|w| (w[0].terminal_gap / w[1].terminal_gap).log2()).collect();
    Ok(CrossCheckReport { rows, orders })
}

/// Setup of the coming-down experiment.
#[derive(Clone, Debug)]
pub struct ComeDown {
    pub n: usize,
    pub r: f64,
    pub horizon: f64,
    /// `C^{-1/2-eps}` sizes of the initial conditions (multiples of one rough profile).
    pub sizes: Vec<f64>,
    /// Even exponent, at least 8.
    pub p: f64,
    pub seed: u64,
    pub stream: u64,
    /// Times at which `||v||_{L^p}` is recorded.
    pub times: Vec<f64>,
    /// Fixed step, default `1e-3`. The cubic is integrated exactly, so the
    /// step does not shrink with the initial size.
    pub dt: Option<f64>,
    /// Noise, trees and counterterms off: every run solves `u' = -P u - u^3`.
    pub deterministic: bool,
}

#[derive(Clone, Debug)]
pub struct ComeDownRun {
    pub size: f64,
    pub initial_besov: f64,
    /// `||v(t)||_{L^p}` at the requested times.
    pub norms: Vec<f64>,
    /// `sup_t ||v(t)||_{L^p} / max(t^{-1/2}, 1)` over the recorded times.
    pub constant: f64,
}

#[derive(Clone, Debug)]
pub struct ComeDownReport {
    pub dt: f64,
    pub times: Vec<f64>,
    pub runs: Vec<ComeDownRun>,
    /// Largest over smallest `||v(t*)||_{L^p}` across sizes, `t*` the last recorded time <= 1 (or the first after).
    pub spread_at_one: f64,
    /// Largest over smallest fitted constant.
    pub constant_spread: f64,
    /// `max_i C_i`; the bound `C max(t^{-1/2}, 1)` then holds for every run.
    pub constant: f64,
    /// Relative spread `(max - min) / max` of `||v(0.5)||_{L^p}` (nearest recorded time).
    pub relative_spread_half: f64,
}

fn bound_shape(t: f64) -> f64 {
    t.sqrt().recip().max(1.0)
}

/// All runs share one noise path and one tree path, and step in lock-step.
pub fn coming_down_experiment(cd: &ComeDown) -> Result<ComeDownReport> {
    if cd.p < 8.0 || cd.p.fract() != 0.0 || (cd.p as u64) % 2 != 0 {
        return Err(Error::InvalidArgument(format!("p = {} must be an even integer >= 8", cd.p)));
    }
    if cd.sizes.is_empty() || cd.times.is_empty() {
        return Err(Error::InvalidArgument("need at least one size and one time".into()));
    }
    let grid = Grid::cube(3, cd.n)?;
    let profile = unit_rough_field(&grid, cd.seed, cd.stream)?;
    let dt = cd.dt.unwrap_or(1e-3);
    if !(dt > 0.0) {
        return Err(Error::NonPositiveStep(dt));
    }
    let steps = (cd.horizon / dt).ceil() as usize;
    let noise = FrozenNoise::new(&grid, cd.r, dt, cd.seed, cd.stream)?;
    let mut cfg = SimConfig::new(3, cd.n, cd.r, dt, cd.horizon);
    if cd.deterministic {
        cfg.mass_term = false;
        cfg.log_term = false;
    }
    let zero = ChTrees::zero(&grid);
    let ustep = UStepper::new(&grid, &cfg)?;
    let mut jp = JpTrees::new(TreeState::from_x(noise.initial(), cd.r, true)?)?;
    let mut us: Vec<Spectrum> = cd.sizes.iter().map(|s| profile.scale(*s).spectrum()).collect();
    let mut norms = vec![Vec::with_capacity(cd.times.len()); us.len()];
    let mut next_time = 0;
    let mut recorded = Vec::new();
    for k in 0..=steps {
        let t = k as f64 * dt;
        while next_time < cd.times.len() && cd.times[next_time] <= t + 0.5 * dt {
            let ch = if cd.deterministic { zero.clone() } else { jp.ch() };
            for (i, u) in us.iter().enumerate() {
                let v = cole_hopf(&u.to_field(), &ch, Direction::Forward)?;
                norms[i].push(lp_norm(&v, cd.p));
            }
            recorded.push(t);
            next_time += 1;
        }
        if k == steps || next_time == cd.times.len() {
            break;
        }
        if cd.deterministic {
            for u in us.iter_mut() {
                *u = ustep.split_step(u, None, t)?;
            }
            continue;
        }
        let inc = noise.increment(0, k as u64);
        for u in us.iter_mut() {
            *u = ustep.split_step(u, Some(&inc), t)?;
        }
        jp.step(dt, &inc)?;
    }
    let runs: Vec<ComeDownRun> = cd
        .sizes
        .iter()
        .zip(norms)
        .map(|(&s, ns)| {
            let constant = recorded.iter().zip(&ns).map(|(&t, &n)| n / bound_shape(t.max(1e-300))).fold(0.0, f64::max);
            let initial_besov = s.abs();
            ComeDownRun { size: s, initial_besov, norms: ns, constant }
        })
        .collect();
    let pick = |target: f64| {
        recorded
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    };
    let spread = |i: usize| {
        let vals: Vec<f64> = runs.iter().map(|r| r.norms[i]).collect();
        let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        (lo, hi)
    };
    let (lo1, hi1) = spread(pick(1.0));
    let (lo5, hi5) = spread(pick(0.5));
    let cs: Vec<f64> = runs.iter().map(|r| r.constant).collect();
    let (clo, chi) = cs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    Ok(ComeDownReport {
        dt,
        times: recorded,
        spread_at_one: hi1 / lo1,
        constant_spread: chi / clo,
        constant: chi,
        relative_spread_half: (hi5 - lo5) / hi5,
        runs,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonStep {
    pub t: f64,
    pub value: f64,
    pub next: f64,
    pub bound: f64,
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub steps: Vec<ComparisonStep>,
    /// Smallest `bound - F(t_n)` (non-negative when the bound holds).
    pub margin: f64,
    pub holds: bool,
}

/// Constant `2^{l/(l-1)} (c / (1 - 2^{-(l-1)}))^{1/(l-1)}` of the comparison bound.
pub fn comparison_constant(lambda: f64, c: f64) -> f64 {
    2f64.powf(lambda / (lambda - 1.0)) * (c / (1.0 - 2f64.powf(-(lambda - 1.0)))).powf(1.0 / (lambda - 1.0))
}

/// Runs the partition algorithm on samples `f[i] = F(ts[i])` (`ts` increasing,
/// starting at 0, `F >= 0`) after checking `int_s^t F^lambda <= c (F(s) + 1)`
/// on every sample pair, and checks
/// `F(t_n) <= 1 + K t_{n+1}^{-1/(lambda-1)}` along the produced sequence.
pub fn comparison_test(ts: &[f64], f: &[f64], lambda: f64, c: f64) -> Result<ComparisonReport> {
    if ts.len() != f.len() || ts.len() < 2 {
        return Err(Error::InvalidArgument("need matching samples, at least two".into()));
    }
    if !(lambda > 1.0 && c > 0.0) {
        return Err(Error::InvalidArgument(format!("need lambda > 1 and c > 0, got {lambda}, {c}")));
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) || f.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidArgument("times must increase and F must be non-negative".into()));
    }
    // cumulative trapezoid of F^lambda
    let mut cum = vec![0.0; ts.len()];
    for i in 1..ts.len() {
        cum[i] = cum[i - 1] + 0.5 * (ts[i] - ts[i - 1]) * (f[i].powf(lambda) + f[i - 1].powf(lambda));
    }
    for s in 0..ts.len() {
        let rhs = c * (f[s] + 1.0);
        for t in s + 1..ts.len() {
            let lhs = cum[t] - cum[s];
            if lhs > rhs * (1.0 + 1e-12) {
                return Err(Error::HypothesisViolated { s: ts[s], t: ts[t], lhs, rhs });
            }
        }
    }
    let k = comparison_constant(lambda, c);
    let end = *ts.last().unwrap();
    let mut steps = Vec::new();
    let mut n = 0usize;
    loop {
        let star = ts[n] + c * 2f64.powf(lambda) * (1.0 + f[n]).powf(1.0 - lambda);
        if star > end {
            break;
        }
        // argmin of F over samples in (t_n, t*]
        let next = (n + 1..ts.len())
            .take_while(|&i| ts[i] <= star)
            .min_by(|&a, &b| f[a].total_cmp(&f[b]));
        let Some(next) = next else { break };
        let bound = 1.0 + k * ts[next].powf(-1.0 / (lambda - 1.0));
        steps.push(ComparisonStep { t: ts[n], value: f[n], next: ts[next], bound });
        n = next;
    }
    let margin = steps.iter().map(|s| s.bound - s.value).fold(f64::INFINITY, f64::min);
    Ok(ComparisonReport { holds: margin >= 0.0, margin, steps })
}

/// Exact solution of `u' = -u^3`.
pub fn cubic_decay(u0: f64, t: f64) -> f64 {
    u0 / (1.0 + 2.0 * u0 * u0 * t).sqrt()
}
