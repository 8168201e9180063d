//! Universal counterterms `a_r`, `b_r`: closed forms, heat-kernel mode sums
//! and the reduced sunset integral.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Relative size of `e^{-2 r lambda}` tolerated at the frequency cutoff.
pub const CUTOFF_TOL: f64 = 1e-12;

const QUAD_TOL: f64 = 1e-13;
const SUNSET_TOL: f64 = 1e-11;

fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("r = {r} must be positive")))
    }
}

/// `a_r = r^{-1/2} / (4 sqrt(2) pi^{3/2})`.
pub fn a_closed(r: f64) -> Result<f64> {
    check_r(r)?;
    Ok(1.0 / (4.0 * 2f64.sqrt() * PI.powf(1.5) * r.sqrt()))
}

/// `b_r = |log r| / (32 pi^2)`.
pub fn b_closed(r: f64) -> Result<f64> {
    check_r(r)?;
    Ok(r.ln().abs() / (32.0 * PI * PI))
}

/// Which evaluation produced a [`RenormConstants`] value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    Numeric,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenormConstants {
    pub r: f64,
    pub a: f64,
    pub b: f64,
    pub provenance: Provenance,
}

impl RenormConstants {
    pub fn closed(r: f64) -> Result<Self> {
        Ok(Self { r, a: a_closed(r)?, b: b_closed(r)?, provenance: Provenance::ClosedForm })
    }

    /// Mode-sum `a` on the given lattice and quadrature `b`.
    pub fn numeric(dim: usize, n: usize, period: f64, r: f64) -> Result<Self> {
        Ok(Self { r, a: a_numeric_lattice(dim, n, period, r)?, b: b_numeric(r)?, provenance: Provenance::Numeric })
    }

    /// Mass counterterm coefficient `3(a - b)` of the unit-coupling equation.
    pub fn mass(&self) -> f64 {
        3.0 * (self.a - self.b)
    }

    /// Pointwise counterterm `3 lambda a - 3 lambda^2 b` for coupling `lambda`.
    pub fn mass_for_coupling(&self, lambda: f64) -> f64 {
        3.0 * lambda * self.a - 3.0 * lambda * lambda * self.b
    }
}

/// Field a subtraction multiplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    One,
    X,
    U,
}

/// Subtraction attached to a raw product: `renormalized = raw - (a_coeff a + b_coeff b) * factor`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Subtraction {
    pub tree: &'static str,
    pub a_coeff: f64,
    pub b_coeff: f64,
    pub factor: Factor,
}

impl Subtraction {
    pub fn value(&self, c: &RenormConstants) -> f64 {
        self.a_coeff * c.a + self.b_coeff * c.b
    }
}

/// The single table of counterterm bookkeeping. Each resonant tree carries a
/// third of `b`; the three of them add up to the `3b` in the equation's
/// renormalized cube `u^3 - 3(a - b) u`.
pub const COUNTERTERMS: [Subtraction; 6] = [
    Subtraction { tree: "W2", a_coeff: 1.0, b_coeff: 0.0, factor: Factor::One },
    Subtraction { tree: "W3", a_coeff: 3.0, b_coeff: 0.0, factor: Factor::X },
    Subtraction { tree: "R2", a_coeff: 0.0, b_coeff: 1.0 / 3.0, factor: Factor::One },
    Subtraction { tree: "R3", a_coeff: 0.0, b_coeff: 1.0 / 3.0, factor: Factor::One },
    Subtraction { tree: "R4", a_coeff: 0.0, b_coeff: 1.0, factor: Factor::X },
    Subtraction { tree: "u^3", a_coeff: 3.0, b_coeff: -3.0, factor: Factor::U },
];

pub fn subtraction(tree: &str) -> Option<&'static Subtraction> {
    COUNTERTERMS.iter().find(|s| s.tree == tree)
}

/// Smallest power-of-two `N` with `e^{-2r(1 + (pi N / L)^2)} < CUTOFF_TOL`.
pub fn minimal_n(period: f64, r: f64) -> Result<usize> {
    check_r(r)?;
    let mut n = 2usize;
    loop {
        let kmax = PI * n as f64 / period;
        if (-2.0 * r * (1.0 + kmax * kmax)).exp() < CUTOFF_TOL {
            return Ok(n);
        }
        if n > 1 << 24 {
            return Err(Error::InvalidArgument(format!("r = {r} needs an impractically fine grid")));
        }
        n *= 2;
    }
}

/// `L^{-d} sum_k e^{-2 r lambda_k} / lambda_k` over the grid's frequency set.
pub fn a_numeric(grid: &Grid, r: f64) -> Result<f64> {
    a_numeric_lattice(grid.dim(), grid.n(), grid.period(), r)
}

/// As [`a_numeric`] without materializing the grid. The cube sum factorizes
/// through `1/lambda = int_0^inf e^{-s lambda} ds`:
/// `sum_k e^{-2r lambda}/lambda = int_{2r}^inf e^{-s} theta_N(s)^d ds`, with
/// `theta_N(s) = sum_{|k| < N/2 or k = -N/2} e^{-s (2 pi k / L)^2}`.
pub fn a_numeric_lattice(dim: usize, n: usize, period: f64, r: f64) -> Result<f64> {
    check_r(r)?;
    let min_n = minimal_n(period, r)?;
    if n < min_n {
        return Err(Error::InsufficientCutoff { r, n, min_n });
    }
    let scale = 2.0 * PI / period;
    let theta = |s: f64| {
        let h = (n / 2) as i64;
        let mut sum = 1.0;
        for k in 1..=h {
            let t = (-s * (k as f64 * scale).powi(2)).exp();
            // +k and -k, except k = N/2 which appears once
            sum += if k == h { t } else { 2.0 * t };
            if t < 1e-18 * sum {
                break;
            }
        }
        sum
    };
    // s = e^t; integrate in t over unit pieces up to s = 64 (e^{-64} is negligible)
    let f = |t: f64| {
        let s = t.exp();
        s * (-s).exp() * theta(s).powi(dim as i32)
    };
    let integral = piecewise(&f, (2.0 * r).ln(), 64f64.ln(), 0.5);
    Ok(integral / period.powi(dim as i32))
}

/// Direct sum of `L^{-d} e^{-2 r lambda_k} / lambda_k` over the grid's modes.
pub fn a_mode_sum(grid: &Grid, r: f64) -> Result<f64> {
    check_r(r)?;
    let s: f64 = grid.lambda().iter().map(|&l| (-2.0 * r * l).exp() / l).sum();
    Ok(s / grid.volume())
}

fn piecewise(f: &dyn Fn(f64) -> f64, a: f64, b: f64, width: f64) -> f64 {
    let pieces = ((b - a) / width).ceil().max(1.0) as usize;
    let h = (b - a) / pieces as f64;
    (0..pieces).map(|i| quadrature::integrate(f, a + i as f64 * h, a + (i + 1) as f64 * h, QUAD_TOL).integral).sum()
}

/// `int_{[1, A]^2} (alpha + beta + alpha beta)^{-3/2}`.
pub fn sunset_truncated(upper: f64) -> f64 {
    sunset_family(1.0, upper.recip())
}

/// The untruncated sunset integral; equals `2 pi / 3`.
pub fn sunset_constant() -> f64 {
    sunset_family(1.0, 0.0)
}

/// `J(theta) = int_{[1, 1/lo]^2} (alpha beta + theta (alpha + beta))^{-3/2}`;
/// `J(1)` is the sunset constant. With `alpha = x^{-2}`, `beta = y^{-2}` the
/// integrand becomes the smooth `4 (1 + theta (x^2 + y^2))^{-3/2}` on
/// `[sqrt(lo), 1]^2`.
pub fn sunset_family(theta: f64, lo: f64) -> f64 {
    let x0 = lo.sqrt();
    let inner = |x: f64| {
        let c = 1.0 + theta * x * x;
        quadrature::integrate(|y| 4.0 * (c + theta * y * y).powf(-1.5), x0, 1.0, SUNSET_TOL).integral
    };
    quadrature::integrate(inner, x0, 1.0, SUNSET_TOL).integral
}

/// Reduced divergent part of the `b` integral,
/// `(4 pi)^{-3} int_0^1 da int_{[a+2r, inf)^2} (s_2 a + s_1 a + s_1 s_2)^{-3/2}`.
/// Rescaling `s_i = (a + 2r) alpha_i` and `a = 2r (e^v - 1)` gives
/// `(4 pi)^{-3} int_0^{ln(1 + 1/(2r))} J(1 - e^{-v}) dv`.
pub fn b_numeric(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 0.1) {
        return Err(Error::InvalidArgument(format!("r = {r} outside (0, 0.1)")));
    }
    let top = (1.0 + 0.5 / r).ln();
    let f = |v: f64| sunset_family(-(-v).exp_m1(), 0.0);
    let integral = piecewise(&f, 0.0, top, 2.0);
    Ok(integral / (4.0 * PI).powi(3))
}
