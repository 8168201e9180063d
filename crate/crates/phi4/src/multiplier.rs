//! Fourier multipliers `m(P)` for `P = 1 - Delta` and the exponential-Euler step.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{same_grid, Field, Spectrum};

/// Real symbol `m(lambda)` applied to mode `k` through its eigenvalue `lambda_k`.
#[derive(Clone)]
pub struct Multiplier {
    name: String,
    symbol: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Multiplier({})", self.name)
    }
}

impl Multiplier {
    pub fn from_fn(name: impl Into<String>, symbol: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), symbol: Arc::new(symbol) }
    }

    pub fn identity() -> Self {
        Self::from_fn("1", |_| 1.0)
    }

    /// `P` itself.
    pub fn p() -> Self {
        Self::from_fn("P", |l| l)
    }

    /// `P^{-1}`.
    pub fn p_inv() -> Self {
        Self::from_fn("P^-1", |l| 1.0 / l)
    }

    /// Heat semigroup `e^{-tP}`.
    pub fn heat(t: f64) -> Self {
        Self::from_fn(format!("exp(-{t}P)"), move |l| (-t * l).exp())
    }

    /// `Delta = 1 - P`.
    pub fn laplacian() -> Self {
        Self::from_fn("Delta", |l| 1.0 - l)
    }

    /// `P^{-1}(1 - e^{-tP})`, the Duhamel weight of a frozen forcing over `[0, t]`.
    pub fn duhamel(t: f64) -> Self {
        Self::from_fn(format!("phi1({t}P)"), move |l| phi1(t, l))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        (self.symbol)(lambda)
    }

    /// Pointwise product of symbols.
    pub fn compose(&self, other: &Multiplier) -> Multiplier {
        let (a, b) = (self.symbol.clone(), other.symbol.clone());
        Self::from_fn(format!("{}*{}", self.name, other.name), move |l| a(l) * b(l))
    }
}

/// `(1 - e^{-t lambda}) / lambda`, evaluated without cancellation for small `t lambda`.
pub fn phi1(t: f64, lambda: f64) -> f64 {
    let z = t * lambda;
    if z.abs() < 1e-8 {
        t * (1.0 - 0.5 * z)
    } else {
        -(-z).exp_m1() / lambda
    }
}

/// Scales every Fourier coefficient of `f` by `m(lambda_k)`.
pub fn apply_multiplier(f: &Field, m: &Multiplier) -> Result<Field> {
    Ok(apply_to_spectrum(&f.spectrum(), m)?.to_field())
}

pub fn apply_to_spectrum(s: &Spectrum, m: &Multiplier) -> Result<Spectrum> {
    let lambda = s.grid().lambda();
    let mut out = s.clone();
    for (c, &l) in out.coeffs_mut().iter_mut().zip(lambda) {
        let w = m.eval(l);
        if !w.is_finite() {
            return Err(Error::NonFiniteMultiplier { lambda: l });
        }
        *c *= w;
    }
    Ok(out)
}

/// Exponential-Euler step `e^{-dt P} u + P^{-1}(1 - e^{-dt P}) N` per mode.
pub fn duhamel_step(u: &Field, nonlinearity: &Field, dt: f64) -> Result<Field> {
    same_grid(u.grid(), nonlinearity.grid())?;
    Ok(duhamel_spectral(&u.spectrum(), &nonlinearity.spectrum(), dt)?.to_field())
}

pub fn duhamel_spectral(u: &Spectrum, nonlinearity: &Spectrum, dt: f64) -> Result<Spectrum> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveStep(dt));
    }
    let lambda = u.grid().lambda();
    let coeffs = u
        .coeffs()
        .iter()
        .zip(nonlinearity.coeffs())
        .zip(lambda)
        .map(|((&a, &b), &l)| a * (-dt * l).exp() + b * phi1(dt, l))
        .collect();
    Spectrum::from_coeffs(u.grid(), coeffs)
}

/// Spectral gradient; the Nyquist plane of each differentiated axis is dropped
/// so every component stays real.
pub fn gradient(s: &Spectrum) -> Vec<Spectrum> {
    let grid = s.grid();
    let h = (grid.n() / 2) as i64;
    (0..grid.dim())
        .map(|a| {
            s.map_modes(|i| {
                if grid.int_freq(i)[a] == -h {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, grid.wavevector(i)[a])
                }
            })
        })
        .collect()
}
