//! Heat-regularized space-time white noise and the exact Ornstein-Uhlenbeck
//! transition of `(d/dt + P) X = sqrt(2) xi_r`, `xi_r = e^{-rP} xi`.
//!
//! Normalization: white noise has covariance `<f, g>` in `L^2(T^d_L)`. In the
//! orthonormal basis `e_k = e^{ikx} / L^{d/2}` a stationary mode has variance
//! `e^{-2 r lambda_k} / lambda_k`; Fourier-series coefficients therefore carry
//! an extra factor `L^{-d/2}`, and `E[X(x)^2] = L^{-d} sum_k e^{-2 r lambda_k} / lambda_k`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::field::{Field, Spectrum};
use crate::grid::Grid;

/// Stream ids with this bit set are reserved for initial states.
pub const INITIAL_STREAM_BIT: u64 = 1 << 63;

/// Stream ids with this bit set are reserved for random initial conditions of `u`.
pub const INITIAL_CONDITION_BIT: u64 = 1 << 62;

/// Counter-based Gaussian source keyed by `(seed, stream, step)`.
/// Each step owns a disjoint window of `2^40` ChaCha words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoiseStream {
    pub seed: u64,
    pub stream: u64,
    pub step: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream, step: 0 }
    }

    /// Hermitian standard complex Gaussian array for counter `step`:
    /// `E|g_k|^2 = 1`, `g_{-k} = conj(g_k)`, self-conjugate modes real `N(0,1)`.
    pub fn gaussians_at(&self, grid: &Grid, step: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos((step as u128) << 40);
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let mut g = vec![Complex64::new(0.0, 0.0); grid.len()];
        for i in 0..grid.len() {
            let c = grid.conj_index(i);
            if c == i {
                g[i] = Complex64::new(rng.sample(StandardNormal), 0.0);
            } else if c > i {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                g[i] = Complex64::new(re * half, im * half);
                g[c] = g[i].conj();
            }
        }
        g
    }

    /// Draws at the current counter and advances it.
    pub fn next_gaussians(&mut self, grid: &Grid) -> Vec<Complex64> {
        let g = self.gaussians_at(grid, self.step);
        self.step += 1;
        g
    }
}

/// Standard deviation of the exact OU increment of mode `lambda` over `dt`
/// (orthonormal-basis units).
pub fn ou_sigma(lambda: f64, dt: f64, r: f64) -> f64 {
    ((-2.0 * r * lambda).exp() * (-(-2.0 * dt * lambda).exp_m1()) / lambda).sqrt()
}

/// Stationary standard deviation `e^{-r lambda} / sqrt(lambda)`.
pub fn stationary_sigma(lambda: f64, r: f64) -> f64 {
    (-r * lambda).exp() / lambda.sqrt()
}

/// Stochastic-convolution increment over `dt`, as Fourier-series coefficients.
pub fn ou_increment(grid: &Grid, dt: f64, r: f64, g: &[Complex64]) -> Spectrum {
    let norm = grid.volume().sqrt().recip();
    let coeffs = grid.lambda().iter().zip(g).map(|(&l, z)| z * (ou_sigma(l, dt, r) * norm)).collect();
    Spectrum::from_coeffs(grid, coeffs).expect("length matches grid")
}

/// Exact transition `X' = e^{-dt P} X + sigma g` of the regularized OU process.
pub fn ou_exact_step(x: &Field, dt: f64, r: f64, stream: &mut NoiseStream) -> Result<Field> {
    check(dt, r)?;
    let grid = x.grid();
    let g = stream.next_gaussians(grid);
    let inc = ou_increment(grid, dt, r, &g);
    let coeffs = x
        .coeffs()
        .iter()
        .zip(inc.coeffs())
        .zip(grid.lambda())
        .map(|((&a, &b), &l)| a * (-dt * l).exp() + b)
        .collect();
    Ok(Spectrum::from_coeffs(grid, coeffs)?.to_field())
}

/// Spectral sample from the stationary law (each mode independent).
pub fn sample_stationary_spectrum(grid: &Grid, r: f64, stream: &mut NoiseStream) -> Spectrum {
    let g = stream.next_gaussians(grid);
    let norm = grid.volume().sqrt().recip();
    let coeffs = grid.lambda().iter().zip(&g).map(|(&l, z)| z * (stationary_sigma(l, r) * norm)).collect();
    Spectrum::from_coeffs(grid, coeffs).expect("length matches grid")
}

/// Cold start from the exact stationary law of `X_r`.
pub fn sample_stationary(grid: &Grid, r: f64, stream: &mut NoiseStream) -> Result<Field> {
    if !(r >= 0.0) {
        return Err(Error::InvalidArgument(format!("r = {r} must be non-negative")));
    }
    Ok(sample_stationary_spectrum(grid, r, stream).to_field())
}

fn check(dt: f64, r: f64) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveStep(dt));
    }
    if !(r >= 0.0) {
        return Err(Error::InvalidArgument(format!("r = {r} must be non-negative")));
    }
    Ok(())
}

/// One noise realization shared by several step sizes: increments are drawn on
/// the finest step `h` and aggregated exactly for coarser steps `2^level h`.
#[derive(Clone, Debug)]
pub struct FrozenNoise {
    grid: Grid,
    r: f64,
    h: f64,
    stream: NoiseStream,
}

impl FrozenNoise {
    pub fn new(grid: &Grid, r: f64, h: f64, seed: u64, stream: u64) -> Result<Self> {
        check(h, r)?;
        Ok(Self { grid: grid.clone(), r, h, stream: NoiseStream::new(seed, stream) })
    }

    pub fn fine_step(&self) -> f64 {
        self.h
    }

    /// Increment of coarse step `index` at step size `2^level h`:
    /// `I = sum_i e^{-lambda h (M-1-i)} I_i` over the `M = 2^level` fine increments.
    pub fn increment(&self, level: u32, index: u64) -> Spectrum {
        let m = 1u64 << level;
        let decay: Vec<f64> = self.grid.lambda().iter().map(|&l| (-l * self.h).exp()).collect();
        let mut acc = Spectrum::zeros(&self.grid);
        for i in 0..m {
            let g = self.stream.gaussians_at(&self.grid, index * m + i);
            let inc = ou_increment(&self.grid, self.h, self.r, &g);
            for ((a, b), d) in acc.coeffs_mut().iter_mut().zip(inc.coeffs()).zip(&decay) {
                *a = *a * d + b;
            }
        }
        acc
    }

    /// Stationary initial state, shared across levels.
    pub fn initial(&self) -> Spectrum {
        let mut s = NoiseStream::new(self.stream.seed, self.stream.stream | INITIAL_STREAM_BIT);
        sample_stationary_spectrum(&self.grid, self.r, &mut s)
    }
}
