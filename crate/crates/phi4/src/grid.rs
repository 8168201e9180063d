//! Torus discretization and Fourier index bookkeeping.
//!
//! A [`Grid`] covers the flat torus `T^d_L = (R / L Z)^d` with `N` points per
//! axis. Spectral arrays are stored in FFT order: axis index `i` carries the
//! centered integer frequency `k = i` for `i < N/2` and `k = i - N` otherwise,
//! so the self-conjugate index `N/2` holds frequency `-N/2`.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Default period making the frequencies integer vectors and `lambda_k = 1 + |k|^2`.
pub const DEFAULT_PERIOD: f64 = 2.0 * PI;

#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    n: usize,
    period: f64,
    lambda: Vec<f64>,
    level: Vec<i32>,
    conj: Vec<usize>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    padded: OnceLock<(Grid, PadMap)>,
}

/// Scatter pattern from an `N` grid into its `2N` zero-padded companion.
/// Each coarse mode maps to one padded slot per Nyquist-axis sign choice.
pub(crate) struct PadMap {
    pub(crate) targets: Vec<Vec<usize>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .field("period", &self.inner.period)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.n == other.inner.n
                && self.inner.period == other.inner.period)
    }
}

impl Grid {
    /// Builds a grid of dimension `dim` in {1,2,3} with `n` (a power of two,
    /// at least 2) points per axis and period `period > 0`.
    pub fn new(dim: usize, n: usize, period: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("N = {n} is not a power of two >= 2")));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period {period} must be positive")));
        }
        let len = n.pow(dim as u32);
        let scale = 2.0 * PI / period;
        let mut lambda = Vec::with_capacity(len);
        let mut level = Vec::with_capacity(len);
        let mut conj = Vec::with_capacity(len);
        for idx in 0..len {
            let k = int_freq_of(idx, dim, n);
            let k2: f64 = k[..dim].iter().map(|&ki| (ki as f64 * scale).powi(2)).sum();
            lambda.push(1.0 + k2);
            level.push(block_level(k2));
            let mut c = 0usize;
            for a in 0..dim {
                let i = axis_index(k[a], n);
                let ci = (n - i) % n;
                c = c * n + ci;
            }
            conj.push(c);
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                n,
                period,
                lambda,
                level,
                conj,
                fwd,
                inv,
                padded: OnceLock::new(),
            }),
        })
    }

    /// Grid with the default period `2 pi`.
    pub fn cube(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, DEFAULT_PERIOD)
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn period(&self) -> f64 {
        self.inner.period
    }

    /// Total number of cells `N^d`.
    pub fn len(&self) -> usize {
        self.inner.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Torus volume `L^d`.
    pub fn volume(&self) -> f64 {
        self.inner.period.powi(self.inner.dim as i32)
    }

    /// Quadrature weight of one cell, `(L/N)^d`.
    pub fn cell_volume(&self) -> f64 {
        (self.inner.period / self.inner.n as f64).powi(self.inner.dim as i32)
    }

    /// Eigenvalues `lambda_k = 1 + |2 pi k / L|^2` of `P = 1 - Delta`, in FFT order.
    pub fn lambda(&self) -> &[f64] {
        &self.inner.lambda
    }

    /// Dyadic block index of every mode (`-1` for `|k| <= 1`).
    pub fn levels(&self) -> &[i32] {
        &self.inner.level
    }

    /// Highest non-empty dyadic level.
    pub fn max_level(&self) -> i32 {
        self.inner.level.iter().copied().max().unwrap_or(-1)
    }

    /// Index of the mode `-k`.
    pub fn conj_index(&self, idx: usize) -> usize {
        self.inner.conj[idx]
    }

    /// Centered integer frequency of a linear mode index (unused axes are 0).
    pub fn int_freq(&self, idx: usize) -> [i64; 3] {
        int_freq_of(idx, self.inner.dim, self.inner.n)
    }

    /// Physical wave vector `2 pi k / L`.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let k = self.int_freq(idx);
        let s = 2.0 * PI / self.inner.period;
        [k[0] as f64 * s, k[1] as f64 * s, k[2] as f64 * s]
    }

    /// True when some axis sits on the Nyquist frequency `-N/2`.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let h = (self.inner.n / 2) as i64;
        self.int_freq(idx)[..self.inner.dim].iter().any(|&k| k == -h)
    }

    /// Physical coordinates of a cell index.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let h = self.inner.period / self.inner.n as f64;
        let mut x = [0.0; 3];
        let mut rest = idx;
        for a in (0..self.inner.dim).rev() {
            x[a] = (rest % self.inner.n) as f64 * h;
            rest /= self.inner.n;
        }
        x
    }

    /// The `2N` companion grid used for dealiased products.
    pub fn padded(&self) -> &Grid {
        &self.pad_data().0
    }

    pub(crate) fn pad_map(&self) -> &PadMap {
        &self.pad_data().1
    }

    fn pad_data(&self) -> &(Grid, PadMap) {
        self.inner.padded.get_or_init(|| {
            let big = Grid::new(self.inner.dim, 2 * self.inner.n, self.inner.period)
                .expect("doubling a valid grid stays valid");
            let map = build_pad_map(self.inner.dim, self.inner.n);
            (big, map)
        })
    }

    /// In-place forward transform; output holds Fourier-series coefficients
    /// `u_k = N^{-d} sum_x u(x) e^{-i k x}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let s = 1.0 / self.len() as f64;
        for c in data.iter_mut() {
            *c *= s;
        }
    }

    /// In-place inverse transform, `u(x) = sum_k u_k e^{i k x}`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    fn transform(&self, data: &mut [Complex64], forward: bool) {
        assert_eq!(data.len(), self.len(), "buffer length does not match grid");
        let n = self.inner.n;
        let plan = if forward { &self.inner.fwd } else { &self.inner.inv };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        let dim = self.inner.dim;
        if dim == 1 {
            return;
        }
        // Remaining axes: gather batches of adjacent columns into a
        // contiguous buffer, transform, scatter back.
        const BATCH: usize = 16;
        let mut block = vec![Complex64::new(0.0, 0.0); BATCH * n];
        for axis in (0..dim - 1).rev() {
            let stride = n.pow((dim - 1 - axis) as u32);
            let outer = self.len() / (n * stride);
            let width = BATCH.min(stride);
            let buf = &mut block[..width * n];
            for o in 0..outer {
                let base = o * n * stride;
                for i0 in (0..stride).step_by(width) {
                    for j in 0..n {
                        let row = base + j * stride + i0;
                        for b in 0..width {
                            buf[b * n + j] = data[row + b];
                        }
                    }
                    plan.process_with_scratch(buf, &mut scratch);
                    for j in 0..n {
                        let row = base + j * stride + i0;
                        for b in 0..width {
                            data[row + b] = buf[b * n + j];
                        }
                    }
                }
            }
        }
    }
}

fn axis_index(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

fn int_freq_of(idx: usize, dim: usize, n: usize) -> [i64; 3] {
    let mut k = [0i64; 3];
    let mut rest = idx;
    let h = n / 2;
    for a in (0..dim).rev() {
        let i = rest % n;
        rest /= n;
        k[a] = if i < h { i as i64 } else { i as i64 - n as i64 };
    }
    k
}

/// Sharp dyadic annulus index: `-1` for `|k| <= 1`, else `j` with
/// `2^{j-1} < |k| <= 2^j`.
pub fn block_level(k2: f64) -> i32 {
    let tol = 1e-9 * k2.max(1.0);
    if k2 <= 1.0 + tol {
        return -1;
    }
    let mut j = 0i32;
    while 4f64.powi(j) < k2 - tol {
        j += 1;
    }
    j
}

fn build_pad_map(dim: usize, n: usize) -> PadMap {
    let len = n.pow(dim as u32);
    let big = 2 * n;
    let h = (n / 2) as i64;
    let mut targets = Vec::with_capacity(len);
    for idx in 0..len {
        let k = int_freq_of(idx, dim, n);
        let mut slots: Vec<usize> = vec![0];
        for &ka in k.iter().take(dim) {
            let choices: &[i64] = if ka == -h { &[-h, h] } else { std::slice::from_ref(&ka) };
            let mut next = Vec::with_capacity(slots.len() * choices.len());
            for s in &slots {
                for &c in choices {
                    next.push(s * big + axis_index(c, big));
                }
            }
            slots = next;
        }
        targets.push(slots);
    }
    PadMap { targets }
}
